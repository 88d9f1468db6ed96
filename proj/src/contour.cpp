#include "isinglab/contour.h"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <tuple>

#include "isinglab/errors.h"

namespace isinglab {

EdgeWeights EdgeWeights::uniform(const GraphBundle& b, double x) {
    return EdgeWeights{std::vector<double>(b.dual_edges.size(), x)};
}

double contour_weight(const ContourConfig& p, const EdgeWeights& w) {
    double r = 1;
    for (int e : p.edges) r *= w.x[e];
    return r;
}

InteractionParams::InteractionParams(double J_, double beta_, double lambda_)
    : J(J_), beta(beta_), lambda(lambda_) {
    if (!(J > 0) || !(beta > 0)) throw DomainError("J and beta must be positive");
}

InteractionParams InteractionParams::from_x(double x, double beta, double lambda) {
    if (!(x > 0 && x < 1)) throw DomainError("x must lie in (0,1)");
    return InteractionParams(-std::log(x) / (2 * beta), beta, lambda);
}

// ---------------------------------------------------------------- enumeration

namespace {

struct Bits {
    std::vector<std::uint64_t> w;
    explicit Bits(int n = 0) : w((n + 63) / 64, 0) {}
    bool get(int i) const { return (w[i >> 6] >> (i & 63)) & 1; }
    void flip(int i) { w[i >> 6] ^= std::uint64_t(1) << (i & 63); }
    void set(int i) { w[i >> 6] |= std::uint64_t(1) << (i & 63); }
    void operator^=(const Bits& o) {
        for (std::size_t k = 0; k < w.size(); ++k) w[k] ^= o.w[k];
    }
};

std::vector<int> allowed_columns(const GraphBundle& b, const std::vector<int>& excluded) {
    std::vector<char> ex(b.dual_edges.size(), 0);
    for (int e : excluded)
        if (e >= 0) ex[e] = 1;
    std::vector<int> cols;
    for (std::size_t e = 0; e < b.dual_edges.size(); ++e)
        if (!ex[e]) cols.push_back(static_cast<int>(e));
    return cols;
}

}  // namespace

std::vector<ContourConfig> enumerate_parity(const GraphBundle& b, const std::vector<int>& parity,
                                            const std::vector<int>& excluded_edges) {
    auto cols = allowed_columns(b, excluded_edges);
    const int m = static_cast<int>(cols.size());
    const int nf = static_cast<int>(b.faces.size());
    std::vector<Bits> rows(nf, Bits(m + 1));
    for (int c = 0; c < m; ++c)
        for (auto f : b.dual_edges[cols[c]].faces()) rows[b.face_id(f)].flip(c);
    for (int f = 0; f < nf; ++f)
        if (parity[f] & 1) rows[f].flip(m);

    std::vector<int> pivot_col;
    int r = 0;
    for (int c = 0; c < m && r < nf; ++c) {
        int p = -1;
        for (int i = r; i < nf; ++i)
            if (rows[i].get(c)) {
                p = i;
                break;
            }
        if (p < 0) continue;
        std::swap(rows[r], rows[p]);
        for (int i = 0; i < nf; ++i)
            if (i != r && rows[i].get(c)) rows[i] ^= rows[r];
        pivot_col.push_back(c);
        ++r;
    }
    for (int i = r; i < nf; ++i)
        if (rows[i].get(m)) return {};  // inconsistent parity

    std::vector<char> is_pivot(m, 0);
    for (int c : pivot_col) is_pivot[c] = 1;
    std::vector<int> free_cols;
    for (int c = 0; c < m; ++c)
        if (!is_pivot[c]) free_cols.push_back(c);
    const int k = static_cast<int>(free_cols.size());
    if (k > enumeration_guard_log2())
        throw GuardExceeded("contour space has 2^" + std::to_string(k) +
                            " configurations, guard is 2^" +
                            std::to_string(enumeration_guard_log2()));

    Bits part(m);
    for (int i = 0; i < r; ++i)
        if (rows[i].get(m)) part.set(pivot_col[i]);
    std::vector<Bits> basis;
    for (int j : free_cols) {
        Bits v(m);
        v.set(j);
        for (int i = 0; i < r; ++i)
            if (rows[i].get(j)) v.set(pivot_col[i]);
        basis.push_back(v);
    }

    std::vector<ContourConfig> out;
    out.reserve(std::size_t(1) << k);
    Bits cur = part;
    for (std::uint64_t g = 0; g < (std::uint64_t(1) << k); ++g) {
        if (g > 0) cur ^= basis[__builtin_ctzll(g)];  // Gray code step
        ContourConfig c;
        for (int i = 0; i < m; ++i)
            if (cur.get(i)) c.edges.push_back(cols[i]);
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ContourConfig> enumerate_parity_bruteforce(const GraphBundle& b,
                                                       const std::vector<int>& parity,
                                                       const std::vector<int>& excluded_edges) {
    auto cols = allowed_columns(b, excluded_edges);
    const int m = static_cast<int>(cols.size());
    if (m > 24) throw GuardExceeded("brute-force enumeration limited to 24 edges");
    std::vector<std::array<int, 2>> ends(m);
    for (int c = 0; c < m; ++c) {
        auto fs = b.dual_edges[cols[c]].faces();
        ends[c] = {b.face_id(fs[0]), b.face_id(fs[1])};
    }
    std::vector<ContourConfig> out;
    std::vector<int> deg(b.faces.size());
    for (std::uint32_t s = 0; s < (1u << m); ++s) {
        std::fill(deg.begin(), deg.end(), 0);
        for (int c = 0; c < m; ++c)
            if (s >> c & 1) ++deg[ends[c][0]], ++deg[ends[c][1]];
        bool ok = true;
        for (std::size_t f = 0; f < deg.size() && ok; ++f) ok = ((deg[f] ^ parity[f]) & 1) == 0;
        if (!ok) continue;
        ContourConfig c;
        for (int i = 0; i < m; ++i)
            if (s >> i & 1) c.edges.push_back(cols[i]);
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end());
    return out;
}

static std::vector<int> marked_edge_ids(const GraphBundle& b, const BoundaryCondition& xi) {
    std::vector<int> ex;
    for (const auto& h : xi.marked) ex.push_back(b.edge_id(h.edge));
    return ex;
}

std::vector<ContourConfig> enumerate_contours(const GraphBundle& b) {
    return enumerate_parity(b, std::vector<int>(b.faces.size(), 0), {});
}

std::vector<ContourConfig> enumerate_contours(const GraphBundle& b, const BoundaryCondition& xi) {
    validate_bc(b, xi);
    return enumerate_parity(b, mark_parity(b, xi.marked), marked_edge_ids(b, xi));
}

bool in_space(const GraphBundle& b, const ContourConfig& p, const BoundaryCondition* xi) {
    std::vector<int> deg(b.faces.size(), 0);
    if (xi) {
        deg = mark_parity(b, xi->marked);
        for (const auto& h : xi->marked)
            if (std::binary_search(p.edges.begin(), p.edges.end(), b.edge_id(h.edge))) return false;
    }
    for (int e : p.edges)
        for (auto f : b.dual_edges[e].faces()) deg[b.face_id(f)] ^= 1;
    return std::all_of(deg.begin(), deg.end(), [](int d) { return d == 0; });
}

// ---------------------------------------------------------------- spins

ContourConfig spins_to_contour(const GraphBundle& b, const Spins& sigma, const Spins* boundary) {
    if (sigma.size() != b.domain.size()) throw DomainError("spin vector size mismatch");
    auto spin = [&](Vertex v) {
        int i = b.vertex_id(v);
        if (i >= 0) return sigma[i];
        if (!boundary) return 1;
        auto it = std::lower_bound(b.boundary_vertices.begin(), b.boundary_vertices.end(), v);
        return (*boundary)[it - b.boundary_vertices.begin()];
    };
    ContourConfig c;
    for (std::size_t e = 0; e < b.dual_edges.size(); ++e) {
        auto pe = b.primal_edges[e];
        if (spin(pe[0]) != spin(pe[1])) c.edges.push_back(static_cast<int>(e));
    }
    return c;
}

int GlobalSpins::at(Vertex v) const {
    int i = v.x - x0, j = v.y - y0;
    if (i < 0 || j < 0 || i >= w || j >= h) return 1;
    return s[static_cast<std::size_t>(i) * h + j];
}

GlobalSpins global_spins(const GraphBundle& b, const ContourConfig& p,
                         const AdmissibilityWitness* outer) {
    std::set<DualEdge> cut;
    for (int e : p.edges) cut.insert(b.dual_edges[e]);
    if (outer)
        for (const auto& e : outer->outer_contour) cut.insert(e);
    GlobalSpins g;
    if (b.domain.empty() && !outer) return g;
    int x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    bool first = true;
    auto grow = [&](Vertex v) {
        if (first) x0 = x1 = v.x, y0 = y1 = v.y, first = false;
        x0 = std::min(x0, v.x), x1 = std::max(x1, v.x);
        y0 = std::min(y0, v.y), y1 = std::max(y1, v.y);
    };
    for (auto v : b.domain) grow(v);
    if (outer)
        for (auto v : outer->outer_domain) grow(v);
    for (const auto& e : cut)
        for (auto v : e.primal()) grow(v);
    g.x0 = x0 - 1, g.y0 = y0 - 1, g.w = x1 - x0 + 3, g.h = y1 - y0 + 3;
    g.s.assign(static_cast<std::size_t>(g.w) * g.h, 0);
    auto idx = [&](int i, int j) { return static_cast<std::size_t>(i) * g.h + j; };
    std::deque<std::pair<int, int>> q{{0, 0}};
    g.s[0] = 1;
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    while (!q.empty()) {
        auto [i, j] = q.front();
        q.pop_front();
        for (int k = 0; k < 4; ++k) {
            int a = i + di[k], c = j + dj[k];
            if (a < 0 || c < 0 || a >= g.w || c >= g.h) continue;
            // primal edge between (i,j) and (a,c), midpoint doubled
            DualEdge e{2 * (g.x0 + i) + di[k], 2 * (g.y0 + j) + dj[k]};
            int want = cut.count(e) ? -g.s[idx(i, j)] : g.s[idx(i, j)];
            if (g.s[idx(a, c)] == 0) {
                g.s[idx(a, c)] = want;
                q.push_back({a, c});
            } else if (g.s[idx(a, c)] != want) {
                throw DomainError("contour is not even; spins are not well defined");
            }
        }
    }
    return g;
}

SpinField contour_to_spins(const GraphBundle& b, const ContourConfig& p,
                           const AdmissibilityWitness* outer) {
    auto g = global_spins(b, p, outer);
    SpinField f;
    for (auto v : b.domain) f.domain.push_back(g.at(v));
    for (auto v : b.boundary_vertices) f.boundary.push_back(g.at(v));
    return f;
}

double partition_function_plus(const GraphBundle& b, const EdgeWeights& w) {
    double z = 0;
    for (const auto& c : enumerate_contours(b)) z += contour_weight(c, w);
    return z;
}

double partition_function_dobrushin(const GraphBundle& b, const EdgeWeights& w,
                                    const BoundaryCondition& xi) {
    double z = 0;
    for (const auto& c : enumerate_contours(b, xi)) z += contour_weight(c, w);
    return z;
}

// ---------------------------------------------------------------- potentials

static int even_floor(int v) { return v - (((v % 2) + 2) % 2); }

std::vector<DualEdge> canonical_pattern(std::vector<DualEdge> edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    if (edges.empty()) return edges;
    int dx = even_floor(edges.front().mx2), dy = even_floor(edges.front().my2);
    for (auto& e : edges) e = e.translated(-dx, -dy);
    return edges;
}

static PatternPotential make_potential(const std::vector<Pattern>& raw) {
    std::map<std::vector<DualEdge>, double> acc;
    for (const auto& p : raw) {
        for (const auto& e : p.edges)
            if (!e.valid()) throw DomainError("pattern edge " + to_string(e) + " is not a midpoint");
        if (p.edges.empty()) continue;  // constants are dropped
        acc[canonical_pattern(p.edges)] += p.value;
    }
    PatternPotential out;
    for (auto& [k, v] : acc)
        if (v != 0) out.patterns.push_back({k, v});
    return out;
}

PotentialU make_potential_u(const std::vector<Pattern>& raw) { return {make_potential(raw)}; }
PotentialV make_potential_v(const std::vector<Pattern>& raw) { return {make_potential(raw)}; }

double PatternPotential::range() const {
    double r = 0;
    for (const auto& p : patterns)
        for (const auto& a : p.edges)
            for (const auto& c : p.edges)
                r = std::max(r, 0.5 * std::hypot(a.mx2 - c.mx2, a.my2 - c.my2));
    return r;
}

PotentialU v_to_u(const PotentialV& v) {
    std::vector<Pattern> raw;
    for (const auto& p : v.patterns) {
        const int k = static_cast<int>(p.edges.size());
        if (k > 20) throw GuardExceeded("V pattern too large for subset expansion");
        for (std::uint32_t s = 1; s < (1u << k); ++s) {
            Pattern q;
            for (int i = 0; i < k; ++i)
                if (s >> i & 1) q.edges.push_back(p.edges[i]);
            q.value = std::pow(-2.0, static_cast<double>(q.edges.size())) * p.value;
            raw.push_back(std::move(q));
        }
    }
    return make_potential_u(raw);
}

double potential_value(const PatternPotential& u, const std::vector<DualEdge>& x) {
    auto c = canonical_pattern(x);
    auto it = std::lower_bound(u.patterns.begin(), u.patterns.end(), c,
                               [](const Pattern& p, const std::vector<DualEdge>& k) { return p.edges < k; });
    if (it != u.patterns.end() && it->edges == c) return it->value;
    return 0;
}

std::vector<Translate> translates_touching(const PatternPotential& u,
                                           const std::vector<DualEdge>& touch) {
    std::set<std::tuple<int, int, int>> seen;
    for (const auto& t : touch)
        for (std::size_t pi = 0; pi < u.patterns.size(); ++pi)
            for (const auto& p : u.patterns[pi].edges)
                if (p.orient() == t.orient())
                    seen.insert({static_cast<int>(pi), t.mx2 - p.mx2, t.my2 - p.my2});
    std::vector<Translate> out;
    for (auto [pi, dx, dy] : seen) {
        Translate tr;
        tr.pattern = pi;
        tr.value = u.patterns[pi].value;
        for (const auto& p : u.patterns[pi].edges) tr.edges.push_back(p.translated(dx, dy));
        out.push_back(std::move(tr));
    }
    return out;
}

static bool sorted_contains(const std::vector<DualEdge>& v, const DualEdge& e) {
    return std::binary_search(v.begin(), v.end(), e);
}

double boundary_potential(const PotentialU& u, const std::vector<DualEdge>& p_o,
                          const std::vector<DualEdge>& x) {
    if (x.empty()) return 0;
    std::vector<DualEdge> xs = x, po = p_o;
    std::sort(xs.begin(), xs.end());
    std::sort(po.begin(), po.end());
    double s = 0;
    for (const auto& t : translates_touching(u, {xs.front()})) {
        bool ok = std::includes(t.edges.begin(), t.edges.end(), xs.begin(), xs.end());
        for (std::size_t i = 0; ok && i < t.edges.size(); ++i)
            ok = sorted_contains(xs, t.edges[i]) || sorted_contains(po, t.edges[i]);
        if (ok) s += t.value;
    }
    return s;
}

double boundary_potential_bruteforce(const PotentialU& u, const std::vector<DualEdge>& p_o,
                                     const std::vector<DualEdge>& x) {
    if (x.empty()) return 0;
    std::vector<DualEdge> rest;
    for (const auto& e : p_o)
        if (std::find(x.begin(), x.end(), e) == x.end()) rest.push_back(e);
    if (rest.size() > 22) throw GuardExceeded("brute-force boundary potential limited to 22 edges");
    double s = 0;
    for (std::uint32_t m = 0; m < (1u << rest.size()); ++m) {
        std::vector<DualEdge> y = x;
        for (std::size_t i = 0; i < rest.size(); ++i)
            if (m >> i & 1) y.push_back(rest[i]);
        s += potential_value(u, y);
    }
    return s;
}

std::vector<DualEdge> edges_of(const GraphBundle& b, const ContourConfig& p) {
    std::vector<DualEdge> out;
    for (int e : p.edges) out.push_back(b.dual_edges[e]);
    std::sort(out.begin(), out.end());
    return out;
}

ContourConfig contour_from_edges(const GraphBundle& b, const std::vector<DualEdge>& e) {
    ContourConfig c;
    for (const auto& d : e) {
        int id = b.edge_id(d);
        if (id < 0) throw DomainError("edge " + to_string(d) + " is not in E*_Omega");
        c.edges.push_back(id);
    }
    std::sort(c.edges.begin(), c.edges.end());
    c.edges.erase(std::unique(c.edges.begin(), c.edges.end()), c.edges.end());
    return c;
}

double interaction_energy(const GraphBundle& b, const ContourConfig& p, const PotentialU& u,
                          const std::vector<DualEdge>& p_o) {
    if (u.empty() || p.edges.empty()) return 0;
    auto pe = edges_of(b, p);
    std::vector<DualEdge> po = p_o;
    std::sort(po.begin(), po.end());
    double s = 0;
    for (const auto& t : translates_touching(u, pe)) {
        bool ok = true;
        for (std::size_t i = 0; ok && i < t.edges.size(); ++i)
            ok = sorted_contains(pe, t.edges[i]) || sorted_contains(po, t.edges[i]);
        if (ok) s += t.value;
    }
    return s;
}

double interacting_contour_weight(const GraphBundle& b, const ContourConfig& p,
                                  const InteractionParams& prm, const PotentialU& u,
                                  const std::vector<DualEdge>& p_o) {
    double w = std::pow(prm.x(), static_cast<double>(p.edges.size()));
    if (prm.lambda == 0) return w;
    return w * std::exp(-prm.beta * prm.lambda * interaction_energy(b, p, u, p_o));
}

}  // namespace isinglab
