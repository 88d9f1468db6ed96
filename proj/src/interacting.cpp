#include "isinglab/interacting.h"

#include <algorithm>
#include <bit>
#include <limits>
#include <map>
#include <set>
#include <string>

#include "isinglab/errors.h"

namespace isinglab {

InteractionFrame InteractionFrame::full(const GraphBundle& b, const std::vector<DualEdge>& p_o) {
    InteractionFrame fr;
    for (int e = 0; e < static_cast<int>(b.dual_edges.size()); ++e) fr.live.push_back(e);
    fr.boundary = p_o;
    std::sort(fr.boundary.begin(), fr.boundary.end());
    return fr;
}

std::vector<Atom> interaction_atoms(const GraphBundle& b, const PotentialU& u,
                                    const InteractionFrame& fr, const std::vector<int>& touch) {
    const auto& ids = touch.empty() ? fr.live : touch;
    std::vector<DualEdge> te;
    for (int e : ids) te.push_back(b.dual_edges[e]);
    std::map<std::vector<int>, double> acc;
    for (const auto& t : translates_touching(u, te)) {
        std::vector<int> y;
        bool ok = true;
        for (const auto& e : t.edges) {
            int id = b.edge_id(e);
            if (id >= 0 && std::binary_search(fr.live.begin(), fr.live.end(), id))
                y.push_back(id);
            else if (!std::binary_search(fr.boundary.begin(), fr.boundary.end(), e))
                ok = false;
        }
        if (!ok || y.empty()) continue;
        std::sort(y.begin(), y.end());
        acc[y] += t.value;
    }
    std::vector<Atom> out;
    for (auto& [y, v] : acc)
        if (v != 0) out.push_back({y, v});
    return out;
}

namespace {

bool overlaps(const std::vector<int>& a, const std::vector<int>& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return true;
        if (a[i] < b[j])
            ++i;
        else
            ++j;
    }
    return false;
}

std::vector<std::vector<int>> overlap_graph(const std::vector<Atom>& atoms) {
    std::vector<std::vector<int>> adj(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i)
        for (std::size_t j = i + 1; j < atoms.size(); ++j)
            if (overlaps(atoms[i].edges, atoms[j].edges)) {
                adj[i].push_back(static_cast<int>(j));
                adj[j].push_back(static_cast<int>(i));
            }
    return adj;
}

// Every connected vertex subset exactly once (ESU enumeration).
template <class Emit>
void connected_subsets(const std::vector<std::vector<int>>& adj, Emit&& emit) {
    const int n = static_cast<int>(adj.size());
    const std::size_t cap = std::size_t(1) << enumeration_guard_log2();
    std::size_t count = 0;
    std::vector<int> near(n, 0);  // members of sub equal or adjacent to each vertex
    std::vector<int> sub;
    auto add = [&](int w, int d) {
        near[w] += d;
        for (int u : adj[w]) near[u] += d;
    };
    auto extend = [&](auto&& self, std::vector<int> ext, int v) -> void {
        if (++count > cap)
            throw GuardExceeded("polymer enumeration exceeds 2^" +
                                std::to_string(enumeration_guard_log2()) + " subsets");
        emit(sub);
        while (!ext.empty()) {
            int w = ext.back();
            ext.pop_back();
            std::vector<int> next = ext;
            for (int u : adj[w])
                if (u > v && near[u] == 0) next.push_back(u);
            sub.push_back(w);
            add(w, 1);
            self(self, next, v);
            add(w, -1);
            sub.pop_back();
        }
    };
    for (int v = 0; v < n; ++v) {
        std::vector<int> ext;
        for (int u : adj[v])
            if (u > v) ext.push_back(u);
        sub.push_back(v);
        add(v, 1);
        extend(extend, ext, v);
        add(v, -1);
        sub.pop_back();
    }
}

std::vector<int> union_of(const std::vector<Atom>& atoms, const std::vector<int>& sub) {
    std::set<int> s;
    for (int i : sub) s.insert(atoms[i].edges.begin(), atoms[i].edges.end());
    return {s.begin(), s.end()};
}

}  // namespace

double ubar(const GraphBundle& b, const std::vector<int>& x_in, const EdgeWeights& w,
            const InteractionParams& prm, const PotentialU& u, const InteractionFrame& fr) {
    if (x_in.empty()) return 0;
    std::vector<int> x = x_in;
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
    std::vector<Atom> atoms;
    for (auto& a : interaction_atoms(b, u, fr, x))
        if (std::includes(x.begin(), x.end(), a.edges.begin(), a.edges.end())) atoms.push_back(a);
    const double bl = prm.beta * prm.lambda;
    std::vector<double> fac;
    for (const auto& a : atoms) fac.push_back(std::expm1(-bl * a.u));
    double s = 0;
    connected_subsets(overlap_graph(atoms), [&](const std::vector<int>& sub) {
        if (union_of(atoms, sub) != x) return;
        double p = 1;
        for (int i : sub) p *= fac[i];
        s += p;
    });
    if (s == 0) return 0;
    for (int e : x) s *= w.x[e];
    return s;
}

double ubar(const GraphBundle& b, const std::vector<int>& x, const InteractionParams& prm,
            const PotentialU& u, const std::vector<DualEdge>& p_o) {
    return ubar(b, x, EdgeWeights::uniform(b, prm.x()), prm, u, InteractionFrame::full(b, p_o));
}

InteractingAction build_interacting_action(const GraphBundle& b, const EdgeWeights& w,
                                           const InteractionParams& prm, const PotentialU& u,
                                           const InteractionFrame& fr) {
    InteractingAction act;
    EdgeWeights wl = w;
    for (std::size_t e = 0; e < wl.x.size(); ++e)
        if (!std::binary_search(fr.live.begin(), fr.live.end(), static_cast<int>(e))) wl.x[e] = 0;
    act.A = action_matrix(b, wl);
    if (u.empty() || prm.lambda == 0 || prm.beta == 0) return act;
    auto atoms = interaction_atoms(b, u, fr);
    std::set<std::vector<int>> supports;
    connected_subsets(overlap_graph(atoms),
                      [&](const std::vector<int>& sub) { supports.insert(union_of(atoms, sub)); });
    for (const auto& x : supports) {
        double v = ubar(b, x, w, prm, u, fr);
        if (v != 0) act.polymers.push_back({x, v});
    }
    return act;
}

InteractingAction build_interacting_action(const GraphBundle& b, const InteractionParams& prm,
                                           const PotentialU& u, const std::vector<DualEdge>& p_o) {
    return build_interacting_action(b, EdgeWeights::uniform(b, prm.x()), prm, u,
                                    InteractionFrame::full(b, p_o));
}

std::vector<PolymerGroup> polymer_groups(const GraphBundle& b, const InteractingAction& act,
                                         const std::vector<int>& excluded) {
    if (b.dual_edges.size() > 63) throw GuardExceeded("polymer selections limited to 63 dual edges");
    using Mask = std::uint64_t;
    Mask ex = 0;
    for (int e : excluded) ex |= Mask(1) << e;
    const std::size_t cap = std::size_t(1) << enumeration_guard_log2();
    std::map<Mask, double> dp{{0, 1.0}};
    for (const auto& p : act.polymers) {
        Mask m = 0;
        for (int e : p.support) m |= Mask(1) << e;
        if (m & ex) continue;
        std::vector<std::pair<Mask, double>> add;
        for (const auto& [z, v] : dp)
            if (!(z & m)) add.push_back({z | m, v * p.value});
        for (auto& [z, v] : add) dp[z] += v;
        if (dp.size() > cap) throw GuardExceeded("polymer selections exceed the enumeration guard");
    }
    std::vector<PolymerGroup> out;
    for (const auto& [z, v] : dp) {
        if (v == 0) continue;
        PolymerGroup g;
        g.coeff = v;
        for (Mask r = z; r; r &= r - 1) {
            int e = std::countr_zero(r);
            g.gens.push_back(b.long_edges[e][0]);
            g.gens.push_back(b.long_edges[e][1]);
        }
        out.push_back(std::move(g));
    }
    return out;
}

double interacting_integral(const GaussianState& gs, const std::vector<PolymerGroup>& groups,
                            const std::vector<int>& ins) {
    double total = 0;
    std::vector<int> seq;
    for (const auto& g : groups) {
        seq = ins;
        seq.insert(seq.end(), g.gens.begin(), g.gens.end());
        total += g.coeff * gs.integrate(seq);
    }
    return total;
}

double interacting_integral(const GraphBundle& b, const InteractingAction& act,
                            const std::vector<int>& ins, const std::vector<int>& extra) {
    if (sort_sign(extra) == 0) return 0.0;
    std::vector<int> seq = ins;
    for (int e : extra) {
        seq.push_back(b.long_edges[e][0]);
        seq.push_back(b.long_edges[e][1]);
    }
    return interacting_integral(gaussian_state(act.A), polymer_groups(b, act, extra), seq);
}

double interacting_signed_weight(const GraphBundle& b, const ContourConfig& p,
                                 const std::vector<HalfEdge>& marks, const InteractionParams& prm,
                                 const PotentialU& u, const std::vector<DualEdge>& p_o) {
    int s = reduced_weight_sign(b, marks, p);
    if (s == 0) return 0;
    return s * interacting_contour_weight(b, p, prm, u, p_o);
}

double interacting_insertion_sum_contour(const GraphBundle& b, const InteractionParams& prm,
                                         const PotentialU& u, const std::vector<DualEdge>& p_o,
                                         const HalfEdge& h_in, const HalfEdge& h) {
    BoundaryCondition xi{{h_in, h}};
    double s = 0;
    for (const auto& p : enumerate_contours(b, xi))
        s += interacting_signed_weight(b, p, xi.marked, prm, u, p_o);
    return s;
}

double interacting_insertion_sum(const GraphBundle& b, const InteractionParams& prm,
                                 const PotentialU& u, const std::vector<DualEdge>& p_o,
                                 const HalfEdge& h_in, const HalfEdge& h) {
    auto act = build_interacting_action(b, prm, u, p_o);
    return interacting_integral(b, act, cluster_ids(b, {h_in, h}));
}

double interacting_expectation(const GraphBundle& b, const InteractionParams& prm,
                               const PotentialU& u, const std::vector<DualEdge>& p_o,
                               const std::vector<HalfEdge>& insertions) {
    auto act = build_interacting_action(b, prm, u, p_o);
    double den = interacting_integral(b, act, {});
    if (den == 0) throw NumericalFault("interacting partition integral vanishes");
    return interacting_integral(b, act, cluster_ids(b, insertions)) / den;
}

int steiner_size(const std::vector<DualEdge>& x_in) {
    std::vector<DualEdge> x = x_in;
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
    if (x.empty()) return 0;
    int x0 = std::numeric_limits<int>::max(), y0 = x0, x1 = std::numeric_limits<int>::min(), y1 = x1;
    for (const auto& e : x)
        for (auto f : e.faces()) {
            x0 = std::min(x0, f.x2), x1 = std::max(x1, f.x2);
            y0 = std::min(y0, f.y2), y1 = std::max(y1, f.y2);
        }
    x0 -= 2, y0 -= 2, x1 += 2, y1 += 2;
    const int W = (x1 - x0) / 2 + 1, H = (y1 - y0) / 2 + 1, n = W * H;
    auto node = [&](Face f) { return ((f.y2 - y0) / 2) * W + (f.x2 - x0) / 2; };
    auto face = [&](int v) { return Face{x0 + 2 * (v % W), y0 + 2 * (v / W)}; };
    std::set<DualEdge> xs(x.begin(), x.end());
    // components of X through shared faces
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (const auto& e : x) {
        auto fs = e.faces();
        parent[find(node(fs[0]))] = find(node(fs[1]));
    }
    std::vector<int> terms;
    {
        std::set<int> roots;
        for (const auto& e : x) {
            int r = find(node(e.faces()[0]));
            if (roots.insert(r).second) terms.push_back(node(e.faces()[0]));
        }
    }
    const int k = static_cast<int>(terms.size());
    if (k == 1) return static_cast<int>(x.size());
    if (k > 12) throw GuardExceeded("Steiner search limited to 12 components");
    auto neighbors = [&](int v, auto&& f) {
        Face c = face(v);
        for (int s = 0; s < 4; ++s) {
            DualEdge e = edge_of(c, static_cast<Side>(s));
            Face o = across(c, e);
            if (o.x2 < x0 || o.x2 > x1 || o.y2 < y0 || o.y2 > y1) continue;
            f(node(o), xs.count(e) ? 0 : 1);
        }
    };
    const int INF = std::numeric_limits<int>::max() / 4;
    // Dijkstra with buckets; edge weights are 0 or 1
    auto relax = [&](std::vector<int>& d) {
        std::vector<std::vector<int>> bucket;
        auto push = [&](int v) {
            if (static_cast<int>(bucket.size()) <= d[v]) bucket.resize(d[v] + 1);
            bucket[d[v]].push_back(v);
        };
        for (int v = 0; v < n; ++v)
            if (d[v] < INF) push(v);
        for (std::size_t c = 0; c < bucket.size(); ++c)
            for (std::size_t i = 0; i < bucket[c].size(); ++i) {
                int v = bucket[c][i];
                if (d[v] != static_cast<int>(c)) continue;
                neighbors(v, [&](int o, int wgt) {
                    if (d[v] + wgt < d[o]) {
                        d[o] = d[v] + wgt;
                        push(o);
                    }
                });
            }
    };
    std::vector<std::vector<int>> dp(std::size_t(1) << k, std::vector<int>(n, INF));
    for (int i = 0; i < k; ++i) {
        dp[1u << i][terms[i]] = 0;
        relax(dp[1u << i]);
    }
    for (unsigned S = 1; S < (1u << k); ++S) {
        if (std::popcount(S) < 2) continue;
        auto& d = dp[S];
        for (unsigned A = (S - 1) & S; A; A = (A - 1) & S) {
            if (!(A & (S & -S))) continue;
            const auto& da = dp[A];
            const auto& db = dp[S ^ A];
            for (int v = 0; v < n; ++v)
                if (da[v] < INF && db[v] < INF) d[v] = std::min(d[v], da[v] + db[v]);
        }
        relax(d);
    }
    return static_cast<int>(x.size()) + dp[(1u << k) - 1][terms[0]];
}

std::vector<PolymerRow> polymer_table(const GraphBundle& b, const InteractingAction& act) {
    std::vector<PolymerRow> rows;
    for (const auto& p : act.polymers) {
        PolymerRow r;
        for (int e : p.support) r.support.push_back(b.dual_edges[e]);
        r.value = p.value;
        r.t = steiner_size(r.support);
        rows.push_back(std::move(r));
    }
    return rows;
}

DecayFit fit_decay(const std::vector<PolymerRow>& rows) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    DecayFit f;
    for (const auto& r : rows) {
        if (r.value == 0) continue;
        double x = r.t, y = std::log(std::abs(r.value));
        sx += x, sy += y, sxx += x * x, sxy += x * y;
        ++f.points;
    }
    if (f.points < 2) return f;
    double den = f.points * sxx - sx * sx;
    if (den == 0) return f;
    f.slope = (f.points * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / f.points;
    return f;
}

}  // namespace isinglab
