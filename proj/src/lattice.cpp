#include "isinglab/lattice.h"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <map>
#include <set>

#include "isinglab/errors.h"

namespace isinglab {

int enumeration_guard_log2() {
    if (const char* s = std::getenv("ISING_LAB_GUARD")) {
        char* end = nullptr;
        long v = std::strtol(s, &end, 10);
        if (end != s && v > 0 && v < 63) return static_cast<int>(v);
    }
    return 24;
}

std::array<Face, 2> DualEdge::faces() const {
    if (orient() == Orient::Horizontal) return {Face{mx2 - 1, my2}, Face{mx2 + 1, my2}};
    return {Face{mx2, my2 - 1}, Face{mx2, my2 + 1}};
}

std::array<Vertex, 2> DualEdge::primal() const {
    if (orient() == Orient::Horizontal)
        return {Vertex{mx2 / 2, (my2 - 1) / 2}, Vertex{mx2 / 2, (my2 + 1) / 2}};
    return {Vertex{(mx2 - 1) / 2, my2 / 2}, Vertex{(mx2 + 1) / 2, my2 / 2}};
}

DualEdge edge_of(Face f, Side s) {
    switch (s) {
        case N: return {f.x2, f.y2 + 1};
        case E: return {f.x2 + 1, f.y2};
        case S: return {f.x2, f.y2 - 1};
        default: return {f.x2 - 1, f.y2};
    }
}

int side_of(Face f, DualEdge e) {
    int dx = e.mx2 - f.x2, dy = e.my2 - f.y2;
    if (dx == 0 && dy == 1) return N;
    if (dx == 1 && dy == 0) return E;
    if (dx == 0 && dy == -1) return S;
    if (dx == -1 && dy == 0) return W;
    return -1;
}

Face across(Face f, DualEdge e) { return Face{2 * e.mx2 - f.x2, 2 * e.my2 - f.y2}; }

Side ne_sw_partner(Side s) {
    switch (s) {
        case N: return E;
        case E: return N;
        case S: return W;
        default: return S;
    }
}

char side_name(Side s) { return "NESW"[s]; }

Side HalfEdge::side() const {
    int s = side_of(face, edge);
    if (s < 0) throw DomainError("half-edge " + to_string(*this) + " is not incident");
    return static_cast<Side>(s);
}

Domain make_domain(std::vector<Vertex> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

Domain rect_domain(int x0, int y0, int x1, int y1) {
    Domain d;
    for (int x = x0; x <= x1; ++x)
        for (int y = y0; y <= y1; ++y) d.push_back({x, y});
    return make_domain(std::move(d));
}

static int lookup(const std::unordered_map<std::uint64_t, int>& m, std::uint64_t k) {
    auto it = m.find(k);
    return it == m.end() ? -1 : it->second;
}

int GraphBundle::vertex_id(Vertex v) const { return lookup(vertex_index, pack(v.x, v.y)); }
int GraphBundle::face_id(Face f) const { return lookup(face_index, pack(f.x2, f.y2)); }
int GraphBundle::edge_id(DualEdge e) const { return lookup(edge_index, pack(e.mx2, e.my2)); }

int GraphBundle::half_edge_id(const HalfEdge& h) const {
    int s = side_of(h.face, h.edge);
    int f = face_id(h.face);
    if (s < 0 || f < 0) return -1;
    return 4 * f + s;
}

HalfEdge GraphBundle::half_edge(int id) const {
    Face f = faces.at(id / 4);
    return {f, edge_of(f, static_cast<Side>(id % 4))};
}

std::vector<DualEdge> dual_edges_of(const Domain& v) {
    std::set<DualEdge> out;
    for (auto p : v) {
        // the four primal edges at p, written as doubled midpoints
        out.insert({2 * p.x + 1, 2 * p.y});
        out.insert({2 * p.x - 1, 2 * p.y});
        out.insert({2 * p.x, 2 * p.y + 1});
        out.insert({2 * p.x, 2 * p.y - 1});
    }
    return {out.begin(), out.end()};
}

GraphBundle build_graphs(const Domain& domain) {
    GraphBundle b;
    b.domain = make_domain(domain);
    for (std::size_t i = 0; i < b.domain.size(); ++i)
        b.vertex_index[pack(b.domain[i].x, b.domain[i].y)] = static_cast<int>(i);

    b.dual_edges = dual_edges_of(b.domain);
    std::set<Face> faces;
    std::set<Vertex> bnd;
    for (std::size_t i = 0; i < b.dual_edges.size(); ++i) {
        const auto& e = b.dual_edges[i];
        b.edge_index[pack(e.mx2, e.my2)] = static_cast<int>(i);
        auto pe = e.primal();
        b.primal_edges.push_back(pe);
        for (auto v : pe)
            if (b.vertex_id(v) < 0) bnd.insert(v);
        for (auto f : e.faces()) faces.insert(f);
    }
    b.faces.assign(faces.begin(), faces.end());
    b.boundary_vertices.assign(bnd.begin(), bnd.end());
    for (std::size_t i = 0; i < b.faces.size(); ++i)
        b.face_index[pack(b.faces[i].x2, b.faces[i].y2)] = static_cast<int>(i);

    for (std::size_t f = 0; f < b.faces.size(); ++f)
        for (int s = 0; s < 4; ++s)
            for (int t = s + 1; t < 4; ++t)
                b.short_edges.push_back({static_cast<int>(4 * f) + s, static_cast<int>(4 * f) + t});

    for (const auto& e : b.dual_edges) {
        auto fs = e.faces();
        int lo, hi;
        if (e.orient() == Orient::Horizontal) {
            lo = 4 * b.face_id(fs[0]) + E;
            hi = 4 * b.face_id(fs[1]) + W;
        } else {
            lo = 4 * b.face_id(fs[0]) + N;
            hi = 4 * b.face_id(fs[1]) + S;
        }
        b.long_edges.push_back({lo, hi});
    }
    return b;
}

void validate_bc(const GraphBundle& b, const BoundaryCondition& xi) {
    if (xi.marked.empty() || xi.marked.size() % 2 != 0)
        throw DomainError("boundary condition needs an even, nonzero number of marked half-edges");
    std::set<HalfEdge> seen;
    for (const auto& h : xi.marked) {
        if (b.half_edge_id(h) < 0)
            throw DomainError("marked half-edge " + to_string(h) + " is not in V_cluster");
        if (!seen.insert(h).second) throw DomainError("marked half-edges repeat: " + to_string(h));
    }
}

std::vector<int> mark_parity(const GraphBundle& b, const std::vector<HalfEdge>& marks) {
    std::vector<int> par(b.faces.size(), 0);
    for (const auto& h : marks) {
        int f = b.face_id(h.face);
        if (f >= 0) par[f] ^= 1;
    }
    return par;
}

namespace {

// T-join on a graph with nodes 0..n-1; returns chosen edge indices or nullopt.
std::optional<std::vector<int>> t_join(int n, const std::vector<std::array<int, 2>>& edges,
                                       std::vector<int> odd) {
    std::vector<std::vector<std::pair<int, int>>> adj(n);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        adj[edges[i][0]].push_back({edges[i][1], static_cast<int>(i)});
        adj[edges[i][1]].push_back({edges[i][0], static_cast<int>(i)});
    }
    std::vector<int> parent_edge(n, -2), order;
    // root each component at an odd node when it has one so the tree paths are shortest
    std::vector<int> roots;
    for (int v = 0; v < n; ++v)
        if (odd[v]) roots.push_back(v);
    for (int v = 0; v < n; ++v) roots.push_back(v);
    for (int r : roots) {
        if (parent_edge[r] != -2) continue;
        parent_edge[r] = -1;
        std::deque<int> q{r};
        std::size_t start = order.size();
        while (!q.empty()) {
            int u = q.front();
            q.pop_front();
            order.push_back(u);
            for (auto [w, ei] : adj[u])
                if (parent_edge[w] == -2) {
                    parent_edge[w] = ei;
                    q.push_back(w);
                }
        }
        int cnt = 0;
        for (std::size_t k = start; k < order.size(); ++k) cnt += odd[order[k]];
        if (cnt % 2) return std::nullopt;
    }
    std::vector<int> chosen;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        int v = *it;
        if (odd[v] && parent_edge[v] >= 0) {
            int ei = parent_edge[v];
            chosen.push_back(ei);
            int u = edges[ei][0] == v ? edges[ei][1] : edges[ei][0];
            odd[u] ^= 1;
            odd[v] = 0;
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace

std::optional<AdmissibilityWitness> check_admissible(const GraphBundle& b,
                                                     const BoundaryCondition& xi, int margin) {
    validate_bc(b, xi);
    // marks must sit on the boundary: a dual edge between two sites of Omega
    // cannot be continued by P_o
    for (const auto& h : xi.marked) {
        auto pe = h.edge.primal();
        if (b.contains(pe[0]) && b.contains(pe[1])) return std::nullopt;
    }
    AdmissibilityWitness w;
    w.margin = margin;
    int x0 = b.domain.front().x, x1 = x0, y0 = b.domain.front().y, y1 = y0;
    for (auto v : b.domain) {
        x0 = std::min(x0, v.x), x1 = std::max(x1, v.x);
        y0 = std::min(y0, v.y), y1 = std::max(y1, v.y);
    }
    w.outer_domain = rect_domain(x0 - margin, y0 - margin, x1 + margin, y1 + margin);
    GraphBundle outer = build_graphs(w.outer_domain);
    std::set<DualEdge> marked_edges;
    for (const auto& h : xi.marked) marked_edges.insert(h.edge);

    // P_o may use edges touching Omega_o \ Omega but not edges of E*_Omega,
    // except the marked ones (which P never uses).
    std::vector<std::array<int, 2>> gedges;
    std::vector<DualEdge> gdual;
    for (const auto& e : outer.dual_edges) {
        auto pe = e.primal();
        bool touches_outside = !b.contains(pe[0]) || !b.contains(pe[1]);
        if (!touches_outside) continue;
        if (b.edge_id(e) >= 0 && !marked_edges.count(e)) continue;
        auto fs = e.faces();
        gedges.push_back({outer.face_id(fs[0]), outer.face_id(fs[1])});
        gdual.push_back(e);
    }
    std::vector<int> odd(outer.faces.size(), 0);
    for (const auto& h : xi.marked) {
        int f = outer.face_id(h.face);
        if (f < 0) return std::nullopt;
        odd[f] ^= 1;
    }

    // First try with the marked edges themselves in P_o, so that P_o continues
    // the interface out of Omega; fall back to a free T-join.
    auto attempt = [&](bool force) -> std::optional<std::vector<DualEdge>> {
        std::vector<int> par = odd;
        std::vector<std::array<int, 2>> ge;
        std::vector<DualEdge> gd, forced;
        for (std::size_t i = 0; i < gdual.size(); ++i) {
            if (force && marked_edges.count(gdual[i])) {
                forced.push_back(gdual[i]);
                par[gedges[i][0]] ^= 1;
                par[gedges[i][1]] ^= 1;
            } else {
                ge.push_back(gedges[i]);
                gd.push_back(gdual[i]);
            }
        }
        auto tj = t_join(static_cast<int>(outer.faces.size()), ge, par);
        if (!tj) return std::nullopt;
        std::vector<DualEdge> out = forced;
        for (int i : *tj) out.push_back(gd[i]);
        std::sort(out.begin(), out.end());
        return out;
    };
    auto po = attempt(true);
    if (!po) po = attempt(false);
    if (!po) return std::nullopt;
    w.outer_contour = *po;
    return w;
}

std::string to_string(const DualEdge& e) {
    return "[" + std::to_string(e.mx2) + "," + std::to_string(e.my2) + "]";
}

std::string to_string(const HalfEdge& h) {
    return "{face:[" + std::to_string(h.face.x2) + "," + std::to_string(h.face.y2) +
           "],edge:" + to_string(h.edge) + "}";
}

}  // namespace isinglab

namespace isinglab {

std::vector<Domain> fixed_polyominoes(int size) {
    std::set<Domain> level;
    if (size <= 0) return {Domain{}};
    level.insert(Domain{Vertex{0, 0}});
    for (int k = 1; k < size; ++k) {
        std::set<Domain> next;
        for (const auto& d : level)
            for (auto v : d)
                for (auto w : {Vertex{v.x + 1, v.y}, Vertex{v.x - 1, v.y}, Vertex{v.x, v.y + 1},
                               Vertex{v.x, v.y - 1}}) {
                    if (std::binary_search(d.begin(), d.end(), w)) continue;
                    Domain g = d;
                    g.push_back(w);
                    int mx = w.x, my = w.y;
                    for (auto u : g) mx = std::min(mx, u.x), my = std::min(my, u.y);
                    for (auto& u : g) u = {u.x - mx, u.y - my};
                    next.insert(make_domain(std::move(g)));
                }
        level = std::move(next);
    }
    return {level.begin(), level.end()};
}

std::vector<HalfEdge> external_half_edges(const GraphBundle& b) {
    std::vector<HalfEdge> out;
    for (int id = 0; id < b.n_cluster(); ++id) {
        HalfEdge h = b.half_edge(id);
        if (b.edge_id(h.edge) < 0) out.push_back(h);
    }
    return out;
}

}  // namespace isinglab
