#include "isinglab/explorer.h"

#include <algorithm>
#include <map>
#include <set>

#include "isinglab/errors.h"

namespace isinglab {

InterfacePath InterfacePath::prefix(int n) const {
    if (n < 0 || n > this->n()) throw DomainError("prefix length out of range");
    InterfacePath p;
    p.steps.assign(steps.begin(), steps.begin() + n + 1);
    p.directed.assign(directed.begin(), directed.begin() + n + 1);
    p.terminated = terminated && n_out && *n_out == n;
    if (p.terminated) p.n_out = n;
    return p;
}

InterfacePath explore(const GraphBundle& b, const ContourConfig& p, const HalfEdge& h_in,
                      const HalfEdge& h_term) {
    std::vector<char> in_p(b.dual_edges.size(), 0), used(b.dual_edges.size(), 0);
    for (int e : p.edges) in_p[e] = 1;
    const DualEdge e_term = h_term.edge;
    InterfacePath path;
    path.steps.push_back(h_in.edge);
    path.directed.push_back(h_in);
    int id_in = b.edge_id(h_in.edge);
    if (id_in >= 0) used[id_in] = 1;
    bool term_used = h_in.edge == e_term;
    const std::size_t max_steps = p.edges.size() + 2;

    while (!(path.steps.back() == e_term)) {
        if (path.steps.size() > max_steps) throw DomainError("exploration does not terminate");
        const HalfEdge cur = path.directed.back();
        const Face f = cur.face;
        const Side entry = cur.side();
        std::vector<int> cand;  // sides
        for (int s = 0; s < 4; ++s) {
            DualEdge e = edge_of(f, static_cast<Side>(s));
            int id = b.edge_id(e);
            if (e == e_term) {
                if (f == h_term.face && !term_used) cand.push_back(s);
            } else if (id >= 0 && in_p[id] && !used[id]) {
                cand.push_back(s);
            }
        }
        int next;
        if (cand.empty()) {
            throw DomainError("exploration stuck at face [" + std::to_string(f.x2) + "," +
                              std::to_string(f.y2) + "]: contour violates parity");
        } else if (cand.size() == 1) {
            next = cand[0];
        } else {
            next = ne_sw_partner(entry);
            if (std::find(cand.begin(), cand.end(), next) == cand.end())
                throw DomainError("ambiguous face without a NE/SW continuation");
        }
        DualEdge e = edge_of(f, static_cast<Side>(next));
        int id = b.edge_id(e);
        if (e == e_term) term_used = true;
        if (id >= 0) used[id] = 1;
        path.steps.push_back(e);
        path.directed.push_back({across(f, e), e});
    }
    path.terminated = true;
    path.n_out = path.n();
    return path;
}

InterfacePath explore(const GraphBundle& b, const ContourConfig& p, const BoundaryCondition& xi) {
    if (xi.marked.size() != 2) throw DomainError("exploration needs exactly two marked half-edges");
    return explore(b, p, xi.marked[0], xi.marked[1]);
}

ForcedSets forced_sets(const GraphBundle& b, const InterfacePath& pre, const HalfEdge& h_term) {
    ForcedSets fs;
    const int n = pre.n();
    if (n < 0 || pre.directed.size() != pre.steps.size())
        throw DomainError("inconsistent prefix: malformed path");
    const DualEdge e_in = pre.steps[0];
    const DualEdge e_term = h_term.edge;
    if (!(pre.directed[0].edge == e_in)) throw DomainError("inconsistent prefix: gamma_0");
    {
        std::set<DualEdge> seen;
        for (const auto& e : pre.steps)
            if (!seen.insert(e).second) throw DomainError("inconsistent prefix: repeated edge");
    }
    auto empty = [&](std::string why) {
        fs.empty_event = true;
        fs.reason = std::move(why);
        fs.forced_in.clear();
        fs.forced_out.clear();
        fs.consumed.clear();
        return fs;
    };
    if (n > 0 && e_in == e_term) return empty("exploration stops at gamma_0");

    std::set<int> fo;
    for (int t = 0; t < n; ++t) {
        const Face f = pre.directed[t].face;
        const int sa = side_of(f, pre.steps[t]);
        const int sb = side_of(f, pre.steps[t + 1]);
        if (sa < 0 || sb < 0 || sa == sb) throw DomainError("inconsistent prefix: not a face walk");
        const HalfEdge expect{across(f, pre.steps[t + 1]), pre.steps[t + 1]};
        if (!(pre.directed[t + 1] == expect)) throw DomainError("inconsistent prefix: directed step");

        const DualEdge nx = pre.steps[t + 1];
        if (nx == e_term) {
            if (!(f == h_term.face)) return empty("terminal edge crossed from the wrong face");
            if (t + 1 != n) return empty("path continues after the terminal edge");
        } else if (b.edge_id(nx) < 0) {
            return empty("step leaves E*_Omega");
        }
        if (sb == ne_sw_partner(static_cast<Side>(sa))) continue;
        for (int o = 0; o < 4; ++o) {
            if (o == sa || o == sb) continue;
            DualEdge oe = edge_of(f, static_cast<Side>(o));
            bool used = false;
            for (int k = 0; k <= t; ++k) used = used || pre.steps[k] == oe;
            if (used) continue;
            if (oe == e_term) {
                if (f == h_term.face) return empty("terminal edge would take priority");
                continue;
            }
            int id = b.edge_id(oe);
            if (id < 0) continue;
            fo.insert(id);
        }
    }
    std::set<int> fi;
    for (int k = 1; k <= n; ++k)
        if (!(pre.steps[k] == e_term)) fi.insert(b.edge_id(pre.steps[k]));
    for (int e : fi)
        if (fo.count(e)) return empty("forced-in and forced-out edges overlap");
    fs.forced_in.assign(fi.begin(), fi.end());
    fs.forced_out.assign(fo.begin(), fo.end());
    std::set<Vertex> cons;
    for (const auto* s : {&fs.forced_in, &fs.forced_out})
        for (int e : *s)
            for (auto v : b.primal_edges[e])
                if (b.contains(v)) cons.insert(v);
    fs.consumed.assign(cons.begin(), cons.end());
    return fs;
}

bool in_event(const ContourConfig& p, const ForcedSets& fs) {
    if (fs.empty_event) return false;
    for (int e : fs.forced_in)
        if (!std::binary_search(p.edges.begin(), p.edges.end(), e)) return false;
    for (int e : fs.forced_out)
        if (std::binary_search(p.edges.begin(), p.edges.end(), e)) return false;
    return true;
}

Domain reduced_domain(const GraphBundle& b, const ForcedSets& fs) {
    Domain d;
    for (auto v : b.domain)
        if (!std::binary_search(fs.consumed.begin(), fs.consumed.end(), v)) d.push_back(v);
    return d;
}

ContourConfig reduce_contour(const ContourConfig& p, const ForcedSets& fs) {
    if (!in_event(p, fs)) throw DomainError("contour is not in the event C_{gamma,n}");
    ContourConfig out;
    std::set_difference(p.edges.begin(), p.edges.end(), fs.forced_in.begin(), fs.forced_in.end(),
                        std::back_inserter(out.edges));
    return out;
}

ContourConfig extend_contour(const GraphBundle& b, const ContourConfig& p_hat, const ForcedSets& fs) {
    if (fs.empty_event) throw DomainError("empty event has no extension");
    for (int e : p_hat.edges) {
        if (e < 0 || e >= static_cast<int>(b.dual_edges.size()))
            throw DomainError("reduced contour has an edge outside E*_Omega");
        if (std::binary_search(fs.forced_in.begin(), fs.forced_in.end(), e) ||
            std::binary_search(fs.forced_out.begin(), fs.forced_out.end(), e))
            throw DomainError("reduced contour uses a forced edge");
    }
    ContourConfig out;
    std::set_union(p_hat.edges.begin(), p_hat.edges.end(), fs.forced_in.begin(), fs.forced_in.end(),
                   std::back_inserter(out.edges));
    return out;
}

std::vector<int> free_edges(const GraphBundle& b, const ForcedSets& fs) {
    std::vector<int> out;
    if (fs.empty_event) return out;
    for (int e = 0; e < static_cast<int>(b.dual_edges.size()); ++e)
        if (!std::binary_search(fs.forced_in.begin(), fs.forced_in.end(), e) &&
            !std::binary_search(fs.forced_out.begin(), fs.forced_out.end(), e))
            out.push_back(e);
    return out;
}

std::vector<ContourConfig> enumerate_reduced(const GraphBundle& b, const ForcedSets& fs,
                                             const HalfEdge& a, const HalfEdge& h) {
    if (fs.empty_event) return {};
    std::vector<int> par(b.faces.size(), 0);
    std::map<Face, int> stray;
    for (const auto* m : {&a, &h}) {
        int f = b.face_id(m->face);
        if (f >= 0)
            par[f] ^= 1;
        else
            stray[m->face] ^= 1;
    }
    for (auto& [f, p] : stray)
        if (p) return {};
    std::vector<int> ex = fs.forced_in;
    ex.insert(ex.end(), fs.forced_out.begin(), fs.forced_out.end());
    for (const auto* m : {&a, &h})
        if (int e = b.edge_id(m->edge); e >= 0) ex.push_back(e);
    return enumerate_parity(b, par, ex);
}

}  // namespace isinglab
