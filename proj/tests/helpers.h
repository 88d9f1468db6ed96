#pragma once

#include <map>
#include <vector>

#include "isinglab/berezin.h"
#include "isinglab/contour.h"
#include "isinglab/explorer.h"
#include "isinglab/lattice.h"

namespace testutil {

inline std::vector<isinglab::Domain> small_domains(int max_size, int min_size = 1) {
    std::vector<isinglab::Domain> out;
    for (int k = min_size; k <= max_size; ++k)
        for (auto& d : isinglab::fixed_polyominoes(k)) out.push_back(d);
    return out;
}

// Ordered pairs (h_in, h_out) of distinct half-edges of V_cluster, every
// `stride`-th one, optionally restricted to external half-edges.
inline std::vector<isinglab::BoundaryCondition> bc_pairs(const isinglab::GraphBundle& b,
                                                         bool external_only, int stride = 1) {
    std::vector<isinglab::HalfEdge> hs;
    if (external_only)
        hs = isinglab::external_half_edges(b);
    else
        for (int i = 0; i < b.n_cluster(); ++i) hs.push_back(b.half_edge(i));
    std::vector<isinglab::BoundaryCondition> out;
    int k = 0;
    for (std::size_t i = 0; i < hs.size(); ++i)
        for (std::size_t j = 0; j < hs.size(); ++j)
            if (i != j && (k++ % stride) == 0) out.push_back({{hs[i], hs[j]}});
    return out;
}

// Law of the explored interface under the contour measure, by enumeration.
// Keys are the step sequences.
inline std::map<std::vector<isinglab::DualEdge>, double> path_law(
    const isinglab::GraphBundle& b, const isinglab::BoundaryCondition& xi,
    const isinglab::EdgeWeights& w) {
    std::map<std::vector<isinglab::DualEdge>, double> law;
    double z = 0;
    for (const auto& p : isinglab::enumerate_contours(b, xi)) {
        double wt = isinglab::reduced_weight_sign(b, xi.marked, p) * isinglab::contour_weight(p, w);
        law[isinglab::explore(b, p, xi).steps] += wt;
        z += wt;
    }
    for (auto& [k, v] : law) v /= z;
    return law;
}

}  // namespace testutil
