#pragma once

#include <optional>
#include <string>
#include <vector>

#include "isinglab/contour.h"
#include "isinglab/lattice.h"

namespace isinglab {

struct InterfacePath {
    std::vector<DualEdge> steps;     // gamma_0 .. gamma_n
    std::vector<HalfEdge> directed;  // directed[k] = (face the path enters through steps[k], steps[k])
    bool terminated = false;
    std::optional<int> n_out;

    int n() const { return static_cast<int>(steps.size()) - 1; }
    InterfacePath prefix(int n) const;
};

// Explore P from h_in until e(h_term) is crossed. The terminal edge is a
// candidate only at its own face f(h_term).
InterfacePath explore(const GraphBundle& b, const ContourConfig& p, const HalfEdge& h_in,
                      const HalfEdge& h_term);
InterfacePath explore(const GraphBundle& b, const ContourConfig& p, const BoundaryCondition& xi);

struct ForcedSets {
    std::vector<int> forced_in, forced_out;  // edge ids, sorted
    std::vector<Vertex> consumed;            // sorted, inside Omega
    bool empty_event = false;
    std::string reason;  // why the event is empty
};

// Forced sets of the event C_{gamma,n} for the exploration toward h_term.
// Throws DomainError when the prefix is not a path of the lattice.
ForcedSets forced_sets(const GraphBundle& b, const InterfacePath& prefix, const HalfEdge& h_term);

// Whether P lies in C_{gamma,n}, decided from the forced sets.
bool in_event(const ContourConfig& p, const ForcedSets& fs);

// Omega minus gamma~ (vertex removal), reported for reference.
Domain reduced_domain(const GraphBundle& b, const ForcedSets& fs);

// P -> P \ forced_in and back; ids stay those of the original bundle.
ContourConfig reduce_contour(const ContourConfig& p, const ForcedSets& fs);
ContourConfig extend_contour(const GraphBundle& b, const ContourConfig& p_hat, const ForcedSets& fs);

// Edges left unconstrained by the event: E*_Omega minus forced_in and forced_out.
// This is the reduced domain of the splitting. It is in general larger than
// the edge set of Omega minus gamma~ (vertex removal loses free edges whose
// endpoints all touch a fixed edge).
std::vector<int> free_edges(const GraphBundle& b, const ForcedSets& fs);

// The target space of the splitting: contours on the free edges with marks
// (a, h), excluding e(a) and e(h).
std::vector<ContourConfig> enumerate_reduced(const GraphBundle& b, const ForcedSets& fs,
                                             const HalfEdge& a, const HalfEdge& h);

}  // namespace isinglab
