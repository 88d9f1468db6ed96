#pragma once

#include <Eigen/Dense>
#include <vector>

#include "isinglab/berezin.h"
#include "isinglab/contour.h"
#include "isinglab/lattice.h"

namespace isinglab {

// A nonempty set Y of live edges with u(Y) = sum of U(T) over translates T
// with T cap live = Y and T minus Y inside the boundary contour. For the full
// domain this is U^{P_o}(Y).
struct Atom {
    std::vector<int> edges;  // sorted edge ids
    double u = 0;
};

struct PolymerWeight {
    std::vector<int> support;  // sorted edge ids
    double value = 0;          // Ubar(X)
};

// Where the interaction lives: the live edges (default all of E*_Omega) and
// the boundary contour that closes translates leaving them.
struct InteractionFrame {
    std::vector<int> live;               // sorted edge ids
    std::vector<DualEdge> boundary;      // sorted
    static InteractionFrame full(const GraphBundle& b, const std::vector<DualEdge>& p_o);
};

struct InteractingAction {
    Eigen::MatrixXd A;  // free part, coefficient form (see Action)
    std::vector<PolymerWeight> polymers;
};

// Atoms with nonzero u touching the given edges (all live edges if empty).
std::vector<Atom> interaction_atoms(const GraphBundle& b, const PotentialU& u,
                                    const InteractionFrame& fr, const std::vector<int>& touch = {});

// Ubar(X) = prod_{e in X} x_e * sum over overlap-connected covers of X by
// atoms Y of prod (exp(-beta lambda u(Y)) - 1).
double ubar(const GraphBundle& b, const std::vector<int>& x, const EdgeWeights& w,
            const InteractionParams& prm, const PotentialU& u, const InteractionFrame& fr);
double ubar(const GraphBundle& b, const std::vector<int>& x, const InteractionParams& prm,
            const PotentialU& u, const std::vector<DualEdge>& p_o);

// Free part from w restricted to the live edges, and every polymer whose
// support is an overlap-connected union of atoms.
InteractingAction build_interacting_action(const GraphBundle& b, const EdgeWeights& w,
                                           const InteractionParams& prm, const PotentialU& u,
                                           const InteractionFrame& fr);
InteractingAction build_interacting_action(const GraphBundle& b, const InteractionParams& prm,
                                           const PotentialU& u, const std::vector<DualEdge>& p_o);

// Selections of polymers with pairwise disjoint supports avoiding `excluded`,
// grouped by their union Z: (generators of E_Z, sum of prod Ubar).
struct PolymerGroup {
    std::vector<int> gens;
    double coeff = 0;
};
std::vector<PolymerGroup> polymer_groups(const GraphBundle& b, const InteractingAction& act,
                                         const std::vector<int>& excluded = {});

// int D[Phi] phi_{i_1}..phi_{i_k} (prod_{e in extra} E_e) e^{S + Ucal}, one
// Wick Pfaffian per polymer group.
double interacting_integral(const GraphBundle& b, const InteractingAction& act,
                            const std::vector<int>& ins, const std::vector<int>& extra = {});
double interacting_integral(const GaussianState& gs, const std::vector<PolymerGroup>& groups,
                            const std::vector<int>& ins);

// The two sides of the interacting identity for xi = (h_in, h).
double interacting_insertion_sum_contour(const GraphBundle& b, const InteractionParams& prm,
                                         const PotentialU& u, const std::vector<DualEdge>& p_o,
                                         const HalfEdge& h_in, const HalfEdge& h);
double interacting_insertion_sum(const GraphBundle& b, const InteractionParams& prm,
                                 const PotentialU& u, const std::vector<DualEdge>& p_o,
                                 const HalfEdge& h_in, const HalfEdge& h);

// <phi_{h_1}..phi_{h_k}> under the interacting Berezin measure.
double interacting_expectation(const GraphBundle& b, const InteractionParams& prm,
                               const PotentialU& u, const std::vector<DualEdge>& p_o,
                               const std::vector<HalfEdge>& insertions);

// Signed interacting contour weight W(P) = sgn(P) x^{|P|} exp(-beta lambda E(P)).
double interacting_signed_weight(const GraphBundle& b, const ContourConfig& p,
                                 const std::vector<HalfEdge>& marks, const InteractionParams& prm,
                                 const PotentialU& u, const std::vector<DualEdge>& p_o);

// T(X): least size of a connected dual-edge set containing X (connected via
// shared faces), by Dreyfus-Wagner over the components of X.
int steiner_size(const std::vector<DualEdge>& x);

struct PolymerRow {
    std::vector<DualEdge> support;
    double value = 0;
    int t = 0;
};
std::vector<PolymerRow> polymer_table(const GraphBundle& b, const InteractingAction& act);

// Least-squares slope and intercept of log|Ubar| against T(X), over rows with
// nonzero value.
struct DecayFit {
    double slope = 0, intercept = 0;
    int points = 0;
};
DecayFit fit_decay(const std::vector<PolymerRow>& rows);

}  // namespace isinglab
