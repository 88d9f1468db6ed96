#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "isinglab/lattice.h"

namespace isinglab {

// Sorted dual-edge ids into GraphBundle::dual_edges.
struct ContourConfig {
    std::vector<int> edges;
    auto operator<=>(const ContourConfig&) const = default;
};

inline const double x_critical = std::sqrt(2.0) - 1.0;

struct EdgeWeights {
    std::vector<double> x;  // indexed like dual_edges
    static EdgeWeights uniform(const GraphBundle& b, double x);
    static EdgeWeights critical(const GraphBundle& b) { return uniform(b, x_critical); }
};

double contour_weight(const ContourConfig& p, const EdgeWeights& w);

// Translation-invariant pattern potential. Edges are doubled midpoints; for U
// they are dual edges, for V the primal edges crossed by them.
struct Pattern {
    std::vector<DualEdge> edges;  // canonical: sorted, anchored
    double value = 0;
};

struct PatternPotential {
    std::vector<Pattern> patterns;  // canonical, merged, sorted, no zero values
    double range() const;           // max midpoint distance inside a pattern, lattice units
    bool empty() const { return patterns.empty(); }
};
struct PotentialU : PatternPotential {};
struct PotentialV : PatternPotential {};

// Canonical representative of a translation class and the shift that produced it.
std::vector<DualEdge> canonical_pattern(std::vector<DualEdge> edges);
PotentialU make_potential_u(const std::vector<Pattern>& raw);
PotentialV make_potential_v(const std::vector<Pattern>& raw);

struct InteractionParams {
    double J = 1, beta = 1, lambda = 0;
    InteractionParams() = default;
    InteractionParams(double J_, double beta_, double lambda_);
    double x() const { return std::exp(-2 * beta * J); }
    static InteractionParams from_x(double x, double beta, double lambda);
};

// Enumerate the solutions of deg_f(P) = parity[f] (mod 2) over E*_Omega minus
// the excluded edges, by GF(2) elimination. Deterministic order.
std::vector<ContourConfig> enumerate_parity(const GraphBundle& b, const std::vector<int>& parity,
                                            const std::vector<int>& excluded_edges);
// Same space by scanning all subsets; test oracle, |E*| <= 24.
std::vector<ContourConfig> enumerate_parity_bruteforce(const GraphBundle& b,
                                                       const std::vector<int>& parity,
                                                       const std::vector<int>& excluded_edges);

std::vector<ContourConfig> enumerate_contours(const GraphBundle& b);  // even case
std::vector<ContourConfig> enumerate_contours(const GraphBundle& b, const BoundaryCondition& xi);
bool in_space(const GraphBundle& b, const ContourConfig& p, const BoundaryCondition* xi);

// Spins: one entry per domain vertex (+1/-1). Boundary spins, when given, are
// indexed like bundle.boundary_vertices; default all +1.
using Spins = std::vector<int>;
ContourConfig spins_to_contour(const GraphBundle& b, const Spins& sigma,
                               const Spins* boundary = nullptr);

struct SpinField {
    Spins domain, boundary;
};
// sigma_v = (-1)^{|K_v cap (P u P_o)|}; with no witness the outer spins are +.
SpinField contour_to_spins(const GraphBundle& b, const ContourConfig& p,
                           const AdmissibilityWitness* outer = nullptr);
// Spins on the whole box of the witness (outside of it: +), from P u P_o.
// Returns a lookup usable for any vertex.
struct GlobalSpins {
    int x0 = 0, y0 = 0, w = 0, h = 0;
    std::vector<int> s;
    int at(Vertex v) const;
};
GlobalSpins global_spins(const GraphBundle& b, const ContourConfig& p,
                         const AdmissibilityWitness* outer);

double partition_function_plus(const GraphBundle& b, const EdgeWeights& w);
double partition_function_dobrushin(const GraphBundle& b, const EdgeWeights& w,
                                    const BoundaryCondition& xi);

PotentialU v_to_u(const PotentialV& v);

// Translates T of any pattern with T cap `touch` nonempty; each listed once.
struct Translate {
    int pattern = 0;
    std::vector<DualEdge> edges;  // sorted
    double value = 0;
};
std::vector<Translate> translates_touching(const PatternPotential& u,
                                           const std::vector<DualEdge>& touch);

// U^{P_o}(X): sum of U(T) over translates T with X subset T subset X u P_o.
double boundary_potential(const PotentialU& u, const std::vector<DualEdge>& p_o,
                          const std::vector<DualEdge>& x);
// Same quantity by the literal double sum over subsets Y of P_o; test oracle.
double boundary_potential_bruteforce(const PotentialU& u, const std::vector<DualEdge>& p_o,
                                     const std::vector<DualEdge>& x);
// U(X) for an absolute edge set: the value of its translation class.
double potential_value(const PatternPotential& u, const std::vector<DualEdge>& x);

// x^{|P|} exp(-beta lambda sum_{T subset P u P_o, T cap P nonempty} U(T)).
double interacting_contour_weight(const GraphBundle& b, const ContourConfig& p,
                                  const InteractionParams& prm, const PotentialU& u,
                                  const std::vector<DualEdge>& p_o);
// The exponent sum alone (without -beta lambda).
double interaction_energy(const GraphBundle& b, const ContourConfig& p, const PotentialU& u,
                          const std::vector<DualEdge>& p_o);

std::vector<DualEdge> edges_of(const GraphBundle& b, const ContourConfig& p);
ContourConfig contour_from_edges(const GraphBundle& b, const std::vector<DualEdge>& e);

}  // namespace isinglab
