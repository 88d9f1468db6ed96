#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "isinglab/observables.h"

namespace isinglab {

enum class SampleMethod { ExactSequential, Glauber, SwendsenWang };
const char* method_name(SampleMethod m);

struct SampleRun {
    std::uint64_t seed = 0;
    SampleMethod method = SampleMethod::ExactSequential;
    int burn_in = 0, thinning = 0;
    std::vector<InterfacePath> paths;
};

// Generator for stream `index` of a master seed. Streams do not depend on how
// work is split between threads.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index);

// Sequential sampling of the interface at lambda = 0 with
// P[gamma+ | gamma] = F(gamma+; h_out) / F(gamma; h_out).
class ExactSampler {
public:
    ExactSampler(const GraphBundle& b, const BoundaryCondition& xi, const EdgeWeights& w);
    // Every one-step continuation with its conditional probability (zeros kept).
    // Throws NumericalFault on a negative conditional or a broken sum rule.
    std::vector<std::pair<InterfacePath, double>> conditionals(const InterfacePath& prefix);
    InterfacePath draw(std::mt19937_64& rng);
    InterfacePath start() const;

private:
    FEvaluator ev_;
    BoundaryCondition xi_;
};

InterfacePath sample_exact(const GraphBundle& b, const BoundaryCondition& xi, const EdgeWeights& w,
                           std::uint64_t seed);
// `count` draws; draw i uses stream i. workers <= 0 means hardware concurrency.
SampleRun sample_exact_run(const GraphBundle& b, const BoundaryCondition& xi, const EdgeWeights& w,
                           std::uint64_t seed, int count, int workers = 0);

// Spin chain on Omega with the Dobrushin boundary of the witness and weight
// x^{|P|} exp(-beta lambda sum_{T subset P u P_o, T cap P nonempty} U(T)).
class GlauberChain {
public:
    GlauberChain(const GraphBundle& b, const BoundaryCondition& xi, const AdmissibilityWitness& wit,
                 const InteractionParams& prm, const PotentialU& u);
    // Heat-bath probability that site v (index into the domain) is flipped.
    double flip_probability(int v) const;
    void update(int v, std::mt19937_64& rng);
    void sweep(std::mt19937_64& rng);  // every site once, in domain order
    // One Swendsen-Wang update; only for U = 0 or lambda = 0.
    void cluster_sweep(std::mt19937_64& rng);

    Spins spins() const;  // domain order
    void set_spins(const Spins& s);
    ContourConfig contour() const;
    InterfacePath interface() const;

private:
    struct Term {
        std::vector<std::pair<int, int>> edges;  // cell pairs across each dual edge
        double value = 0;
    };
    double local_log_weight(int v) const;
    int cell(Vertex v) const;

    const GraphBundle& b_;
    BoundaryCondition xi_;
    InteractionParams prm_;
    bool free_ = true;
    int x0_ = 0, y0_ = 0, w_ = 0, h_ = 0;
    std::vector<signed char> s_;                // spins on the grid
    std::vector<int> site_cell_;                // domain index -> cell
    std::vector<std::array<int, 4>> nbr_;       // neighbour cells per site
    std::vector<std::vector<Term>> terms_;      // translates touching K_v
    std::vector<std::pair<int, int>> bonds_;    // primal edges of E_Omega as cell pairs
    std::vector<std::pair<int, int>> dual_cells_;  // per dual edge id
};

InterfacePath sample_glauber(const GraphBundle& b, const BoundaryCondition& xi,
                             const AdmissibilityWitness& wit, const InteractionParams& prm,
                             const PotentialU& u, std::uint64_t seed, int sweeps);
// `chains` independent chains (stream c for chain c), each run for burn_in
// sweeps and then sampled every `thinning` sweeps; paths are merged in chain
// order. SwendsenWang uses cluster updates in place of heat-bath sweeps.
SampleRun sample_chain_run(const GraphBundle& b, const BoundaryCondition& xi,
                           const AdmissibilityWitness& wit, const InteractionParams& prm,
                           const PotentialU& u, SampleMethod method, std::uint64_t seed, int chains,
                           int per_chain, int burn_in, int thinning, int workers = 0);

struct ChiSquare {
    double statistic = 0, p_value = 1;
    int dof = 0;
};
// Two-sample chi-square homogeneity test over the union of bins.
ChiSquare chi2_two_sample(const std::vector<double>& a, const std::vector<double>& b);

// ---- Loewner driving functions

// Half-strip |Re(z - origin)| < width/2, Im(z - origin) > 0.
struct StripGeometry {
    double width = 1;
    std::complex<double> origin;
    // Conformal map onto the upper half-plane fixing the origin (sent to 0)
    // and infinity, with unit derivative at the origin.
    std::complex<double> to_half_plane(std::complex<double> z) const;
    std::complex<double> from_half_plane(std::complex<double> w) const;
};

// Rectangle [0, width) x [0, height) with marks at the middle of the bottom
// and top sides, and the half-strip seen from the bottom mark. Width even.
struct StripSetup {
    Domain domain;
    BoundaryCondition xi;
    StripGeometry geometry;
};
StripSetup dobrushin_strip(int width, int height);

struct DrivingRecord {
    std::vector<double> t, W;  // t[0] = 0, strictly increasing
};

// Midpoints of the path's edges, in lattice units. Consecutive midpoints
// share a face, and the two passes through a face never cross.
std::vector<std::complex<double>> path_trace(const InterfacePath& path);

struct ZipOptions {
    double max_capacity = 0;  // stop once t exceeds this (0: whole path)
    int split = 1;            // elementary maps per increment
};
// Zipper on a curve in the closed upper half-plane starting on the real line.
DrivingRecord extract_driving(const std::vector<std::complex<double>>& curve,
                              const ZipOptions& opt = {});
DrivingRecord extract_driving(const InterfacePath& path, const StripGeometry& g,
                              const ZipOptions& opt = {});
// Tips of the hulls g_k^{-1}(W_k), by composing inverse slit maps.
std::vector<std::complex<double>> reconstruct_tips(const DrivingRecord& r);

struct KappaFit {
    double kappa = 0, intercept = 0, ci_low = 0, ci_high = 0;
    int records = 0, skipped = 0;
    std::vector<double> times, variances;
};
struct KappaOptions {
    double t_min = 0, t_max = 0;  // window; t_max = 0: the shortest record
    int grid = 40;
    int bootstrap = 200;
    std::uint64_t seed = 1;
};
// Slope of Var[W_t] against t over the window, with a percentile bootstrap CI.
// Records not reaching t_max are skipped. Needs at least 100 usable records.
KappaFit estimate_kappa(const std::vector<DrivingRecord>& records, const KappaOptions& opt);
// W = sqrt(kappa) B on the grid t_k = k dt.
std::vector<DrivingRecord> synthetic_brownian(int count, int steps, double dt, double kappa,
                                              std::uint64_t seed);

// ---- comparison with the free critical correlations

struct ScalingFit {
    double zeta_bulk = 0, zeta_low = 0, zeta_high = 0;  // median and quartiles
    double theta = 0;            // from the decay of |R| with separation
    double remainder_norm = 0;   // max |R| over pairs
    double beta_star = 0;
    int sign_flips = 0;          // pairs whose ratio has the minority sign
    std::vector<double> zeta;    // per half-edge of the largest domain
    std::vector<double> zeta_by_domain;  // bulk median per domain
    std::vector<double> remainders;      // max |R| per domain
};
struct ScalingOptions {
    bool scan_beta = true;
    double beta_low = 0, beta_high = 0;  // default: beta_c / 1.5 .. 1.5 beta_c
    int golden_steps = 20;
};
// <phi_h1 phi_h2> interacting at (beta, lambda) against zeta(h1) zeta(h2) times
// the free value at x_c, on every domain of the sequence.
ScalingFit scaling_comparison(const std::vector<Domain>& domains, const InteractionParams& prm,
                              const PotentialU& u, const ScalingOptions& opt = {});

}  // namespace isinglab
