#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "isinglab/explorer.h"
#include "isinglab/interacting.h"

namespace isinglab {

// The weight W: edge weights, and optionally a multi-spin perturbation with
// boundary contour P_o. Without a potential (or with lambda = 0) W is the free
// weight sgn(P) prod x_e.
struct Model {
    EdgeWeights w;
    InteractionParams prm;
    PotentialU u;
    std::vector<DualEdge> p_o;

    bool interacting() const { return !u.empty() && prm.lambda != 0 && prm.beta != 0; }
    static Model free(EdgeWeights w);
    static Model interacting(const GraphBundle& b, const InteractionParams& prm, const PotentialU& u,
                             const std::vector<DualEdge>& p_o);
};

// sgn(P) prod x_e exp(-beta lambda E(P)) for the marks (h_in, h).
double signed_weight(const GraphBundle& b, const Model& m, const ContourConfig& p,
                     const std::vector<HalfEdge>& marks);

enum class Provenance { FreePfaffian, InteractingExpansion, ContourEnumeration };
const char* provenance_name(Provenance p);

struct ObservableValue {
    double numerator = 0, denominator = 0, ratio = 0;
    Provenance provenance = Provenance::FreePfaffian;
};

// F_W(gamma_[0,n]; h) by three routes. The prefix starts at h_in.
//  enumerate: restricted contour sum.
//  full: prod_{forced_in} x_e c(gamma) int phi_{h_in} phi_h E_{forced_in} e^{S'' + Ucal''},
//        with the forced edges removed from the action; exact including sign.
//  reduced: prod_{forced_in} x_e c(gamma) int phi_{gamma_n} phi_h e^{S'' + Ucal''}; equals F
//        up to a sign depending on the prefix only. Needs gamma_n in V_cluster.
// c(gamma) collects the interaction of translates inside P_o u forced_in that
// meet forced_in; it does not depend on h.
class FEvaluator {
public:
    FEvaluator(const GraphBundle& b, Model m);
    double enumerate(const InterfacePath& prefix, const HalfEdge& h) const;
    double full(const InterfacePath& prefix, const HalfEdge& h);
    double reduced(const InterfacePath& prefix, const HalfEdge& h);
    // One route for every h in V_cluster at once, indexed by cluster id.
    const std::vector<double>& row(const InterfacePath& prefix, bool reduced);
    const GraphBundle& bundle() const { return b_; }
    const Model& model() const { return m_; }

private:
    struct Frame {
        double prefactor = 0;  // prod x over forced_in times c(gamma)
        GaussianState gs;
        std::vector<PolymerGroup> groups;
    };
    // h is the inserted target; its own long edge is dropped from the action.
    const Frame& frame(const ForcedSets& fs, const HalfEdge& h);
    int id_of(const HalfEdge& h) const;
    double evaluate(const InterfacePath& prefix, const HalfEdge& h, bool reduced);

    const GraphBundle& b_;
    Model m_;
    std::map<std::vector<int>, Frame> cache_;
    std::map<std::vector<std::uint64_t>, double> values_;
    std::map<std::vector<std::uint64_t>, std::vector<double>> rows_;
};

// M(h) = F(gamma; h) / F(gamma; h_out). The reduced route is used when
// gamma_n lies in V_cluster, the full route otherwise.
ObservableValue M_observable(FEvaluator& ev, const InterfacePath& prefix, const HalfEdge& h,
                             const HalfEdge& h_out);

struct AuditRow {
    std::string prefix;  // steps as text
    int n = 0;
    HalfEdge h;
    double m_now = 0, m_next = 0, residual = 0;
};
struct AuditReport {
    int prefixes = 0, checks = 0;
    double max_residual = 0;
    double max_law_defect = 0;          // |sum of conditional probabilities - 1|
    std::vector<AuditRow> rows;          // one per (prefix, h), with keep_rows
    std::vector<std::string> zero_denominators;
    int excluded_count = 0;              // (prefix, h) pairs outside the martingale's scope
    std::vector<std::string> excluded;   // their descriptions, with keep_rows
    double min_probability = 1;          // smallest conditional probability seen
};
// Exact one-step audit of M(h) over every reachable prefix with n < n_out,
// for every h in V_cluster other than h_in (or the given list). A pair is
// excluded when e(h) is already on the path, or when some continuation has
// zero h_out-probability but nonzero F(gamma+; h): there the h_out exploration
// stops or separates h from h_out, and the one-step identity does not apply.
AuditReport martingale_audit(const GraphBundle& b, const Model& m, const BoundaryCondition& xi,
                             const std::vector<HalfEdge>& hs = {}, bool keep_rows = false);
// Same audit with a caller-owned evaluator; F(gamma; h) does not depend on
// h_out, so one evaluator serves every xi with the same h_in.
AuditReport martingale_audit(FEvaluator& ev, const BoundaryCondition& xi,
                             const std::vector<HalfEdge>& hs = {}, bool keep_rows = false);

// One-step extensions of a prefix through the other sides of its head face,
// skipping edges already on the path. Events are not checked.
std::vector<InterfacePath> continuations(const InterfacePath& prefix);

// The full list of reachable prefixes of the exploration for xi, n < n_out, sorted.
std::vector<InterfacePath> reachable_prefixes(const GraphBundle& b, const BoundaryCondition& xi);

enum class Convention {
    Uncalibrated,  // -i M(f,e) + M(f+1,e); -e^{i pi/4} M(f,e) + e^{-i pi/4} M(f+i,e)
    Calibrated,    // vertical edges multiplied by i
};

using ComplexObservable = std::map<DualEdge, std::complex<double>>;

std::complex<double> assemble(DualEdge e, double m_lower, double m_upper, Convention c);
// Mcal(e) for every dual edge of the live set, from M at its two half-edges.
ComplexObservable complex_observable(FEvaluator& ev, const InterfacePath& prefix,
                                     const HalfEdge& h_out, Convention c = Convention::Calibrated);

// Projection onto the line alpha R, |alpha| = 1.
std::complex<double> project(std::complex<double> z, std::complex<double> alpha);
// Line of the corner of face f at the vertex c: i sqrt((c - f)/|c - f|).
std::complex<double> corner_line(Face f, Vertex c);

struct SholoReport {
    double max_residual = 0;
    int corners = 0;
};
// Max over corners at faces other than `skip` where both edges carry a value.
SholoReport s_holomorphicity_residual(const ComplexObservable& mc, const Face& skip);

}  // namespace isinglab
