#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <type_traits>
#include <utility>
#include <vector>

#include "isinglab/contour.h"
#include "isinglab/lattice.h"

namespace isinglab {

// Sparse element of a real Grassmann algebra on at most 64 generators.
// A monomial is a bitmask; its canonical form is the product of the set
// generators in increasing index order.
class GrassmannPolynomial {
public:
    using Mono = std::uint64_t;
    std::map<Mono, double> terms;  // no zero coefficients

    static GrassmannPolynomial constant(double c);
    static GrassmannPolynomial generator(int i);
    // c * phi_{i_1} ... phi_{i_k} in the given order; 0 on a repeat.
    static GrassmannPolynomial monomial(const std::vector<int>& ids, double c = 1.0);

    GrassmannPolynomial operator*(const GrassmannPolynomial& o) const;
    GrassmannPolynomial operator+(const GrassmannPolynomial& o) const;
    GrassmannPolynomial scaled(double c) const;
    double coefficient(Mono m) const;
    Mono support() const;  // union of all monomials
    bool has_constant() const { return terms.count(0) != 0; }
    bool operator==(const GrassmannPolynomial& o) const { return terms == o.terms; }
};

// Sign of moving the generators of b past those of a: the canonical product
// (mono a)(mono b) equals this sign times the canonical monomial a|b.
int merge_sign(std::uint64_t a, std::uint64_t b);
// Sign of the permutation sorting a list of distinct ids; 0 on a repeat.
int sort_sign(const std::vector<int>& ids);

GrassmannPolynomial gp_mul(const GrassmannPolynomial& a, const GrassmannPolynomial& b);
// Finite exponential series; throws DomainError if a has a constant term.
GrassmannPolynomial gp_exp(const GrassmannPolynomial& a);

// Coefficient of phi_0 phi_1 ... phi_{n-1}. With generators numbered
// 4*face + (N,E,S,W) this is the integral with measure dW dS dE dN per face.
double berezin_integrate(const GrassmannPolynomial& p, int n_generators);

// Integral of a product of factors, multiplied left to right; terms that can
// no longer reach the top monomial are dropped after each step. Throws
// GuardExceeded when the working set outgrows the enumeration guard.
double integrate_product(const std::vector<GrassmannPolynomial>& factors, int n_generators);

// S0 of the face with index f (generators 4f .. 4f+3).
GrassmannPolynomial face_action(int f);
// E_e for the dual edge with index e.
GrassmannPolynomial long_edge_term(const GraphBundle& b, int e);

// Coefficients A with S_x = sum_{a<b} A_ab phi_a phi_b; the matrix of the
// quadratic form S_x = -1/2 Phi^T S Phi is S = -A.
struct Action {
    GrassmannPolynomial poly;
    Eigen::MatrixXd A;
    Eigen::MatrixXd S() const { return -A; }
};
Action build_action(const GraphBundle& b, const EdgeWeights& w);
// Coefficient matrix of S_x without forming the polynomial.
Eigen::MatrixXd action_matrix(const GraphBundle& b, const EdgeWeights& w);
// Polynomial sum_{a<b} A_ab phi_a phi_b.
GrassmannPolynomial polynomial_from_matrix(const Eigen::MatrixXd& A);

// Pfaffian of a skew matrix stored densely row-major, by Parlett-Reid style
// elimination. Floating types pivot on the largest entry of the row; exact
// types on the first nonzero one.
template <class T>
T pfaffian_dense(std::vector<T> a, int n) {
    if (n % 2) return T(0);
    T result(1);
    auto at = [&](int i, int j) -> T& { return a[static_cast<std::size_t>(i) * n + j]; };
    for (int k = 0; k + 1 < n; k += 2) {
        int piv = -1;
        if constexpr (std::is_floating_point_v<T>) {
            double best = 0;
            for (int j = k + 1; j < n; ++j)
                if (std::abs(at(k, j)) > best) best = std::abs(at(k, j)), piv = j;
        } else {
            for (int j = k + 1; j < n && piv < 0; ++j)
                if (at(k, j) != 0) piv = j;
        }
        if (piv < 0) return T(0);
        if (piv != k + 1) {
            for (int i = 0; i < n; ++i) std::swap(at(i, k + 1), at(i, piv));
            for (int j = 0; j < n; ++j) std::swap(at(k + 1, j), at(piv, j));
            result = -result;
        }
        const T p = at(k, k + 1);
        result *= p;
        std::vector<T> tau(n, T(0));
        for (int i = k + 2; i < n; ++i) tau[i] = at(k, i) / p;
        for (int i = k + 2; i < n; ++i)
            for (int j = k + 2; j < n; ++j) at(i, j) += -tau[i] * at(k + 1, j) - tau[j] * at(i, k + 1);
    }
    return result;
}

using Rational = boost::multiprecision::cpp_rational;

double pfaffian(const Eigen::MatrixXd& A);
// Exact Pfaffian; double entries are converted without rounding.
Rational pfaffian_exact(const Eigen::MatrixXd& A);

// Integral of phi_{i_1} ... phi_{i_k} e^{S} for S with coefficient matrix A,
// by deleting the inserted rows and columns: sgn(ins, J) Pf(A_JJ).
double integrate_minor(const Eigen::MatrixXd& A, const std::vector<int>& ins);

// P A P^T = L D L^T for antisymmetric A, with 2x2 antisymmetric blocks in D
// and row pivoting as in the Pfaffian elimination. Gives Pf(A) and solves
// A x = b in O(n^2) each.
class SkewFactor {
public:
    explicit SkewFactor(const Eigen::MatrixXd& A);
    double pfaffian() const { return pf_; }
    bool singular() const { return singular_; }
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    int size() const { return n_; }

private:
    int n_ = 0;
    bool singular_ = false;
    double pf_ = 1;
    Eigen::MatrixXd a_;  // eliminated columns below the 2x2 pivots
    std::vector<int> perm_;
    std::vector<double> piv_;
};

// Pf(A) and G = <phi phi> = (S)^{-1} = -(A)^{-1} for repeated inserted
// integrals by Wick's rule. Columns of G are solved on first use, so one
// state must not be shared between threads.
struct GaussianState {
    double Z = 0;
    int size() const { return f ? f->size() : 0; }
    double g(int i, int j) const;
    Eigen::MatrixXd matrix() const;  // all of G, antisymmetrized
    // Integral of phi_{i_1} ... phi_{i_k} e^{S}: Z Pf(G_II). 0 on a repeat.
    double integrate(const std::vector<int>& ins) const;

    std::shared_ptr<const SkewFactor> f;
    mutable std::vector<Eigen::VectorXd> cols;

private:
    const Eigen::VectorXd& column(int j) const;
};
// Throws NumericalFault("degenerate action") when Pf(A) vanishes.
GaussianState gaussian_state(const Eigen::MatrixXd& A);

// int D[Phi] phi_{h_1} ... phi_{h_k} e^{S_x}. Repeated insertions give 0.
double integrate_with_insertions(const GraphBundle& b, const EdgeWeights& w,
                                 const std::vector<HalfEdge>& insertions);
// The same integral by the exterior-algebra oracle.
double integrate_with_insertions_oracle(const GraphBundle& b, const EdgeWeights& w,
                                        const std::vector<HalfEdge>& insertions);
double partition_function_pfaffian(const GraphBundle& b, const EdgeWeights& w);

// int D[Phi] (prod_{e in X} E_e) e^{S_0}, by the oracle. Exactly 0 or 1.
int indicator_identity(const GraphBundle& b, const std::vector<int>& edge_ids);

// <phi_a phi_b>^+ = (S^{-1})_ab.
double two_point(const GraphBundle& b, const EdgeWeights& w, const HalfEdge& h1, const HalfEdge& h2);

// W^xi(P) / prod_{e in P} x_e = int phi_{h_1}..phi_{h_k} (prod_{e in P} E_e) e^{S_0},
// evaluated face by face: sgn(ins, E-pairs, J) prod_f Pf(A0_{J_f}).
int reduced_weight_sign(const GraphBundle& b, const std::vector<HalfEdge>& insertions,
                        const ContourConfig& p);
// Same value by the oracle.
double reduced_weight_oracle(const GraphBundle& b, const std::vector<HalfEdge>& insertions,
                             const ContourConfig& p);

// Cluster-vertex ids of half-edges; throws DomainError for one outside V_cluster.
std::vector<int> cluster_ids(const GraphBundle& b, const std::vector<HalfEdge>& hs);

}  // namespace isinglab
