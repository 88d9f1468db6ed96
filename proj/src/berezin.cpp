#include "isinglab/berezin.h"

#include <algorithm>
#include <bit>
#include <string>

#include "isinglab/errors.h"

namespace isinglab {

using GP = GrassmannPolynomial;
using Mono = GP::Mono;

namespace {

// Upper triangle of the per-face coefficients, sides N,E,S,W = 0..3.
constexpr int kFaceA[4][4] = {{0, 1, 1, -1}, {-1, 0, -1, 1}, {-1, 1, 0, 1}, {1, -1, -1, 0}};

Mono full_mask(int n) { return n >= 64 ? ~Mono(0) : (Mono(1) << n) - 1; }

}  // namespace

int merge_sign(Mono a, Mono b) {
    int parity = 0;
    while (b) {
        int j = std::countr_zero(b);
        b &= b - 1;
        Mono above = j >= 63 ? 0 : a >> (j + 1);
        parity ^= std::popcount(above) & 1;
    }
    return parity ? -1 : 1;
}

int sort_sign(const std::vector<int>& ids) {
    int parity = 0;
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            if (ids[i] == ids[j]) return 0;
            if (ids[i] > ids[j]) parity ^= 1;
        }
    return parity ? -1 : 1;
}

GP GP::constant(double c) {
    GP p;
    if (c != 0) p.terms[0] = c;
    return p;
}

GP GP::generator(int i) { return monomial({i}); }

GP GP::monomial(const std::vector<int>& ids, double c) {
    GP p;
    Mono m = 0;
    for (int i : ids) {
        if (i < 0 || i >= 64) throw GuardExceeded("Grassmann oracle supports at most 64 generators");
        m |= Mono(1) << i;
    }
    int s = sort_sign(ids);
    if (s != 0 && c != 0) p.terms[m] = s * c;
    return p;
}

GP GP::operator*(const GP& o) const {
    GP r;
    for (const auto& [ma, ca] : terms)
        for (const auto& [mb, cb] : o.terms) {
            if (ma & mb) continue;
            double v = ca * cb * merge_sign(ma, mb);
            double& slot = r.terms[ma | mb];
            slot += v;
        }
    std::erase_if(r.terms, [](const auto& kv) { return kv.second == 0; });
    return r;
}

GP GP::operator+(const GP& o) const {
    GP r = *this;
    for (const auto& [m, c] : o.terms) r.terms[m] += c;
    std::erase_if(r.terms, [](const auto& kv) { return kv.second == 0; });
    return r;
}

GP GP::scaled(double c) const {
    GP r;
    if (c == 0) return r;
    for (const auto& [m, v] : terms) r.terms[m] = v * c;
    return r;
}

double GP::coefficient(Mono m) const {
    auto it = terms.find(m);
    return it == terms.end() ? 0.0 : it->second;
}

Mono GP::support() const {
    Mono s = 0;
    for (const auto& kv : terms) s |= kv.first;
    return s;
}

GP gp_mul(const GP& a, const GP& b) { return a * b; }

GP gp_exp(const GP& a) {
    if (a.has_constant()) throw DomainError("gp_exp needs a polynomial without constant term");
    GP sum = GP::constant(1), power = GP::constant(1);
    for (int k = 1; k <= 65; ++k) {
        power = (power * a).scaled(1.0 / k);
        if (power.terms.empty()) break;
        sum = sum + power;
    }
    return sum;
}

double berezin_integrate(const GP& p, int n_generators) {
    if (n_generators > 64) throw GuardExceeded("Grassmann oracle supports at most 64 generators");
    return p.coefficient(full_mask(n_generators));
}

double integrate_product(const std::vector<GP>& factors, int n_generators) {
    if (n_generators > 64) throw GuardExceeded("Grassmann oracle supports at most 64 generators");
    const Mono full = full_mask(n_generators);
    std::vector<Mono> reach(factors.size() + 1, 0);
    for (std::size_t k = factors.size(); k-- > 0;) reach[k] = reach[k + 1] | factors[k].support();
    const std::size_t cap = std::size_t(1) << enumeration_guard_log2();
    std::map<Mono, double> cur{{0, 1.0}};
    for (std::size_t k = 0; k < factors.size(); ++k) {
        std::map<Mono, double> next;
        for (const auto& [ma, ca] : cur)
            for (const auto& [mb, cb] : factors[k].terms) {
                if (ma & mb) continue;
                Mono m = ma | mb;
                if ((full & ~m & ~reach[k + 1]) != 0) continue;
                next[m] += ca * cb * merge_sign(ma, mb);
            }
        std::erase_if(next, [](const auto& kv) { return kv.second == 0; });
        if (next.size() > cap)
            throw GuardExceeded("Grassmann oracle working set exceeds 2^" +
                                std::to_string(enumeration_guard_log2()) + " terms");
        cur.swap(next);
        if (cur.empty()) return 0.0;
    }
    auto it = cur.find(full);
    return it == cur.end() ? 0.0 : it->second;
}

GP face_action(int f) {
    GP p;
    for (int a = 0; a < 4; ++a)
        for (int c = a + 1; c < 4; ++c) p = p + GP::monomial({4 * f + a, 4 * f + c}, kFaceA[a][c]);
    return p;
}

GP long_edge_term(const GraphBundle& b, int e) {
    return GP::monomial({b.long_edges[e][0], b.long_edges[e][1]});
}

Eigen::MatrixXd action_matrix(const GraphBundle& b, const EdgeWeights& w) {
    const int n = b.n_cluster();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int f = 0; f < static_cast<int>(b.faces.size()); ++f)
        for (int a = 0; a < 4; ++a)
            for (int c = 0; c < 4; ++c) A(4 * f + a, 4 * f + c) = kFaceA[a][c];
    for (std::size_t e = 0; e < b.long_edges.size(); ++e) {
        auto [lo, hi] = b.long_edges[e];
        A(lo, hi) = w.x[e];
        A(hi, lo) = -w.x[e];
    }
    return A;
}

GP polynomial_from_matrix(const Eigen::MatrixXd& A) {
    GP p;
    for (int a = 0; a < A.rows(); ++a)
        for (int c = a + 1; c < A.cols(); ++c)
            if (A(a, c) != 0) p.terms[(Mono(1) << a) | (Mono(1) << c)] = A(a, c);
    return p;
}

Action build_action(const GraphBundle& b, const EdgeWeights& w) {
    if (b.n_cluster() > 64) throw GuardExceeded("Grassmann oracle supports at most 64 generators");
    Action act;
    act.A = action_matrix(b, w);
    for (int f = 0; f < static_cast<int>(b.faces.size()); ++f) act.poly = act.poly + face_action(f);
    for (std::size_t e = 0; e < b.long_edges.size(); ++e)
        act.poly = act.poly + long_edge_term(b, static_cast<int>(e)).scaled(w.x[e]);
    return act;
}

namespace {

template <class T>
std::vector<T> dense_copy(const Eigen::MatrixXd& A) {
    const int n = static_cast<int>(A.rows());
    std::vector<T> a(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i) * n + j] = T(A(i, j));
    return a;
}

}  // namespace

double pfaffian(const Eigen::MatrixXd& A) {
    return pfaffian_dense(dense_copy<double>(A), static_cast<int>(A.rows()));
}

Rational pfaffian_exact(const Eigen::MatrixXd& A) {
    return pfaffian_dense(dense_copy<Rational>(A), static_cast<int>(A.rows()));
}

double integrate_minor(const Eigen::MatrixXd& A, const std::vector<int>& ins) {
    const int n = static_cast<int>(A.rows());
    std::vector<char> taken(n, 0);
    for (int i : ins) {
        if (i < 0 || i >= n) throw DomainError("insertion outside the generator set");
        if (taken[i]) return 0.0;
        taken[i] = 1;
    }
    std::vector<int> seq = ins, J;
    for (int i = 0; i < n; ++i)
        if (!taken[i]) J.push_back(i);
    seq.insert(seq.end(), J.begin(), J.end());
    const int s = sort_sign(seq);
    Eigen::MatrixXd M(J.size(), J.size());
    for (std::size_t i = 0; i < J.size(); ++i)
        for (std::size_t j = 0; j < J.size(); ++j) M(i, j) = A(J[i], J[j]);
    return s * pfaffian(M);
}

SkewFactor::SkewFactor(const Eigen::MatrixXd& A) : n_(static_cast<int>(A.rows())), a_(A), perm_(n_) {
    for (int i = 0; i < n_; ++i) perm_[i] = i;
    if (n_ % 2) {
        singular_ = true, pf_ = 0;
        return;
    }
    auto& a = a_;
    for (int k = 0; k + 1 < n_; k += 2) {
        int piv = -1;
        double best = 0;
        for (int j = k + 1; j < n_; ++j)
            if (std::abs(a(k, j)) > best) best = std::abs(a(k, j)), piv = j;
        if (piv < 0) {
            singular_ = true, pf_ = 0;
            return;
        }
        if (piv != k + 1) {
            a.row(k + 1).swap(a.row(piv));
            a.col(k + 1).swap(a.col(piv));
            std::swap(perm_[k + 1], perm_[piv]);
            pf_ = -pf_;
        }
        const double p = a(k, k + 1);
        pf_ *= p;
        piv_.push_back(p);
        const int m = n_ - k - 2;
        if (m == 0) continue;
        // Schur complement of the 2x2 pivot block
        Eigen::VectorXd tau = a.block(k, k + 2, 1, m).transpose() / p;
        Eigen::VectorXd up = a.block(k + 1, k + 2, 1, m).transpose();
        Eigen::VectorXd left = a.block(k + 2, k + 1, m, 1);
        a.block(k + 2, k + 2, m, m).noalias() -= tau * up.transpose() + left * tau.transpose();
    }
}

Eigen::VectorXd SkewFactor::solve(const Eigen::VectorXd& rhs) const {
    if (singular_) throw NumericalFault("solve with a singular antisymmetric matrix");
    Eigen::VectorXd y(n_);
    for (int i = 0; i < n_; ++i) y[i] = rhs[perm_[i]];
    // L(i,k) = a(i,k+1)/p and L(i,k+1) = -a(i,k)/p below each block
    for (int k = 0; k + 1 < n_; k += 2) {
        const double p = piv_[k / 2], c0 = y[k] / p, c1 = y[k + 1] / p;
        const int m = n_ - k - 2;
        if (m) y.segment(k + 2, m) -= a_.block(k + 2, k + 1, m, 1) * c0 - a_.block(k + 2, k, m, 1) * c1;
    }
    for (int k = 0; k + 1 < n_; k += 2) {
        const double p = piv_[k / 2], z0 = y[k], z1 = y[k + 1];
        y[k] = -z1 / p;
        y[k + 1] = z0 / p;
    }
    for (int k = n_ - 2; k >= 0; k -= 2) {
        const double p = piv_[k / 2];
        const int m = n_ - k - 2;
        if (m == 0) continue;
        auto u = y.segment(k + 2, m);
        y[k] -= a_.col(k + 1).segment(k + 2, m).dot(u) / p;
        y[k + 1] += a_.col(k).segment(k + 2, m).dot(u) / p;
    }
    Eigen::VectorXd x(n_);
    for (int i = 0; i < n_; ++i) x[perm_[i]] = y[i];
    return x;
}

const Eigen::VectorXd& GaussianState::column(int j) const {
    if (cols.empty()) cols.resize(size());
    auto& c = cols[j];
    if (c.size() == 0) c = -f->solve(Eigen::VectorXd::Unit(size(), j));
    return c;
}

double GaussianState::g(int i, int j) const {
    if (!cols.empty() && cols[j].size()) return cols[j][i];
    if (!cols.empty() && cols[i].size()) return -cols[i][j];
    return column(j)[i];
}

Eigen::MatrixXd GaussianState::matrix() const {
    const int n = size();
    Eigen::MatrixXd G(n, n);
    for (int j = 0; j < n; ++j) G.col(j) = column(j);
    return 0.5 * (G - G.transpose());
}

double GaussianState::integrate(const std::vector<int>& ins) const {
    const int k = static_cast<int>(ins.size());
    if (sort_sign(ins) == 0 || k % 2) return 0.0;
    // Solve for all missing columns but one; every pair then has a column.
    int missing = 0;
    for (int i : ins) missing += cols.empty() || cols[i].size() == 0;
    for (int t = 0; t < k && missing > 1; ++t)
        if (cols.empty() || cols[ins[t]].size() == 0) column(ins[t]), --missing;
    Eigen::MatrixXd M(k, k);
    for (int i = 0; i < k; ++i) {
        M(i, i) = 0;
        for (int j = i + 1; j < k; ++j) M(i, j) = g(ins[i], ins[j]), M(j, i) = -M(i, j);
    }
    return Z * pfaffian(M);
}

GaussianState gaussian_state(const Eigen::MatrixXd& A) {
    GaussianState g;
    auto f = std::make_shared<SkewFactor>(A);
    g.Z = f->pfaffian();
    const double scale = std::max(1.0, A.size() ? A.cwiseAbs().maxCoeff() : 0.0);
    if (!(std::abs(g.Z) > 1e-300 * scale) || !std::isfinite(g.Z))
        throw NumericalFault("degenerate action: Pf(A) vanishes");
    g.f = std::move(f);
    return g;
}

std::vector<int> cluster_ids(const GraphBundle& b, const std::vector<HalfEdge>& hs) {
    std::vector<int> ids;
    for (const auto& h : hs) {
        int i = b.half_edge_id(h);
        if (i < 0) throw DomainError("half-edge " + to_string(h) + " is not in V_cluster");
        ids.push_back(i);
    }
    return ids;
}

double integrate_with_insertions(const GraphBundle& b, const EdgeWeights& w,
                                 const std::vector<HalfEdge>& insertions) {
    return integrate_minor(action_matrix(b, w), cluster_ids(b, insertions));
}

namespace {

// Factors of e^{S_x} arranged so that each face closes as early as possible.
std::vector<GP> action_factors(const GraphBundle& b, const EdgeWeights* w) {
    std::vector<GP> out;
    std::vector<char> done(b.dual_edges.size(), 0);
    std::vector<std::vector<int>> edges_at(b.faces.size());
    for (std::size_t e = 0; e < b.long_edges.size(); ++e)
        for (int hid : b.long_edges[e]) edges_at[hid / 4].push_back(static_cast<int>(e));
    for (int f = 0; f < static_cast<int>(b.faces.size()); ++f) {
        if (w)
            for (int e : edges_at[f]) {
                if (done[e]) continue;
                done[e] = 1;
                out.push_back(GP::constant(1) + long_edge_term(b, e).scaled(w->x[e]));
            }
        out.push_back(gp_exp(face_action(f)));
    }
    return out;
}

}  // namespace

double integrate_with_insertions_oracle(const GraphBundle& b, const EdgeWeights& w,
                                        const std::vector<HalfEdge>& insertions) {
    auto ids = cluster_ids(b, insertions);
    if (b.n_cluster() > 64) throw GuardExceeded("Grassmann oracle supports at most 64 generators");
    std::vector<GP> f{GP::monomial(ids)};
    auto rest = action_factors(b, &w);
    f.insert(f.end(), rest.begin(), rest.end());
    return integrate_product(f, b.n_cluster());
}

double partition_function_pfaffian(const GraphBundle& b, const EdgeWeights& w) {
    return pfaffian(action_matrix(b, w));
}

int indicator_identity(const GraphBundle& b, const std::vector<int>& edge_ids) {
    if (b.n_cluster() > 64) throw GuardExceeded("Grassmann oracle supports at most 64 generators");
    std::vector<int> gens;
    for (int e : edge_ids) {
        gens.push_back(b.long_edges.at(e)[0]);
        gens.push_back(b.long_edges.at(e)[1]);
    }
    std::vector<GP> f{GP::monomial(gens)};
    auto rest = action_factors(b, nullptr);
    f.insert(f.end(), rest.begin(), rest.end());
    double v = integrate_product(f, b.n_cluster());
    if (v == 0.0) return 0;
    if (v == 1.0) return 1;
    throw NumericalFault("indicator integral is neither 0 nor 1: " + std::to_string(v));
}

double two_point(const GraphBundle& b, const EdgeWeights& w, const HalfEdge& h1, const HalfEdge& h2) {
    auto ids = cluster_ids(b, {h1, h2});
    if (ids[0] == ids[1]) return 0.0;
    return gaussian_state(action_matrix(b, w)).g(ids[0], ids[1]);
}

int reduced_weight_sign(const GraphBundle& b, const std::vector<HalfEdge>& insertions,
                        const ContourConfig& p) {
    std::vector<int> seq = cluster_ids(b, insertions);
    for (int e : p.edges) {
        seq.push_back(b.long_edges[e][0]);
        seq.push_back(b.long_edges[e][1]);
    }
    const int nf = static_cast<int>(b.faces.size());
    std::vector<int> used(4 * nf, 0);
    for (int i : seq)
        if (used[i]++) return 0;
    int sign = 1;
    for (int f = 0; f < nf; ++f) {
        std::vector<int> J;
        for (int s = 0; s < 4; ++s)
            if (!used[4 * f + s]) J.push_back(s);
        if (J.size() % 2) return 0;
        if (J.size() == 2) sign *= kFaceA[J[0]][J[1]];
        for (int s : J) seq.push_back(4 * f + s);
    }
    return sign * sort_sign(seq);
}

double reduced_weight_oracle(const GraphBundle& b, const std::vector<HalfEdge>& insertions,
                             const ContourConfig& p) {
    std::vector<int> gens = cluster_ids(b, insertions);
    for (int e : p.edges) {
        gens.push_back(b.long_edges[e][0]);
        gens.push_back(b.long_edges[e][1]);
    }
    std::vector<GP> f{GP::monomial(gens)};
    auto rest = action_factors(b, nullptr);
    f.insert(f.end(), rest.begin(), rest.end());
    return integrate_product(f, b.n_cluster());
}

}  // namespace isinglab
