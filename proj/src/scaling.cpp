#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>

#include "isinglab/errors.h"
#include "isinglab/sampler.h"

namespace isinglab {

namespace {

struct DomainFit {
    std::vector<double> zeta;  // per cluster id, 0 where unfitted
    double remainder = 0;
    double bulk_median = 0;
    int sign_flips = 0;
    std::vector<std::pair<double, double>> decay;  // (separation, |R|)
};

std::complex<double> position(const HalfEdge& h) {
    return {(h.face.x2 + h.edge.mx2) / 4.0, (h.face.y2 + h.edge.my2) / 4.0};
}

double median(std::vector<double> v, double q = 0.5) {
    if (v.empty()) return NAN;
    std::sort(v.begin(), v.end());
    return v[static_cast<std::size_t>(q * (v.size() - 1) + 0.5)];
}

DomainFit fit_domain(const GraphBundle& b, const InteractionParams& prm, const PotentialU& u) {
    const int n = b.n_cluster();
    auto act = build_interacting_action(b, prm, u, {});
    auto gs = gaussian_state(act.A);
    auto groups = polymer_groups(b, act);
    const double z = interacting_integral(gs, groups, {});
    const Eigen::MatrixXd g0 = gaussian_state(action_matrix(b, EdgeWeights::critical(b))).matrix();

    struct Pair {
        int i, j;
        double inter, free;
    };
    std::vector<Pair> pairs;
    double scale = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) scale = std::max(scale, std::abs(g0(i, j)));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (std::abs(g0(i, j)) <= 1e-12 * scale) continue;
            pairs.push_back({i, j, interacting_integral(gs, groups, {i, j}) / z, g0(i, j)});
        }
    DomainFit out;
    out.zeta.assign(n, 0);
    if (pairs.empty()) return out;

    int positive = 0;
    for (const auto& p : pairs) positive += p.inter / p.free > 0;
    const int sign = 2 * positive >= static_cast<int>(pairs.size()) ? 1 : -1;
    for (const auto& p : pairs)
        if ((p.inter / p.free > 0 ? 1 : -1) != sign)
            ++out.sign_flips;

    // log|r_ij| = a_i + a_j in the least-squares sense
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pairs.size()), n);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        D(k, pairs[k].i) = D(k, pairs[k].j) = 1;
        rhs(k) = std::log(std::abs(pairs[k].inter / pairs[k].free));
    }
    Eigen::VectorXd a = D.colPivHouseholderQr().solve(rhs);
    for (int i = 0; i < n; ++i) out.zeta[i] = std::exp(a(i));
    for (const auto& p : pairs) {
        double r = p.inter - sign * out.zeta[p.i] * out.zeta[p.j] * p.free;
        out.remainder = std::max(out.remainder, std::abs(r));
        double sep = std::abs(position(b.half_edge(p.i)) - position(b.half_edge(p.j)));
        out.decay.emplace_back(sep, std::abs(r));
    }

    // bulk: faces whose four corners are all in the domain
    std::vector<double> bulk, every;
    for (int i = 0; i < n; ++i) {
        Face f = b.half_edge(i).face;
        bool inner = true;
        for (int dx : {-1, 1})
            for (int dy : {-1, 1}) inner &= b.contains(Vertex{(f.x2 + dx) / 2, (f.y2 + dy) / 2});
        every.push_back(out.zeta[i]);
        if (inner) bulk.push_back(out.zeta[i]);
    }
    out.bulk_median = median(bulk.empty() ? every : bulk);
    return out;
}

}  // namespace

ScalingFit scaling_comparison(const std::vector<Domain>& domains, const InteractionParams& prm,
                              const PotentialU& u, const ScalingOptions& opt) {
    if (domains.size() < 2) throw DomainError("scaling comparison needs at least two domains");
    std::vector<GraphBundle> bundles;
    for (const auto& d : domains) bundles.push_back(build_graphs(d));
    const GraphBundle& last = bundles.back();

    ScalingFit fit;
    DomainFit top;
    for (const auto& b : bundles) {
        auto f = fit_domain(b, prm, u);
        fit.remainders.push_back(f.remainder);
        fit.zeta_by_domain.push_back(f.bulk_median);
        top = std::move(f);
    }
    fit.zeta = top.zeta;
    fit.sign_flips = top.sign_flips;
    fit.remainder_norm = top.remainder;
    fit.zeta_bulk = top.bulk_median;
    {
        std::vector<double> z(top.zeta.begin(), top.zeta.end());
        fit.zeta_low = median(z, 0.25), fit.zeta_high = median(z, 0.75);
    }

    // |R| against separation: the largest |R| per separation, log-log slope -(1 + theta)
    std::map<long, double> by_sep;
    for (auto [s, r] : top.decay) {
        if (s < 1 || !(r > 0)) continue;
        auto& m = by_sep[std::lround(s * 4)];
        m = std::max(m, r);
    }
    if (by_sep.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, k = 0;
        for (auto [s4, r] : by_sep) {
            double x = std::log(s4 / 4.0), y = std::log(r);
            sx += x, sy += y, sxx += x * x, sxy += x * y, ++k;
        }
        double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
        fit.theta = -slope - 1;
    } else {
        fit.theta = NAN;
    }

    const double beta_c = -std::log(x_critical) / (2 * prm.J);
    fit.beta_star = NAN;
    if (opt.scan_beta) {
        double lo = opt.beta_low > 0 ? opt.beta_low : beta_c / 1.5;
        double hi = opt.beta_high > 0 ? opt.beta_high : beta_c * 1.5;
        auto f = [&](double beta) {
            return fit_domain(last, InteractionParams(prm.J, beta, prm.lambda), u).remainder;
        };
        const double r = (std::sqrt(5.0) - 1) / 2;
        double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
        double fc = f(c), fd = f(d);
        for (int k = 0; k < opt.golden_steps; ++k) {
            if (fc <= fd) {
                hi = d, d = c, fd = fc;
                c = hi - r * (hi - lo);
                fc = f(c);
            } else {
                lo = c, c = d, fc = fd;
                d = lo + r * (hi - lo);
                fd = f(d);
            }
        }
        fit.beta_star = (lo + hi) / 2;
    }
    return fit;
}

}  // namespace isinglab
