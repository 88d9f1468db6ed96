#include <cmath>
#include <complex>
#include <map>

#include "doctest.h"
#include "helpers.h"
#include "isinglab/errors.h"
#include "isinglab/sampler.h"

using namespace isinglab;
using testutil::bc_pairs;
using testutil::path_law;
using testutil::small_domains;

namespace {

using C = std::complex<double>;

BoundaryCondition vertical_bc(int w, int h) {
    int mid = w % 2 == 0 ? w - 1 : w - 2;
    return {{{Face{mid, -1}, DualEdge{mid, -2}}, {Face{mid, 2 * h - 1}, DualEdge{mid, 2 * h}}}};
}

using Counts = std::map<std::vector<DualEdge>, double>;

Counts tally(const std::vector<InterfacePath>& paths) {
    Counts c;
    for (const auto& p : paths) c[p.steps] += 1;
    return c;
}

// Every outcome within k binomial standard deviations of its probability.
bool within_bands(const Counts& counts, const std::map<std::vector<DualEdge>, double>& law, double n,
                  double k) {
    for (const auto& [path, p] : law) {
        auto it = counts.find(path);
        double got = it == counts.end() ? 0 : it->second;
        double sd = std::sqrt(n * p * (1 - p));
        if (std::abs(got - n * p) > k * sd + 1e-9) return false;
    }
    for (const auto& [path, c] : counts)
        if (!law.count(path)) return false;
    return true;
}

PotentialU pair_potential() { return make_potential_u({{{{0, 1}, {2, 1}}, 1.0}}); }

}  // namespace

TEST_CASE("exact sampler: conditionals sum to one and multiply to the path law") {
    for (const auto& d : small_domains(3)) {
        auto b = build_graphs(d);
        for (const auto& xi : bc_pairs(b, true, 13)) {
            if (!check_admissible(b, xi)) continue;
            auto w = EdgeWeights::uniform(b, 0.6);
            ExactSampler s(b, xi, w);
            for (const auto& [steps, p] : path_law(b, xi, w)) {
                InterfacePath cur = s.start();
                double prod = 1;
                for (std::size_t k = 1; k < steps.size(); ++k) {
                    auto cs = s.conditionals(cur);
                    double sum = 0;
                    const std::pair<InterfacePath, double>* next = nullptr;
                    for (const auto& c : cs) {
                        sum += c.second;
                        if (c.first.steps.back() == steps[k]) next = &c;
                    }
                    CHECK(std::abs(sum - 1) < 1e-10);
                    REQUIRE(next != nullptr);
                    prod *= next->second;
                    cur = next->first;
                }
                CHECK(std::abs(prod - p) < 1e-10);
            }
        }
    }
}

TEST_CASE("exact sampler: empirical frequencies match the path law") {
    auto b = build_graphs(rect_domain(0, 0, 1, 1));
    auto xi = vertical_bc(2, 2);
    auto w = EdgeWeights::critical(b);
    const int n = 20000;
    auto run = sample_exact_run(b, xi, w, 11, n, 2);
    auto law = path_law(b, xi, w);
    CHECK(law.size() > 3);
    CHECK(within_bands(tally(run.paths), law, n, 4));
    for (const auto& p : run.paths) {
        CHECK(p.terminated);
        CHECK(p.steps.back() == xi.marked[1].edge);
    }
}

TEST_CASE("exact sampler: runs do not depend on the worker count") {
    auto b = build_graphs(rect_domain(0, 0, 1, 1));
    auto xi = vertical_bc(2, 2);
    auto w = EdgeWeights::uniform(b, 0.5);
    auto a = sample_exact_run(b, xi, w, 5, 64, 1), c = sample_exact_run(b, xi, w, 5, 64, 3);
    for (int i = 0; i < 64; ++i) CHECK(a.paths[i].steps == c.paths[i].steps);
}

TEST_CASE("exact sampler: a boundary condition with one path") {
    auto b = build_graphs(rect_domain(0, 0, 0, 0));
    int found = 0;
    for (const auto& xi : bc_pairs(b, true)) {
        if (!check_admissible(b, xi)) continue;
        auto w = EdgeWeights::uniform(b, 0.3);
        auto law = path_law(b, xi, w);
        if (law.size() != 1) continue;
        ++found;
        ExactSampler s(b, xi, w);
        auto rng = stream_rng(3, 0);
        for (int k = 0; k < 20; ++k) CHECK(s.draw(rng).steps == law.begin()->first);
    }
    CHECK(found > 0);
}

TEST_CASE("heat-bath at lambda = 0 is the classical formula") {
    auto b = build_graphs(rect_domain(0, 0, 2, 2));
    auto xi = vertical_bc(3, 3);
    auto wit = check_admissible(b, xi);
    REQUIRE(wit);
    const double beta = 0.37, J = 1.2;
    GlauberChain chain(b, xi, *wit, InteractionParams(J, beta, 0.0), PotentialU{});
    auto rng = stream_rng(9, 0);
    for (int round = 0; round < 5; ++round) {
        chain.sweep(rng);
        auto g = global_spins(b, chain.contour(), &*wit);
        auto s = chain.spins();
        for (std::size_t k = 0; k < b.domain.size(); ++k) {
            Vertex v = b.domain[k];
            int h = g.at({v.x + 1, v.y}) + g.at({v.x - 1, v.y}) + g.at({v.x, v.y + 1}) + g.at({v.x, v.y - 1});
            double to = -s[k];
            double want = std::exp(beta * J * to * h) / (2 * std::cosh(beta * J * h));
            CHECK(chain.flip_probability(static_cast<int>(k)) == doctest::Approx(want).epsilon(1e-13));
        }
    }
}

TEST_CASE("heat-bath detailed balance with the multi-spin weight") {
    auto b = build_graphs(rect_domain(0, 0, 2, 1));
    auto xi = vertical_bc(3, 2);
    auto wit = check_admissible(b, xi);
    REQUIRE(wit);
    auto prm = InteractionParams::from_x(0.45, 1.0, 0.3);
    auto u = pair_potential();
    GlauberChain chain(b, xi, *wit, prm, u);
    auto weight = [&] { return interacting_contour_weight(b, chain.contour(), prm, u, wit->outer_contour); };
    auto rng = stream_rng(4, 0);
    for (int round = 0; round < 30; ++round) {
        chain.sweep(rng);
        for (int v = 0; v < static_cast<int>(b.domain.size()); ++v) {
            double pi0 = weight(), p01 = chain.flip_probability(v);
            auto s = chain.spins();
            s[v] = -s[v];
            chain.set_spins(s);
            double pi1 = weight(), p10 = chain.flip_probability(v);
            CHECK(pi0 * p01 == doctest::Approx(pi1 * p10).epsilon(1e-12));
            s[v] = -s[v];
            chain.set_spins(s);
        }
        CHECK(in_space(b, chain.contour(), &xi));
    }
}

TEST_CASE("chains at lambda = 0 agree with the exact sampler") {
    auto b = build_graphs(rect_domain(0, 0, 1, 1));
    auto xi = vertical_bc(2, 2);
    auto wit = check_admissible(b, xi);
    REQUIRE(wit);
    auto w = EdgeWeights::critical(b);
    auto prm = InteractionParams::from_x(x_critical, 1.0, 0.0);
    auto law = path_law(b, xi, w);
    auto exact = tally(sample_exact_run(b, xi, w, 21, 20000, 1).paths);
    for (auto method : {SampleMethod::Glauber, SampleMethod::SwendsenWang}) {
        auto run = sample_chain_run(b, xi, *wit, prm, PotentialU{}, method, 22, 4, 5000, 50, 3, 1);
        auto got = tally(run.paths);
        std::vector<double> a, c;
        for (const auto& [path, p] : law) {
            a.push_back(exact.count(path) ? exact[path] : 0);
            c.push_back(got.count(path) ? got[path] : 0);
        }
        auto t = chi2_two_sample(a, c);
        INFO(method_name(method) << " chi2 " << t.statistic << " dof " << t.dof);
        CHECK(t.p_value > 0.01);
    }
}

TEST_CASE("heat-bath at beta lambda = 0.1 samples the interacting contour law") {
    auto prm = InteractionParams::from_x(0.5, 1.0, 0.1);
    auto u = pair_potential();
    for (auto d : {rect_domain(0, 0, 1, 0), rect_domain(0, 0, 2, 0), make_domain({{0, 0}, {1, 0}, {1, 1}})}) {
        auto b = build_graphs(d);
        auto xs = bc_pairs(b, true, 17);
        REQUIRE(!xs.empty());
        auto xi = xs.front();
        auto wit = check_admissible(b, xi);
        if (!wit) continue;
        std::map<ContourConfig, double> law;
        double z = 0;
        for (const auto& p : enumerate_contours(b, xi)) {
            double wt = interacting_contour_weight(b, p, prm, u, wit->outer_contour);
            law[p] = wt;
            z += wt;
        }
        GlauberChain chain(b, xi, *wit, prm, u);
        auto rng = stream_rng(31, 0);
        for (int s = 0; s < 100; ++s) chain.sweep(rng);
        std::map<ContourConfig, double> seen;
        const int n = 40000;
        for (int k = 0; k < n; ++k) {
            chain.sweep(rng);
            seen[chain.contour()] += 1;
        }
        for (const auto& [p, wt] : law) {
            double q = wt / z, got = seen.count(p) ? seen[p] : 0;
            // successive sweeps are correlated; allow for an integrated autocorrelation of up to 4
            CHECK(std::abs(got - n * q) <= 4 * std::sqrt(4 * n * q * (1 - q)) + 1e-9);
        }
        for (const auto& [p, c] : seen) CHECK(law.count(p) == 1);
    }
}

TEST_CASE("sampled interfaces explore identically in both directions") {
    auto s = dobrushin_strip(12, 12);
    auto b = build_graphs(s.domain);
    auto wit = check_admissible(b, s.xi);
    REQUIRE(wit);
    GlauberChain chain(b, s.xi, *wit, InteractionParams::from_x(x_critical, 1, 0), PotentialU{});
    auto rng = stream_rng(2, 0);
    BoundaryCondition rev{{s.xi.marked[1], s.xi.marked[0]}};
    for (int k = 0; k < 50; ++k) {
        chain.cluster_sweep(rng);
        auto fwd = explore(b, chain.contour(), s.xi), bwd = explore(b, chain.contour(), rev);
        std::vector<DualEdge> a = fwd.steps, c = bwd.steps;
        std::reverse(c.begin(), c.end());
        CHECK(a == c);
    }
}

TEST_CASE("chi-square two-sample statistic") {
    auto same = chi2_two_sample({10, 20, 30}, {20, 40, 60});
    CHECK(same.statistic == doctest::Approx(0).epsilon(1e-15));
    CHECK(same.p_value == doctest::Approx(1));
    CHECK(same.dof == 2);
    // equal totals: sum (a - b)^2 / (a + b)
    auto t = chi2_two_sample({30, 10, 0}, {20, 20, 0});
    CHECK(t.statistic == doctest::Approx(100.0 / 50 + 100.0 / 30));
    CHECK(t.dof == 1);
    CHECK(t.p_value == doctest::Approx(std::erfc(std::sqrt(t.statistic / 2))));
}

TEST_CASE("driving function of a straight path is zero") {
    std::vector<C> curve;
    for (int k = 0; k <= 30; ++k) curve.emplace_back(0, 0.5 * k);
    auto r = extract_driving(curve);
    for (double w : r.W) CHECK(w == 0);
    for (std::size_t k = 1; k < r.t.size(); ++k) CHECK(r.t[k] > r.t[k - 1]);
    // a vertical slit of height y has capacity y^2 / 4
    CHECK(r.t.back() == doctest::Approx(15.0 * 15.0 / 4).epsilon(1e-12));
}

TEST_CASE("driving functions: reflection, round trip, splitting") {
    auto s = dobrushin_strip(16, 20);
    auto b = build_graphs(s.domain);
    auto wit = check_admissible(b, s.xi);
    REQUIRE(wit);
    GlauberChain chain(b, s.xi, *wit, InteractionParams::from_x(x_critical, 1, 0), PotentialU{});
    auto rng = stream_rng(8, 0);
    for (int k = 0; k < 10; ++k) {
        for (int j = 0; j < 3; ++j) chain.cluster_sweep(rng);
        auto path = chain.interface();
        auto pts = path_trace(path);
        for (auto& p : pts) p = s.geometry.to_half_plane(p);
        pts[0] = {pts[0].real(), 0};
        pts.resize(std::min<std::size_t>(pts.size(), 60));
        auto r = extract_driving(pts);
        CHECK(std::abs(r.W[0]) < 1e-12);

        std::vector<C> mirror;
        for (auto p : pts) mirror.emplace_back(-p.real(), p.imag());
        auto m = extract_driving(mirror);
        REQUIRE(m.W.size() == r.W.size());
        for (std::size_t i = 0; i < r.W.size(); ++i) {
            CHECK(std::abs(m.W[i] + r.W[i]) < 1e-9);
            CHECK(m.t[i] == doctest::Approx(r.t[i]).epsilon(1e-12));
        }

        auto tips = reconstruct_tips(r);
        double err = 0;
        for (std::size_t i = 0; i < tips.size(); ++i) err = std::max(err, std::abs(tips[i] - pts[i]));
        CHECK(err < 1e-6);

        auto split = extract_driving(pts, ZipOptions{0, 2});
        double dw = 0;
        for (std::size_t i = 0; i < r.W.size(); ++i) dw = std::max(dw, std::abs(split.W[i] - r.W[i]));
        CHECK(dw < 1e-8);
    }
}

TEST_CASE("strip map and zipper errors") {
    StripGeometry g{9, {3.5, -1}};
    for (C z : {C(3.5, 2), C(0, 5), C(7.9, 0.1), C(-0.4, 12)}) {
        C w = g.to_half_plane(z);
        CHECK(w.imag() > 0);
        CHECK(std::abs(g.from_half_plane(w) - z) < 1e-9);
    }
    CHECK(std::abs(g.to_half_plane({3.5, -1})) < 1e-15);
    CHECK_THROWS_AS(extract_driving(std::vector<C>{{0, 0}, {0, 1}, {0.5, -0.2}}), DomainError);
    CHECK_THROWS_AS(extract_driving(std::vector<C>{{0, 1}, {0, 2}}), DomainError);
    CHECK_THROWS_AS(dobrushin_strip(7, 4), DomainError);
}

TEST_CASE("kappa from synthetic Brownian driving") {
    auto recs = synthetic_brownian(10000, 50, 0.1, 3.0, 17);
    KappaOptions o;
    auto f = estimate_kappa(recs, o);
    CHECK(f.kappa >= 2.9);
    CHECK(f.kappa <= 3.1);
    CHECK(f.ci_low <= f.kappa);
    CHECK(f.ci_high >= f.kappa);
    CHECK(f.records == 10000);

    auto zero = estimate_kappa(synthetic_brownian(200, 20, 0.5, 0.0, 1), o);
    CHECK(std::abs(zero.kappa) < 1e-12);

    // t -> c t divides the slope by c
    const double c = 2.5;
    auto scaled = recs;
    for (auto& r : scaled)
        for (auto& t : r.t) t *= c;
    auto g = estimate_kappa(scaled, o);
    CHECK(g.kappa * c == doctest::Approx(f.kappa).epsilon(1e-9));

    CHECK_THROWS_AS(estimate_kappa(synthetic_brownian(50, 10, 1, 3, 2), o), DomainError);
}

TEST_CASE("scaling comparison is trivial at lambda = 0") {
    std::vector<Domain> ds = {rect_domain(0, 0, 0, 0), rect_domain(0, 0, 1, 1)};
    const double beta_c = -std::log(x_critical) / 2;
    auto fit = scaling_comparison(ds, InteractionParams(1.0, beta_c, 0.0), pair_potential());
    CHECK(fit.zeta_bulk == doctest::Approx(1).epsilon(1e-10));
    for (double z : fit.zeta) CHECK(z == doctest::Approx(1).epsilon(1e-10));
    for (double r : fit.remainders) CHECK(r < 1e-12);
    CHECK(fit.sign_flips == 0);
    CHECK(fit.beta_star == doctest::Approx(beta_c).epsilon(1e-3));
}

TEST_CASE("scaling comparison with a small perturbation") {
    std::vector<Domain> ds = {rect_domain(0, 0, 0, 0), rect_domain(0, 0, 1, 1)};
    const double beta_c = -std::log(x_critical) / 2;
    ScalingOptions o;
    o.scan_beta = false;
    auto fit = scaling_comparison(ds, InteractionParams(1.0, beta_c, 0.05), pair_potential(), o);
    CHECK(std::isfinite(fit.zeta_bulk));
    CHECK(fit.zeta_bulk > 0);
    CHECK(fit.sign_flips == 0);
    CHECK(fit.remainders.size() == 2);
    CHECK_THROWS_AS(scaling_comparison({rect_domain(0, 0, 0, 0)}, InteractionParams(1, 1, 0), PotentialU{}),
                    DomainError);
}
