#include "selftest.h"

#include <cmath>
#include <functional>

#include "isinglab/errors.h"

namespace isinglab::cli {

namespace {

struct Checks {
    json list = json::array();
    bool ok = true;
    void add(const std::string& name, bool pass, json detail = nullptr) {
        ok = ok && pass;
        json j = {{"check", name}, {"pass", pass}};
        if (!detail.is_null()) j["detail"] = std::move(detail);
        list.push_back(std::move(j));
    }
};

EdgeWeights varied(const GraphBundle& b) {
    EdgeWeights w;
    for (std::size_t i = 0; i < b.dual_edges.size(); ++i) w.x.push_back(0.2 + 0.05 * static_cast<double>(i % 7));
    return w;
}

InterfacePath start_of(const BoundaryCondition& xi) {
    InterfacePath p;
    p.steps = {xi.marked[0].edge};
    p.directed = {xi.marked[0]};
    return p;
}

void graphs(Checks& c) {
    auto b = build_graphs(rect_domain(0, 0, 1, 1));
    c.add("2x2 has 12 dual edges", b.dual_edges.size() == 12, b.dual_edges.size());
    c.add("2x2 has 9 faces", b.faces.size() == 9, b.faces.size());
    c.add("long edges match dual edges", b.long_edges.size() == b.dual_edges.size());
    bool ids = true;
    for (int i = 0; i < b.n_cluster(); ++i) ids = ids && b.half_edge_id(b.half_edge(i)) == i;
    c.add("cluster ids round-trip", ids);
    auto s = dobrushin_strip(4, 3);
    auto bs = build_graphs(s.domain);
    c.add("strip marks are admissible", check_admissible(bs, s.xi).has_value());
}

void enumerate(Checks& c) {
    for (auto d : {rect_domain(0, 0, 0, 0), rect_domain(0, 0, 1, 1), rect_domain(0, 0, 2, 1)}) {
        auto b = build_graphs(d);
        auto n = enumerate_contours(b).size();
        c.add("even contours = 2^|V| on " + std::to_string(d.size()) + " vertices", n == (std::size_t(1) << d.size()),
              n);
    }
    auto b = build_graphs(rect_domain(0, 0, 1, 1));
    auto par = std::vector<int>(b.faces.size(), 0);
    c.add("solver matches brute force", enumerate_parity(b, par, {}) == enumerate_parity_bruteforce(b, par, {}));
}

void partition(Checks& c) {
    auto b1 = build_graphs(rect_domain(0, 0, 0, 0));
    double z = partition_function_plus(b1, EdgeWeights::uniform(b1, 0.5));
    c.add("single vertex Z = 1 + x^4", std::abs(z - 1.0625) < 1e-15, z);
    auto b = build_graphs(rect_domain(0, 0, 1, 1));
    auto w = varied(b);
    double zc = partition_function_plus(b, w), zp = partition_function_pfaffian(b, w);
    c.add("Pfaffian equals contour sum", std::abs(zc - zp) < 1e-12 * zc, json::array({zc, zp}));
    auto s = dobrushin_strip(2, 2);
    auto bs = build_graphs(s.domain);
    auto ws = varied(bs);
    double zd = partition_function_dobrushin(bs, ws, s.xi);
    double zg = std::abs(integrate_with_insertions(bs, ws, s.xi.marked));
    c.add("Dobrushin Z equals two-point integral", std::abs(zd - zg) < 1e-12 * zd, json::array({zd, zg}));
}

void identity(Checks& c) {
    auto b = build_graphs(rect_domain(0, 0, 0, 0));
    const int m = static_cast<int>(b.dual_edges.size());
    int agree = 0;
    for (int mask = 0; mask < (1 << m); ++mask) {
        std::vector<int> s;
        for (int e = 0; e < m; ++e)
            if (mask >> e & 1) s.push_back(e);
        agree += indicator_identity(b, s) == (in_space(b, ContourConfig{s}, nullptr) ? 1 : 0);
    }
    c.add("indicator matches parity on every subset", agree == (1 << m), agree);
}

void explore_checks(Checks& c) {
    auto s = dobrushin_strip(2, 3);
    auto b = build_graphs(s.domain);
    int bad = 0, total = 0;
    for (const auto& p : enumerate_contours(b, s.xi)) {
        ++total;
        auto path = explore(b, p, s.xi);
        if (!path.terminated || !path.n_out) {
            ++bad;
            continue;
        }
        for (int n = 0; n <= *path.n_out; ++n) {
            auto fs = forced_sets(b, path.prefix(n), s.xi.marked[1]);
            if (!in_event(p, fs) || extend_contour(b, reduce_contour(p, fs), fs) != p) ++bad;
        }
    }
    c.add("every contour reaches h_out and round-trips", bad == 0 && total > 0, json::array({total, bad}));
}

void observable(Checks& c) {
    auto s = dobrushin_strip(2, 2);
    auto b = build_graphs(s.domain);
    FEvaluator ev(b, Model::free(EdgeWeights::critical(b)));
    auto v = M_observable(ev, start_of(s.xi), s.xi.marked[1], s.xi.marked[1]);
    c.add("M(h_out) = 1", std::abs(v.ratio - 1) < 1e-14, v.ratio);
    auto pre = start_of(s.xi);
    double f_full = ev.full(pre, s.xi.marked[1]), f_enum = ev.enumerate(pre, s.xi.marked[1]);
    c.add("full route equals enumeration", std::abs(f_full - f_enum) < 1e-12 * std::abs(f_enum),
          json::array({f_full, f_enum}));
}

void audit(Checks& c) {
    auto s = dobrushin_strip(2, 3);
    auto b = build_graphs(s.domain);
    auto r = martingale_audit(b, Model::free(EdgeWeights::critical(b)), s.xi);
    c.add("free martingale residual < 1e-12", r.max_residual < 1e-12 && r.checks > 0, r.max_residual);
    c.add("conditional laws sum to 1", r.max_law_defect < 1e-12, r.max_law_defect);
}

void sholo(Checks& c) {
    auto s = dobrushin_strip(4, 3);
    auto b = build_graphs(s.domain);
    FEvaluator ev(b, Model::free(EdgeWeights::critical(b)));
    auto pre = start_of(s.xi);
    auto r = s_holomorphicity_residual(complex_observable(ev, pre, s.xi.marked[1]), pre.directed.back().face);
    c.add("calibrated residual at x_c < 1e-9", r.corners > 0 && r.max_residual < 1e-9,
          json::array({r.corners, r.max_residual}));
}

void polymers(Checks& c) {
    auto b = build_graphs(rect_domain(0, 0, 1, 1));
    auto u = make_potential_u({{{DualEdge{1, 0}, DualEdge{3, 0}}, 1.0}});
    auto zero = polymer_table(b, build_interacting_action(b, InteractionParams::from_x(0.3, 1, 0), u, {}));
    bool all_zero = true;
    for (const auto& r : zero) all_zero = all_zero && r.value == 0;
    c.add("lambda = 0 gives no activity", all_zero);
    auto rows = polymer_table(b, build_interacting_action(b, InteractionParams::from_x(0.3, 1, 0.05), u, {}));
    bool shaped = !rows.empty();
    for (const auto& r : rows)
        shaped = shaped && r.t >= static_cast<int>(r.support.size()) && r.t == steiner_size(r.support);
    c.add("T(X) >= |X| for every polymer", shaped, rows.size());
    auto fit = fit_decay(rows);
    c.add("activities decay with T(X)", fit.points > 1 && fit.slope < 0, fit.slope);
}

void sample(Checks& c) {
    auto s = dobrushin_strip(2, 2);
    auto b = build_graphs(s.domain);
    auto w = EdgeWeights::critical(b);
    auto a = sample_exact_run(b, s.xi, w, 7, 50, 1), a2 = sample_exact_run(b, s.xi, w, 7, 50, 2);
    bool same = a.paths.size() == a2.paths.size(), done = true;
    for (std::size_t i = 0; i < a.paths.size() && same; ++i) same = a.paths[i].steps == a2.paths[i].steps;
    for (const auto& p : a.paths) done = done && p.terminated && p.steps.back() == s.xi.marked[1].edge;
    c.add("draws end at e(h_out)", done);
    c.add("draws do not depend on the worker count", same);
    ExactSampler es(b, s.xi, w);
    double sum = 0;
    for (const auto& [p, q] : es.conditionals(es.start())) sum += q;
    c.add("first-step law sums to 1", std::abs(sum - 1) < 1e-12, sum);
}

void driving(Checks& c) {
    std::vector<std::complex<double>> line;
    for (int k = 0; k <= 10; ++k) line.push_back({0, 0.5 * k});
    auto r = extract_driving(line);
    double wmax = 0;
    for (double v : r.W) wmax = std::max(wmax, std::abs(v));
    c.add("vertical segment has W = 0", wmax < 1e-12, wmax);
    c.add("capacity of a vertical segment is y^2/4", std::abs(r.t.back() - 25.0 / 4) < 1e-9, r.t.back());
    std::vector<std::complex<double>> bent = {{0, 0}, {0, 1}, {0.5, 1.5}, {1, 1.8}, {1.2, 2.5}};
    auto rb = extract_driving(bent);
    auto tips = reconstruct_tips(rb);
    double err = 0;
    for (std::size_t k = 0; k < tips.size(); ++k) err = std::max(err, std::abs(tips[k] - bent[k]));
    c.add("zipper round-trip", err < 1e-6, err);
}

void kappa(Checks& c) {
    auto fit = estimate_kappa(synthetic_brownian(2000, 100, 0.1, 2.0, 3), KappaOptions{1, 10, 20, 100, 3});
    c.add("synthetic kappa = 2 recovered", std::abs(fit.kappa - 2) < 0.2, fit.kappa);
    c.add("interval brackets the estimate", fit.ci_low <= fit.kappa && fit.kappa <= fit.ci_high,
          json::array({fit.ci_low, fit.ci_high}));
}

void scaling(Checks& c) {
    ScalingOptions so;
    so.scan_beta = false;
    auto fit = scaling_comparison({rect_domain(0, 0, 0, 0), rect_domain(0, 0, 1, 1)},
                                  InteractionParams::from_x(x_critical, 1, 0), {}, so);
    c.add("lambda = 0 at x_c gives zeta = 1", std::abs(fit.zeta_bulk - 1) < 1e-10, fit.zeta_bulk);
    c.add("lambda = 0 at x_c gives R = 0", fit.remainder_norm < 1e-10, fit.remainder_norm);
}

}  // namespace

json run_selftest(const std::string& command) {
    static const std::map<std::string, std::function<void(Checks&)>> table = {
        {"graphs", graphs},       {"enumerate", enumerate},     {"partition", partition},
        {"identity-check", identity}, {"explore", explore_checks}, {"observable", observable},
        {"martingale-audit", audit},  {"sholo-check", sholo},       {"polymer-table", polymers},
        {"sample", sample},       {"driving", driving},         {"kappa", kappa},
        {"scaling-compare", scaling}};
    auto it = table.find(command);
    if (it == table.end()) throw DomainError("no selftest for '" + command + "'");
    Checks c;
    it->second(c);
    return {{"selftest", command}, {"checks", c.list}, {"result", c.ok ? "PASS" : "FAIL"}};
}

}  // namespace isinglab::cli
