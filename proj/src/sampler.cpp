#include "isinglab/sampler.h"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <deque>
#include <exception>
#include <memory>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include "isinglab/errors.h"

namespace isinglab {

namespace {

using cd = std::complex<double>;

// Runs fn(worker, i) for i in [0, count), worker w taking i = w mod workers.
void parallel_indices(int count, int workers, const std::function<void(int, int)>& fn) {
    if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(0, i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < count; i += workers) fn(w, i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0, 1)(rng); }

std::string steps_text(const InterfacePath& p) {
    std::string s;
    for (const auto& e : p.steps) s += (s.empty() ? "" : " ") + to_string(e);
    return s;
}

// A shortest dual path between the two marked faces: one element of P^xi.
ContourConfig seed_contour(const GraphBundle& b, const BoundaryCondition& xi) {
    const int nf = static_cast<int>(b.faces.size());
    std::vector<std::vector<std::pair<int, int>>> adj(nf);
    for (std::size_t e = 0; e < b.dual_edges.size(); ++e) {
        auto fs = b.dual_edges[e].faces();
        int a = b.face_id(fs[0]), c = b.face_id(fs[1]);
        adj[a].push_back({c, static_cast<int>(e)});
        adj[c].push_back({a, static_cast<int>(e)});
    }
    const int from = b.face_id(xi.marked[0].face), to = b.face_id(xi.marked[1].face);
    std::vector<int> via(nf, -2);
    std::deque<int> q{from};
    via[from] = -1;
    while (!q.empty()) {
        int f = q.front();
        q.pop_front();
        for (auto [g, e] : adj[f])
            if (via[g] == -2) via[g] = e, q.push_back(g);
    }
    if (via[to] == -2) throw DomainError("marked faces are not connected inside the domain");
    ContourConfig p;
    for (int f = to; f != from;) {
        int e = via[f];
        p.edges.push_back(e);
        auto fs = b.dual_edges[e].faces();
        int a = b.face_id(fs[0]);
        f = a == f ? b.face_id(fs[1]) : a;
    }
    std::sort(p.edges.begin(), p.edges.end());
    return p;
}

}  // namespace

const char* method_name(SampleMethod m) {
    switch (m) {
        case SampleMethod::ExactSequential: return "exact-sequential";
        case SampleMethod::Glauber: return "glauber";
        case SampleMethod::SwendsenWang: return "swendsen-wang";
    }
    return "?";
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

// ---- exact sequential sampler

ExactSampler::ExactSampler(const GraphBundle& b, const BoundaryCondition& xi, const EdgeWeights& w)
    : ev_(b, Model::free(w)), xi_(xi) {
    validate_bc(b, xi);
    if (xi.marked.size() != 2) throw DomainError("sampling needs exactly two marked half-edges");
}

InterfacePath ExactSampler::start() const {
    InterfacePath p;
    p.steps = {xi_.marked[0].edge};
    p.directed = {xi_.marked[0]};
    return p;
}

std::vector<std::pair<InterfacePath, double>> ExactSampler::conditionals(const InterfacePath& prefix) {
    const HalfEdge& h_out = xi_.marked[1];
    const double f = ev_.full(prefix, h_out);
    if (!(std::abs(f) > 0) || !std::isfinite(f))
        throw NumericalFault("F(gamma; h_out) vanishes at prefix " + steps_text(prefix));
    std::vector<std::pair<InterfacePath, double>> out;
    double sum = 0;
    for (auto& c : continuations(prefix)) {
        double p = ev_.full(c, h_out) / f;
        if (p < -1e-12)
            throw NumericalFault("negative conditional probability " + std::to_string(p) + " at " +
                                 steps_text(c));
        p = std::max(p, 0.0);
        sum += p;
        out.emplace_back(std::move(c), p);
    }
    if (std::abs(sum - 1) > 1e-10)
        throw NumericalFault("conditional probabilities sum to " + std::to_string(sum) + " at " +
                             steps_text(prefix));
    return out;
}

InterfacePath ExactSampler::draw(std::mt19937_64& rng) {
    const HalfEdge& h_out = xi_.marked[1];
    InterfacePath path = start();
    const std::size_t limit = ev_.bundle().dual_edges.size() + 2;
    while (path.steps.size() <= limit) {
        auto cs = conditionals(path);
        const double u = uniform01(rng);
        double acc = 0;
        std::size_t pick = cs.size();
        for (std::size_t i = 0; i < cs.size(); ++i) {
            if (cs[i].second <= 0) continue;
            pick = i;
            acc += cs[i].second;
            if (u < acc) break;
        }
        if (pick == cs.size()) throw NumericalFault("no continuation with positive probability");
        const bool done = cs[pick].first.steps.back() == h_out.edge &&
                          path.directed.back().face == h_out.face;
        path = std::move(cs[pick].first);
        if (done) {
            path.terminated = true;
            path.n_out = path.n();
            return path;
        }
    }
    throw NumericalFault("sampled path does not reach h_out");
}

InterfacePath sample_exact(const GraphBundle& b, const BoundaryCondition& xi, const EdgeWeights& w,
                           std::uint64_t seed) {
    ExactSampler s(b, xi, w);
    auto rng = stream_rng(seed, 0);
    return s.draw(rng);
}

SampleRun sample_exact_run(const GraphBundle& b, const BoundaryCondition& xi, const EdgeWeights& w,
                           std::uint64_t seed, int count, int workers) {
    SampleRun run;
    run.seed = seed;
    run.method = SampleMethod::ExactSequential;
    run.paths.resize(std::max(0, count));
    std::vector<std::unique_ptr<ExactSampler>> samplers;
    std::mutex mu;
    parallel_indices(count, workers, [&](int wk, int i) {
        ExactSampler* s;
        {
            std::lock_guard<std::mutex> lock(mu);
            if (static_cast<int>(samplers.size()) <= wk) samplers.resize(wk + 1);
            if (!samplers[wk]) samplers[wk] = std::make_unique<ExactSampler>(b, xi, w);
            s = samplers[wk].get();
        }
        auto rng = stream_rng(seed, i);
        run.paths[i] = s->draw(rng);
    });
    return run;
}

// ---- spin chains

GlauberChain::GlauberChain(const GraphBundle& b, const BoundaryCondition& xi,
                           const AdmissibilityWitness& wit, const InteractionParams& prm,
                           const PotentialU& u)
    : b_(b), xi_(xi), prm_(prm) {
    validate_bc(b, xi);
    if (xi.marked.size() != 2) throw DomainError("spin chains need exactly two marked half-edges");
    free_ = u.empty() || prm.lambda == 0 || prm.beta == 0;
    const GlobalSpins g = global_spins(b, seed_contour(b, xi), &wit);
    const int pad = 2 + static_cast<int>(std::ceil(free_ ? 0.0 : u.range()));
    x0_ = g.x0 - pad, y0_ = g.y0 - pad, w_ = g.w + 2 * pad, h_ = g.h + 2 * pad;
    s_.resize(static_cast<std::size_t>(w_) * h_);
    for (int i = 0; i < w_; ++i)
        for (int j = 0; j < h_; ++j) s_[static_cast<std::size_t>(i) * h_ + j] = g.at({x0_ + i, y0_ + j});

    for (auto v : b.domain) {
        site_cell_.push_back(cell(v));
        nbr_.push_back({cell({v.x + 1, v.y}), cell({v.x - 1, v.y}), cell({v.x, v.y + 1}),
                        cell({v.x, v.y - 1})});
    }
    auto cells_of = [&](const DualEdge& e) {
        auto pv = e.primal();
        return std::make_pair(cell(pv[0]), cell(pv[1]));
    };
    for (const auto& e : b.dual_edges) dual_cells_.push_back(cells_of(e));
    bonds_ = dual_cells_;
    if (!free_) {
        terms_.resize(b.domain.size());
        for (std::size_t k = 0; k < b.domain.size(); ++k) {
            Vertex v = b.domain[k];
            std::vector<DualEdge> kv = {{2 * v.x + 1, 2 * v.y}, {2 * v.x - 1, 2 * v.y},
                                        {2 * v.x, 2 * v.y + 1}, {2 * v.x, 2 * v.y - 1}};
            std::sort(kv.begin(), kv.end());
            for (const auto& tr : translates_touching(u, kv)) {
                Term t;
                t.value = tr.value;
                for (const auto& e : tr.edges) t.edges.push_back(cells_of(e));
                terms_[k].push_back(std::move(t));
            }
        }
    }
}

int GlauberChain::cell(Vertex v) const {
    int i = v.x - x0_, j = v.y - y0_;
    if (i < 0 || j < 0 || i >= w_ || j >= h_) throw DomainError("vertex outside the spin grid");
    return i * h_ + j;
}

// Log weight of the factors that change with the spin at site v.
double GlauberChain::local_log_weight(int v) const {
    const int c = site_cell_[v];
    int d = 0;
    for (int n : nbr_[v]) d += s_[n] != s_[c];
    double lw = d * std::log(prm_.x());
    if (!free_) {
        double e = 0;
        for (const auto& t : terms_[v]) {
            bool all = true;
            for (auto [p, q] : t.edges)
                if (s_[p] == s_[q]) {
                    all = false;
                    break;
                }
            if (all) e += t.value;
        }
        lw -= prm_.beta * prm_.lambda * e;
    }
    return lw;
}

double GlauberChain::flip_probability(int v) const {
    auto& s = const_cast<std::vector<signed char>&>(s_);
    const int c = site_cell_[v];
    const double a = local_log_weight(v);
    s[c] = static_cast<signed char>(-s[c]);
    const double f = local_log_weight(v);
    s[c] = static_cast<signed char>(-s[c]);
    return 1 / (1 + std::exp(a - f));
}

void GlauberChain::update(int v, std::mt19937_64& rng) {
    if (uniform01(rng) < flip_probability(v)) s_[site_cell_[v]] = static_cast<signed char>(-s_[site_cell_[v]]);
}

void GlauberChain::sweep(std::mt19937_64& rng) {
    for (int v = 0; v < static_cast<int>(site_cell_.size()); ++v) update(v, rng);
}

void GlauberChain::cluster_sweep(std::mt19937_64& rng) {
    if (!free_) throw DomainError("cluster updates need U = 0");
    const int n = w_ * h_, fixed = n;
    std::vector<int> parent(n + 1);
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<char> is_site(n, 0);
    for (int c : site_cell_) is_site[c] = 1;
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    auto unite = [&](int a, int c) {
        a = find(a), c = find(c);
        if (a == c) return;
        if (a == fixed) std::swap(a, c);
        parent[a] = c;  // the fixed root stays a root
    };
    const double p = 1 - prm_.x();
    for (auto [a, c] : bonds_) {
        if (s_[a] != s_[c] || uniform01(rng) >= p) continue;
        unite(is_site[a] ? a : fixed, is_site[c] ? c : fixed);
    }
    std::vector<signed char> flip(n + 1, 0);  // 0 undecided, 1 keep, -1 flip
    flip[fixed] = 1;
    for (int c : site_cell_) {
        int r = find(c);
        if (!flip[r]) flip[r] = uniform01(rng) < 0.5 ? -1 : 1;
        s_[c] = static_cast<signed char>(s_[c] * flip[r]);
    }
}

Spins GlauberChain::spins() const {
    Spins out;
    for (int c : site_cell_) out.push_back(s_[c]);
    return out;
}

void GlauberChain::set_spins(const Spins& s) {
    if (s.size() != site_cell_.size()) throw DomainError("spin vector has the wrong length");
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] != 1 && s[k] != -1) throw DomainError("spins must be +1 or -1");
        s_[site_cell_[k]] = static_cast<signed char>(s[k]);
    }
}

ContourConfig GlauberChain::contour() const {
    ContourConfig p;
    for (std::size_t e = 0; e < dual_cells_.size(); ++e)
        if (s_[dual_cells_[e].first] != s_[dual_cells_[e].second]) p.edges.push_back(static_cast<int>(e));
    return p;
}

InterfacePath GlauberChain::interface() const { return explore(b_, contour(), xi_); }

InterfacePath sample_glauber(const GraphBundle& b, const BoundaryCondition& xi,
                             const AdmissibilityWitness& wit, const InteractionParams& prm,
                             const PotentialU& u, std::uint64_t seed, int sweeps) {
    GlauberChain chain(b, xi, wit, prm, u);
    auto rng = stream_rng(seed, 0);
    for (int s = 0; s < sweeps; ++s) chain.sweep(rng);
    return chain.interface();
}

SampleRun sample_chain_run(const GraphBundle& b, const BoundaryCondition& xi,
                           const AdmissibilityWitness& wit, const InteractionParams& prm,
                           const PotentialU& u, SampleMethod method, std::uint64_t seed, int chains,
                           int per_chain, int burn_in, int thinning, int workers) {
    if (method == SampleMethod::ExactSequential)
        throw DomainError("sample_chain_run needs a Markov chain method");
    SampleRun run;
    run.seed = seed;
    run.method = method;
    run.burn_in = burn_in;
    run.thinning = thinning;
    run.paths.resize(static_cast<std::size_t>(std::max(0, chains)) * std::max(0, per_chain));
    parallel_indices(chains, workers, [&](int, int c) {
        GlauberChain chain(b, xi, wit, prm, u);
        auto rng = stream_rng(seed, c);
        auto step = [&] {
            if (method == SampleMethod::SwendsenWang)
                chain.cluster_sweep(rng);
            else
                chain.sweep(rng);
        };
        for (int s = 0; s < burn_in; ++s) step();
        for (int k = 0; k < per_chain; ++k) {
            for (int s = 0; s < std::max(1, thinning); ++s) step();
            run.paths[static_cast<std::size_t>(c) * per_chain + k] = chain.interface();
        }
    });
    return run;
}

ChiSquare chi2_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DomainError("chi-square: bin counts differ in length");
    const double A = std::accumulate(a.begin(), a.end(), 0.0), B = std::accumulate(b.begin(), b.end(), 0.0);
    if (!(A > 0) || !(B > 0)) throw DomainError("chi-square: empty sample");
    ChiSquare r;
    int bins = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] + b[i] <= 0) continue;
        ++bins;
        double d = std::sqrt(B / A) * a[i] - std::sqrt(A / B) * b[i];
        r.statistic += d * d / (a[i] + b[i]);
    }
    r.dof = bins - 1;
    if (r.dof > 0)
        r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
    return r;
}

// ---- Loewner driving functions

cd StripGeometry::to_half_plane(cd z) const {
    const double s = width / M_PI;
    return s * std::sin((z - origin) / s);
}

cd StripGeometry::from_half_plane(cd w) const {
    const double s = width / M_PI;
    return origin + s * std::asin(w / s);
}

StripSetup dobrushin_strip(int width, int height) {
    if (width < 2 || width % 2 || height < 1) throw DomainError("strip width must be even and positive");
    StripSetup s;
    s.domain = rect_domain(0, 0, width - 1, height - 1);
    const int mid = width - 1;
    s.xi.marked = {{Face{mid, -1}, DualEdge{mid, -2}}, {Face{mid, 2 * height - 1}, DualEdge{mid, 2 * height}}};
    s.geometry.width = width + 1;
    s.geometry.origin = {mid / 2.0, -1.0};
    return s;
}

std::vector<cd> path_trace(const InterfacePath& path) {
    std::vector<cd> out;
    for (const auto& e : path.steps) out.emplace_back(e.mx2 / 2.0, e.my2 / 2.0);
    return out;
}

namespace {

// Vertical slit map g(z) = W + sqrt((z - W)^2 + y^2), sending H minus [W, W + iy] onto H.
cd slit_map(cd z, double W, double y) {
    cd d = z - W;
    cd s = std::sqrt(d * d + y * y);
    if (s.imag() < 0 || (s.imag() == 0 && s.real() * d.real() < 0)) s = -s;
    return W + s;
}

cd slit_inverse(cd w, double W, double y) {
    cd d = w - W;
    cd s = std::sqrt(d * d - y * y);
    if (s.imag() < 0 || (s.imag() == 0 && s.real() * d.real() < 0)) s = -s;
    return W + s;
}

}  // namespace

DrivingRecord extract_driving(const std::vector<cd>& curve, const ZipOptions& opt) {
    if (curve.empty()) throw DomainError("empty curve");
    if (std::abs(curve[0].imag()) > 1e-9) throw DomainError("curve does not start on the real line");
    if (opt.split < 1) throw DomainError("split must be positive");
    DrivingRecord r;
    r.t.push_back(0);
    r.W.push_back(curve[0].real());
    std::vector<cd> z(curve.begin() + 1, curve.end());
    for (std::size_t k = 0; k < z.size(); ++k)
        if (!(z[k].imag() > 0))
            throw DomainError("curve point " + std::to_string(k + 1) + " is not in the upper half-plane");
    double t = 0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        if (!(z[k].imag() > 0))
            throw DomainError("increment " + std::to_string(k + 1) + " is outside the current domain");
        double W = 0;
        for (int s = 0; s < opt.split; ++s) {
            W = z[k].real();
            const double y = z[k].imag() / std::sqrt(static_cast<double>(opt.split - s));
            for (std::size_t j = k; j < z.size(); ++j) z[j] = slit_map(z[j], W, y);
            t += y * y / 4;
        }
        r.t.push_back(t);
        r.W.push_back(W);
        if (opt.max_capacity > 0 && t > opt.max_capacity) break;
    }
    return r;
}

DrivingRecord extract_driving(const InterfacePath& path, const StripGeometry& g, const ZipOptions& opt) {
    auto pts = path_trace(path);
    for (auto& p : pts) p = g.to_half_plane(p);
    if (!pts.empty()) pts[0] = {pts[0].real(), 0.0};  // the first midpoint sits on the boundary
    return extract_driving(pts, opt);
}

std::vector<cd> reconstruct_tips(const DrivingRecord& r) {
    std::vector<cd> out;
    if (r.t.empty()) return out;
    out.emplace_back(r.W[0], 0.0);
    std::vector<double> y(r.t.size(), 0);
    for (std::size_t k = 1; k < r.t.size(); ++k) y[k] = 2 * std::sqrt(r.t[k] - r.t[k - 1]);
    for (std::size_t k = 1; k < r.t.size(); ++k) {
        cd w(r.W[k], y[k]);
        for (std::size_t j = k - 1; j >= 1; --j) w = slit_inverse(w, r.W[j], y[j]);
        out.push_back(w);
    }
    return out;
}

namespace {

double value_at(const DrivingRecord& r, double t) {
    auto it = std::upper_bound(r.t.begin(), r.t.end(), t);
    if (it == r.t.begin()) return r.W.front();
    if (it == r.t.end()) return r.W.back();
    std::size_t k = it - r.t.begin();
    double a = (t - r.t[k - 1]) / (r.t[k] - r.t[k - 1]);
    return (1 - a) * r.W[k - 1] + a * r.W[k];
}

std::pair<double, double> ols(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    double slope = sxx > 0 ? sxy / sxx : 0;
    return {slope, my - slope * mx};
}

std::vector<double> variances(const std::vector<std::vector<double>>& v, const std::vector<int>& pick) {
    const std::size_t g = v.front().size();
    std::vector<double> out(g, 0);
    for (std::size_t j = 0; j < g; ++j) {
        double m = 0;
        for (int i : pick) m += v[i][j];
        m /= static_cast<double>(pick.size());
        double s = 0;
        for (int i : pick) s += (v[i][j] - m) * (v[i][j] - m);
        out[j] = s / static_cast<double>(pick.size() - 1);
    }
    return out;
}

}  // namespace

KappaFit estimate_kappa(const std::vector<DrivingRecord>& records, const KappaOptions& opt) {
    KappaFit fit;
    double t_max = opt.t_max;
    if (t_max <= 0) {
        t_max = INFINITY;
        for (const auto& r : records)
            if (!r.t.empty()) t_max = std::min(t_max, r.t.back());
    }
    if (!(t_max > opt.t_min) || !std::isfinite(t_max)) throw DomainError("empty capacity window");
    if (opt.grid < 2) throw DomainError("kappa grid needs at least two points");
    for (int j = 0; j <= opt.grid; ++j) fit.times.push_back(opt.t_min + (t_max - opt.t_min) * j / opt.grid);
    std::vector<std::vector<double>> vals;
    for (const auto& r : records) {
        if (r.t.empty() || r.t.back() < t_max) {
            ++fit.skipped;
            continue;
        }
        std::vector<double> v;
        for (double t : fit.times) v.push_back(value_at(r, t));
        vals.push_back(std::move(v));
    }
    fit.records = static_cast<int>(vals.size());
    if (fit.records < 100)
        throw DomainError("kappa needs at least 100 records reaching the window, got " +
                          std::to_string(fit.records));
    std::vector<int> all(vals.size());
    std::iota(all.begin(), all.end(), 0);
    fit.variances = variances(vals, all);
    std::tie(fit.kappa, fit.intercept) = ols(fit.times, fit.variances);
    std::vector<double> boot;
    auto rng = stream_rng(opt.seed, 0);
    std::uniform_int_distribution<int> pick(0, fit.records - 1);
    for (int k = 0; k < opt.bootstrap; ++k) {
        std::vector<int> idx(vals.size());
        for (auto& i : idx) i = pick(rng);
        boot.push_back(ols(fit.times, variances(vals, idx)).first);
    }
    if (!boot.empty()) {
        std::sort(boot.begin(), boot.end());
        auto q = [&](double p) { return boot[static_cast<std::size_t>(p * (boot.size() - 1) + 0.5)]; };
        fit.ci_low = q(0.025), fit.ci_high = q(0.975);
    } else {
        fit.ci_low = fit.ci_high = fit.kappa;
    }
    return fit;
}

std::vector<DrivingRecord> synthetic_brownian(int count, int steps, double dt, double kappa,
                                              std::uint64_t seed) {
    std::vector<DrivingRecord> out(std::max(0, count));
    for (int i = 0; i < count; ++i) {
        auto rng = stream_rng(seed, i);
        std::normal_distribution<double> n01;
        auto& r = out[i];
        r.t.push_back(0);
        r.W.push_back(0);
        for (int k = 1; k <= steps; ++k) {
            r.t.push_back(k * dt);
            r.W.push_back(r.W.back() + std::sqrt(kappa * dt) * n01(rng));
        }
    }
    return out;
}

}  // namespace isinglab
