#include "isinglab/observables.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "isinglab/errors.h"

namespace isinglab {

Model Model::free(EdgeWeights w) {
    Model m;
    m.w = std::move(w);
    return m;
}

Model Model::interacting(const GraphBundle& b, const InteractionParams& prm, const PotentialU& u,
                         const std::vector<DualEdge>& p_o) {
    Model m;
    m.w = EdgeWeights::uniform(b, prm.x());
    m.prm = prm;
    m.u = u;
    m.p_o = p_o;
    std::sort(m.p_o.begin(), m.p_o.end());
    return m;
}

double signed_weight(const GraphBundle& b, const Model& m, const ContourConfig& p,
                     const std::vector<HalfEdge>& marks) {
    int s = reduced_weight_sign(b, marks, p);
    if (s == 0) return 0;
    double v = s * contour_weight(p, m.w);
    if (m.interacting())
        v *= std::exp(-m.prm.beta * m.prm.lambda * interaction_energy(b, p, m.u, m.p_o));
    return v;
}

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::FreePfaffian: return "free-pfaffian";
        case Provenance::InteractingExpansion: return "interacting-expansion";
        case Provenance::ContourEnumeration: return "contour-enumeration";
    }
    return "?";
}

namespace {

std::vector<int> frame_key(const ForcedSets& fs) {
    std::vector<int> k = fs.forced_in;
    k.push_back(-1);
    k.insert(k.end(), fs.forced_out.begin(), fs.forced_out.end());
    return k;
}

std::string path_text(const InterfacePath& p) {
    std::string s;
    for (const auto& e : p.steps) s += (s.empty() ? "" : " ") + to_string(e);
    return s;
}

bool on_path(const InterfacePath& p, const DualEdge& e, int from = 0) {
    return std::find(p.steps.begin() + from, p.steps.end(), e) != p.steps.end();
}

}  // namespace

FEvaluator::FEvaluator(const GraphBundle& b, Model m) : b_(b), m_(std::move(m)) {
    if (m_.w.x.size() != b_.dual_edges.size()) throw DomainError("edge weights do not match the domain");
}

int FEvaluator::id_of(const HalfEdge& h) const {
    int id = b_.half_edge_id(h);
    if (id < 0) throw DomainError("half-edge " + to_string(h) + " is not in V_cluster");
    return id;
}

const FEvaluator::Frame& FEvaluator::frame(const ForcedSets& given, const HalfEdge& h) {
    // With phi_h inserted every term holding the long edge e(h) vanishes, so
    // frames that differ only in that edge give the same integral.
    const ForcedSets* fsp = &given;
    ForcedSets widened;
    const int eh = b_.edge_id(h.edge);
    if (eh >= 0 && !std::binary_search(given.forced_in.begin(), given.forced_in.end(), eh) &&
        !std::binary_search(given.forced_out.begin(), given.forced_out.end(), eh)) {
        widened.forced_in = given.forced_in;
        widened.forced_out = given.forced_out;
        widened.forced_out.insert(std::lower_bound(widened.forced_out.begin(), widened.forced_out.end(), eh), eh);
        fsp = &widened;
    }
    const ForcedSets& fs = *fsp;
    auto key = frame_key(fs);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    InteractionFrame fr;
    fr.live = free_edges(b_, fs);
    fr.boundary = m_.p_o;
    std::vector<DualEdge> fi;
    for (int e : fs.forced_in) fi.push_back(b_.dual_edges[e]);
    fr.boundary.insert(fr.boundary.end(), fi.begin(), fi.end());
    std::sort(fr.boundary.begin(), fr.boundary.end());
    fr.boundary.erase(std::unique(fr.boundary.begin(), fr.boundary.end()), fr.boundary.end());

    Frame f;
    f.prefactor = 1;
    for (int e : fs.forced_in) f.prefactor *= m_.w.x[e];
    if (m_.interacting() && !fi.empty()) {
        double c = 0;
        for (const auto& t : translates_touching(m_.u, fi))
            if (std::all_of(t.edges.begin(), t.edges.end(), [&](const DualEdge& d) {
                    return std::binary_search(fr.boundary.begin(), fr.boundary.end(), d);
                }))
                c += t.value;
        f.prefactor *= std::exp(-m_.prm.beta * m_.prm.lambda * c);
    }
    if (m_.interacting()) {
        auto act = build_interacting_action(b_, m_.w, m_.prm, m_.u, fr);
        f.gs = gaussian_state(act.A);
        f.groups = polymer_groups(b_, act);
    } else {
        EdgeWeights wl = m_.w;
        for (std::size_t e = 0; e < wl.x.size(); ++e)
            if (!std::binary_search(fr.live.begin(), fr.live.end(), static_cast<int>(e))) wl.x[e] = 0;
        f.gs = gaussian_state(action_matrix(b_, wl));
        f.groups = {PolymerGroup{{}, 1.0}};
    }
    return cache_.emplace(key, std::move(f)).first->second;
}

double FEvaluator::enumerate(const InterfacePath& prefix, const HalfEdge& h) const {
    auto fs = forced_sets(b_, prefix, h);
    if (fs.empty_event) return 0;
    BoundaryCondition xi{{prefix.directed[0], h}};
    double s = 0;
    for (const auto& p : enumerate_contours(b_, xi))
        if (in_event(p, fs)) s += signed_weight(b_, m_, p, xi.marked);
    return s;
}

double FEvaluator::full(const InterfacePath& prefix, const HalfEdge& h) {
    return evaluate(prefix, h, false);
}

double FEvaluator::reduced(const InterfacePath& prefix, const HalfEdge& h) {
    if (b_.half_edge_id(prefix.directed.back()) < 0)
        throw DomainError("gamma_n is not in V_cluster; use the full route");
    return evaluate(prefix, h, true);
}

namespace {

std::vector<std::uint64_t> value_key(const InterfacePath& prefix, bool reduced) {
    std::vector<std::uint64_t> key{reduced ? 1u : 0u};
    for (const auto& e : prefix.steps) key.push_back(pack(e.mx2, e.my2));
    return key;
}

}  // namespace

double FEvaluator::evaluate(const InterfacePath& prefix, const HalfEdge& h, bool reduced) {
    auto key = value_key(prefix, reduced);
    key.push_back(pack(h.face.x2, h.face.y2));
    key.push_back(pack(h.edge.mx2, h.edge.my2));
    auto it = values_.find(key);
    if (it != values_.end()) return it->second;

    double v = 0;
    auto fs = forced_sets(b_, prefix, h);
    if (!fs.empty_event) {
        std::vector<int> ins;
        if (reduced) {
            ins = {b_.half_edge_id(prefix.directed.back()), id_of(h)};
        } else {
            ins = {id_of(prefix.directed[0]), id_of(h)};
            for (int e : fs.forced_in) {
                ins.push_back(b_.long_edges[e][0]);
                ins.push_back(b_.long_edges[e][1]);
            }
        }
        const auto& f = frame(fs, h);
        v = f.prefactor * interacting_integral(f.gs, f.groups, ins);
    }
    values_.emplace(std::move(key), v);
    return v;
}

const std::vector<double>& FEvaluator::row(const InterfacePath& prefix, bool reduced) {
    auto key = value_key(prefix, reduced);
    auto it = rows_.find(key);
    if (it != rows_.end()) return it->second;
    const int a = b_.half_edge_id(reduced ? prefix.directed.back() : prefix.directed[0]);
    if (a < 0) throw DomainError("insertion outside V_cluster for this route");

    // The forced sets see e(h) only through the steps and the faces left behind.
    std::set<DualEdge> touched(prefix.steps.begin(), prefix.steps.end());
    for (int t = 0; t + 1 < static_cast<int>(prefix.directed.size()); ++t)
        for (int s = 0; s < 4; ++s) touched.insert(edge_of(prefix.directed[t].face, static_cast<Side>(s)));
    const HalfEdge far{Face{1 << 20 | 1, 1}, DualEdge{1 << 20 | 1, 2}};
    const auto generic = forced_sets(b_, prefix, far);

    std::vector<double> out(b_.n_cluster(), 0.0);
    std::vector<int> ins;
    for (int i = 0; i < b_.n_cluster(); ++i) {
        const HalfEdge h = b_.half_edge(i);
        ForcedSets own;
        const bool special = touched.count(h.edge) != 0;
        if (special) own = forced_sets(b_, prefix, h);
        const ForcedSets& fs = special ? own : generic;
        if (fs.empty_event) continue;
        ins = {a, i};
        if (!reduced)
            for (int e : fs.forced_in) ins.insert(ins.end(), {b_.long_edges[e][0], b_.long_edges[e][1]});
        const auto& f = frame(fs, h);
        out[i] = f.prefactor * interacting_integral(f.gs, f.groups, ins);
    }
    return rows_.emplace(std::move(key), std::move(out)).first->second;
}

ObservableValue M_observable(FEvaluator& ev, const InterfacePath& prefix, const HalfEdge& h,
                             const HalfEdge& h_out) {
    ObservableValue v;
    v.provenance = ev.model().interacting() ? Provenance::InteractingExpansion : Provenance::FreePfaffian;
    // The reduced route needs both explorations to force the same edges in.
    bool reduced = ev.bundle().half_edge_id(prefix.directed.back()) >= 0 &&
                   !on_path(prefix, h.edge, 1) && !on_path(prefix, h_out.edge, 1);
    if (reduced) {
        v.numerator = ev.reduced(prefix, h);
        v.denominator = ev.reduced(prefix, h_out);
    } else {
        v.numerator = ev.full(prefix, h);
        v.denominator = ev.full(prefix, h_out);
    }
    if (v.denominator == 0)
        throw NumericalFault("zero denominator F(gamma; h_out) at prefix [" + path_text(prefix) + "]");
    v.ratio = v.numerator / v.denominator;
    return v;
}

std::vector<InterfacePath> continuations(const InterfacePath& prefix) {
    std::vector<InterfacePath> out;
    const HalfEdge cur = prefix.directed.back();
    for (int s = 0; s < 4; ++s) {
        DualEdge e = edge_of(cur.face, static_cast<Side>(s));
        if (e == cur.edge || on_path(prefix, e)) continue;
        InterfacePath c = prefix;
        c.terminated = false;
        c.n_out.reset();
        c.steps.push_back(e);
        c.directed.push_back({across(cur.face, e), e});
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<InterfacePath> reachable_prefixes(const GraphBundle& b, const BoundaryCondition& xi) {
    validate_bc(b, xi);
    std::map<std::vector<DualEdge>, InterfacePath> seen;
    for (const auto& p : enumerate_contours(b, xi)) {
        auto path = explore(b, p, xi);
        for (int n = 0; n < *path.n_out; ++n) {
            auto pre = path.prefix(n);
            seen.emplace(pre.steps, pre);
        }
    }
    std::vector<InterfacePath> out;
    for (auto& [k, v] : seen) out.push_back(std::move(v));
    return out;
}

AuditReport martingale_audit(const GraphBundle& b, const Model& m, const BoundaryCondition& xi,
                             const std::vector<HalfEdge>& hs, bool keep_rows) {
    FEvaluator ev(b, m);
    return martingale_audit(ev, xi, hs, keep_rows);
}

AuditReport martingale_audit(FEvaluator& ev, const BoundaryCondition& xi,
                             const std::vector<HalfEdge>& hs_in, bool keep_rows) {
    const auto& b = ev.bundle();
    validate_bc(b, xi);
    if (xi.marked.size() != 2) throw DomainError("martingale audit needs two marked half-edges");
    const HalfEdge h_in = xi.marked[0], h_out = xi.marked[1];
    const int id_out = b.half_edge_id(h_out);
    std::vector<HalfEdge> hs = hs_in;
    if (hs.empty())
        for (int i = 0; i < b.n_cluster(); ++i)
            if (!(b.half_edge(i) == h_in)) hs.push_back(b.half_edge(i));
    std::vector<int> ids = cluster_ids(b, hs);

    // Rows for one path: reduced when gamma_n is in V_cluster and e(h_out) is
    // not among gamma_1..gamma_n, full otherwise. M_observable takes the
    // reduced route only if e(h) is off the path too.
    struct Rows {
        const std::vector<double>* reduced = nullptr;
        const std::vector<double>* full = nullptr;
        const InterfacePath* q = nullptr;
    };
    auto rows_of = [&](const InterfacePath& q) {
        Rows r;
        r.q = &q;
        if (b.half_edge_id(q.directed.back()) >= 0 && !on_path(q, h_out.edge, 1)) r.reduced = &ev.row(q, true);
        return r;
    };
    auto m_value = [&](Rows& r, int i, const HalfEdge& h) {
        const std::vector<double>* row = r.reduced;
        if (!row || on_path(*r.q, h.edge, 1)) {
            if (!r.full) r.full = &ev.row(*r.q, false);
            row = r.full;
        }
        if ((*row)[id_out] == 0) throw NumericalFault("zero denominator F(gamma; h_out)");
        return (*row)[i] / (*row)[id_out];
    };

    AuditReport rep;
    for (const auto& pre : reachable_prefixes(b, xi)) {
        ++rep.prefixes;
        const double f_now = ev.full(pre, h_out);
        if (f_now == 0) {
            rep.zero_denominators.push_back(path_text(pre));
            continue;
        }
        std::vector<std::pair<InterfacePath, double>> kids;  // with conditional probability
        std::vector<const std::vector<double>*> dead;       // full rows of unreachable continuations
        double total = 0;
        for (auto& c : continuations(pre)) {
            double p = ev.full(c, h_out) / f_now;
            if (std::abs(p) <= 1e-13) {
                dead.push_back(&ev.row(c, false));
                continue;
            }
            rep.min_probability = std::min(rep.min_probability, p);
            total += p;
            kids.emplace_back(std::move(c), p);
        }
        rep.max_law_defect = std::max(rep.max_law_defect, std::abs(total - 1));
        Rows now = rows_of(pre);
        std::vector<Rows> next;
        for (const auto& [c, p] : kids) next.push_back(rows_of(c));

        const double tiny = 1e-13 * std::abs(f_now);
        auto exclude = [&](const HalfEdge& h, const char* why) {
            ++rep.excluded_count;
            if (keep_rows) rep.excluded.push_back(path_text(pre) + " / " + to_string(h) + ": " + why);
        };
        for (std::size_t j = 0; j < hs.size(); ++j) {
            const HalfEdge& h = hs[j];
            const int i = ids[j];
            if (h == h_in || on_path(pre, h.edge)) {
                exclude(h, "stopped for h");
                continue;
            }
            // Configurations counted by F(gamma; h) that the h_out law never
            // continues: the exploration stops at h_out or cuts h off first.
            bool cut = false;
            for (const auto* r : dead) cut = cut || std::abs((*r)[i]) > tiny;
            if (cut) {
                exclude(h, "cut off from h_out");
                continue;
            }
            double m_now = 0, m_next = 0;
            try {
                m_now = m_value(now, i, h);
                for (std::size_t k = 0; k < kids.size(); ++k) m_next += kids[k].second * m_value(next[k], i, h);
            } catch (const NumericalFault&) {
                rep.zero_denominators.push_back(path_text(pre) + " / " + to_string(h));
                continue;
            }
            const double residual = std::abs(m_next - m_now);
            rep.max_residual = std::max(rep.max_residual, residual);
            ++rep.checks;
            if (keep_rows) rep.rows.push_back({path_text(pre), pre.n(), h, m_now, m_next, residual});
        }
    }
    return rep;
}

std::complex<double> assemble(DualEdge e, double m_lower, double m_upper, Convention c) {
    using C = std::complex<double>;
    const C i(0, 1);
    if (e.orient() == Orient::Horizontal) return -i * m_lower + m_upper;
    const C w = std::polar(1.0, M_PI / 4);
    C z = -w * m_lower + std::conj(w) * m_upper;
    return c == Convention::Calibrated ? i * z : z;
}

ComplexObservable complex_observable(FEvaluator& ev, const InterfacePath& prefix,
                                     const HalfEdge& h_out, Convention c) {
    const auto& b = ev.bundle();
    auto fs = forced_sets(b, prefix, h_out);
    ComplexObservable out;
    const HalfEdge head = prefix.directed.back();
    for (int e : free_edges(b, fs)) {
        const DualEdge d = b.dual_edges[e];
        auto f = d.faces();
        HalfEdge lo{f[0], d}, up{f[1], d};
        if (b.half_edge_id(lo) < 0 || b.half_edge_id(up) < 0) continue;
        if (lo == head || up == head) continue;
        double ml = M_observable(ev, prefix, lo, h_out).ratio;
        double mu = M_observable(ev, prefix, up, h_out).ratio;
        out[d] = assemble(d, ml, mu, c);
    }
    return out;
}

std::complex<double> project(std::complex<double> z, std::complex<double> alpha) {
    return (z + alpha * alpha * std::conj(z)) / 2.0;
}

std::complex<double> corner_line(Face f, Vertex c) {
    std::complex<double> d(2 * c.x - f.x2, 2 * c.y - f.y2);
    return std::complex<double>(0, 1) * std::sqrt(d / std::abs(d));
}

SholoReport s_holomorphicity_residual(const ComplexObservable& mc, const Face& skip) {
    // corners of a face as (side, side, vertex offset in doubled units)
    static const int corners[4][4] = {{N, E, 1, 1}, {E, S, 1, -1}, {S, W, -1, -1}, {W, N, -1, 1}};
    std::set<Face> faces;
    for (const auto& [e, z] : mc)
        for (auto f : e.faces()) faces.insert(f);
    SholoReport rep;
    for (const auto& f : faces) {
        if (f == skip) continue;
        for (const auto& k : corners) {
            DualEdge a = edge_of(f, static_cast<Side>(k[0])), c = edge_of(f, static_cast<Side>(k[1]));
            if (side_of(skip, a) >= 0 || side_of(skip, c) >= 0) continue;
            auto ia = mc.find(a), ic = mc.find(c);
            if (ia == mc.end() || ic == mc.end()) continue;
            Vertex v{(f.x2 + k[2]) / 2, (f.y2 + k[3]) / 2};
            auto alpha = corner_line(f, v);
            double r = std::abs(project(ia->second, alpha) - project(ic->second, alpha));
            rep.max_residual = std::max(rep.max_residual, r);
            ++rep.corners;
        }
    }
    return rep;
}

}  // namespace isinglab
