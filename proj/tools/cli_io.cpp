#include "cli_io.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "isinglab/errors.h"

namespace isinglab::cli {

namespace {

void only_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
    if (!j.is_object()) throw DomainError(std::string(what) + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw DomainError(std::string("unknown key '") + it.key() + "' in " + what);
}

int as_int(const json& j, const char* what) {
    if (!j.is_number_integer()) throw DomainError(std::string(what) + ": expected an integer");
    return j.get<int>();
}

std::pair<int, int> int_pair(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2) throw DomainError(std::string(what) + ": expected [a, b]");
    return {as_int(j[0], what), as_int(j[1], what)};
}

}  // namespace

json parse_json_arg(const std::string& s) {
    std::string text = s;
    auto first = s.find_first_not_of(" \t\n");
    bool inline_json = first != std::string::npos && (s[first] == '{' || s[first] == '[');
    if (!inline_json) {
        std::string path = !s.empty() && s[0] == '@' ? s.substr(1) : s;
        std::ifstream in(path);
        if (!in) throw DomainError("cannot read JSON file '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw DomainError(std::string("invalid JSON: ") + e.what());
    }
}

Domain domain_from_json(const json& j) {
    only_keys(j, {"vertices", "rect"}, "domain");
    if (j.contains("vertices") == j.contains("rect")) throw DomainError("domain needs exactly one of vertices, rect");
    if (j.contains("rect")) {
        const auto& r = j["rect"];
        if (!r.is_array() || r.size() != 4) throw DomainError("rect: expected [x0, y0, x1, y1]");
        int x0 = as_int(r[0], "rect"), y0 = as_int(r[1], "rect"), x1 = as_int(r[2], "rect"), y1 = as_int(r[3], "rect");
        if (x1 < x0 || y1 < y0) return {};
        return rect_domain(x0, y0, x1, y1);
    }
    if (!j["vertices"].is_array()) throw DomainError("vertices: expected a list");
    std::vector<Vertex> vs;
    for (const auto& v : j["vertices"]) {
        auto [x, y] = int_pair(v, "vertex");
        vs.push_back({x, y});
    }
    return make_domain(vs);
}

DualEdge dual_edge_from_json(const json& j) {
    auto [a, b] = int_pair(j, "dual edge");
    if ((a % 2 == 0) == (b % 2 == 0)) throw DomainError("dual edge: exactly one doubled coordinate must be even");
    return {a, b};
}

HalfEdge half_edge_from_json(const json& j) {
    only_keys(j, {"face", "edge"}, "half-edge");
    if (!j.contains("face") || !j.contains("edge")) throw DomainError("half-edge needs face and edge");
    auto [x2, y2] = int_pair(j["face"], "face");
    if (x2 % 2 == 0 || y2 % 2 == 0) throw DomainError("face: doubled coordinates must be odd");
    HalfEdge h{Face{x2, y2}, dual_edge_from_json(j["edge"])};
    auto fs = h.edge.faces();
    if (fs[0] != h.face && fs[1] != h.face) throw DomainError("half-edge: edge is not incident to face");
    return h;
}

BoundaryCondition bc_from_json(const json& j) {
    only_keys(j, {"marked"}, "boundary condition");
    if (!j.contains("marked") || !j["marked"].is_array()) throw DomainError("boundary condition needs a marked list");
    BoundaryCondition xi;
    for (const auto& h : j["marked"]) xi.marked.push_back(half_edge_from_json(h));
    if (xi.marked.empty() || xi.marked.size() % 2) throw DomainError("boundary condition needs 2N marked half-edges");
    return xi;
}

std::vector<DualEdge> edges_from_json(const json& j) {
    if (!j.is_array()) throw DomainError("expected a list of dual edges");
    std::vector<DualEdge> out;
    for (const auto& e : j) out.push_back(dual_edge_from_json(e));
    return out;
}

PotentialU potential_from_json(const json& j) {
    only_keys(j, {"U", "V"}, "potential");
    if (j.size() != 1) throw DomainError("potential needs exactly one of U, V");
    const bool is_u = j.contains("U");
    const auto& list = is_u ? j["U"] : j["V"];
    if (!list.is_array()) throw DomainError("potential: expected a list of patterns");
    std::vector<Pattern> raw;
    for (const auto& p : list) {
        only_keys(p, {"edges", "value"}, "pattern");
        if (!p.contains("edges") || !p.contains("value") || !p["value"].is_number())
            throw DomainError("pattern needs edges and a numeric value");
        raw.push_back({edges_from_json(p["edges"]), p["value"].get<double>()});
    }
    return is_u ? make_potential_u(raw) : v_to_u(make_potential_v(raw));
}

json to_json(Vertex v) { return json::array({v.x, v.y}); }
json to_json(Face f) { return json::array({f.x2, f.y2}); }
json to_json(const DualEdge& e) { return json::array({e.mx2, e.my2}); }
json to_json(const HalfEdge& h) { return {{"face", to_json(h.face)}, {"edge", to_json(h.edge)}}; }

json to_json(const std::vector<DualEdge>& es) {
    json a = json::array();
    for (const auto& e : es) a.push_back(to_json(e));
    return a;
}

json to_json(const InterfacePath& p) {
    json j = {{"steps", to_json(p.steps)}, {"terminated", p.terminated}};
    j["n_out"] = p.n_out ? json(*p.n_out) : json(nullptr);
    return j;
}

json to_json(const AuditReport& r) {
    json j = {{"prefixes", r.prefixes},
              {"checks", r.checks},
              {"max_residual", r.max_residual},
              {"max_law_defect", r.max_law_defect},
              {"min_probability", r.min_probability},
              {"zero_denominators", r.zero_denominators},
              {"excluded", r.excluded_count}};
    if (!r.rows.empty()) {
        json rows = json::array();
        for (const auto& row : r.rows)
            rows.push_back({{"prefix", row.prefix}, {"n", row.n}, {"h", to_json(row.h)}, {"m_now", row.m_now},
                            {"m_next", row.m_next}, {"residual", row.residual}});
        j["rows"] = rows;
        j["excluded_pairs"] = r.excluded;
    }
    return j;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_paths_csv(std::ostream& os, const std::vector<InterfacePath>& paths) {
    os << "path,k,face_x2,face_y2,edge_mx2,edge_my2\n";
    for (std::size_t i = 0; i < paths.size(); ++i)
        for (std::size_t k = 0; k < paths[i].directed.size(); ++k) {
            const auto& h = paths[i].directed[k];
            os << i << ',' << k << ',' << h.face.x2 << ',' << h.face.y2 << ',' << h.edge.mx2 << ',' << h.edge.my2
               << '\n';
        }
}

void write_driving_csv(std::ostream& os, const std::vector<DrivingRecord>& recs) {
    os << "record,k,t,W\n";
    for (std::size_t i = 0; i < recs.size(); ++i)
        for (std::size_t k = 0; k < recs[i].t.size(); ++k)
            os << i << ',' << k << ',' << fmt(recs[i].t[k]) << ',' << fmt(recs[i].W[k]) << '\n';
}

namespace {

std::vector<std::vector<std::string>> read_csv(std::istream& is, const std::string& header) {
    std::string line;
    if (!std::getline(is, line) || line != header) throw DomainError("CSV header must be '" + header + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        rows.push_back(std::move(cells));
    }
    return rows;
}

double to_double(const std::string& s) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size() || s.empty()) throw DomainError("CSV: bad number '" + s + "'");
    return v;
}

int to_int(const std::string& s) {
    double v = to_double(s);
    if (v != static_cast<int>(v)) throw DomainError("CSV: expected an integer, got '" + s + "'");
    return static_cast<int>(v);
}

}  // namespace

std::vector<DrivingRecord> read_driving_csv(std::istream& is) {
    std::vector<DrivingRecord> out;
    for (const auto& r : read_csv(is, "record,k,t,W")) {
        if (r.size() != 4) throw DomainError("CSV: driving rows have 4 columns");
        int i = to_int(r[0]);
        if (i < 0) throw DomainError("CSV: negative record index");
        if (static_cast<int>(out.size()) <= i) out.resize(i + 1);
        out[i].t.push_back(to_double(r[2]));
        out[i].W.push_back(to_double(r[3]));
    }
    return out;
}

std::vector<InterfacePath> read_paths_csv(std::istream& is) {
    std::vector<InterfacePath> out;
    for (const auto& r : read_csv(is, "path,k,face_x2,face_y2,edge_mx2,edge_my2")) {
        if (r.size() != 6) throw DomainError("CSV: path rows have 6 columns");
        int i = to_int(r[0]);
        if (i < 0) throw DomainError("CSV: negative path index");
        if (static_cast<int>(out.size()) <= i) out.resize(i + 1);
        HalfEdge h{Face{to_int(r[2]), to_int(r[3])}, DualEdge{to_int(r[4]), to_int(r[5])}};
        out[i].steps.push_back(h.edge);
        out[i].directed.push_back(h);
    }
    for (auto& p : out) {
        p.terminated = true;
        p.n_out = p.n();
    }
    return out;
}

}  // namespace isinglab::cli
