#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "helpers.h"
#include "isinglab/errors.h"
#include "isinglab/explorer.h"

using namespace isinglab;
using testutil::bc_pairs;
using testutil::small_domains;

namespace {

const HalfEdge kIn{Face{-1, -1}, DualEdge{-1, -2}};
const HalfEdge kOut{Face{1, 1}, DualEdge{1, 2}};

bool same_prefix(const InterfacePath& a, const InterfacePath& b) {
    return a.steps == b.steps && a.directed == b.directed;
}

}  // namespace

TEST_CASE("explore the two paths around a single vertex") {
    auto b = build_graphs({{0, 0}});
    auto cs = enumerate_contours(b, {{kIn, kOut}});
    REQUIRE(cs.size() == 2);
    for (const auto& c : cs) {
        auto p = explore(b, c, {{kIn, kOut}});
        CHECK(p.terminated);
        REQUIRE(p.n_out);
        CHECK(*p.n_out == 3);  // e_in, two contour edges, e_out
        CHECK(p.steps.front() == kIn.edge);
        CHECK(p.steps.back() == kOut.edge);
        CHECK(p.directed.front() == kIn);
    }
}

TEST_CASE("one contour edge between adjacent marked faces gives n_out = 2") {
    auto b = build_graphs({{0, 0}});
    HalfEdge hin{Face{-1, 1}, DualEdge{-2, 1}};  // W side of the NW face
    HalfEdge hout{Face{1, 1}, DualEdge{2, 1}};   // E side of the NE face
    auto cs = enumerate_contours(b, {{hin, hout}});
    bool found = false;
    for (const auto& c : cs)
        if (c.edges.size() == 1) {
            auto p = explore(b, c, {{hin, hout}});
            CHECK(*p.n_out == 2);
            CHECK(p.steps[1] == DualEdge{0, 1});
            found = true;
        }
    CHECK(found);
}

TEST_CASE("degree-4 faces follow the NE/SW pairing") {
    // scan explorations and look at every second-or-later visit that had a choice
    int ambiguous = 0;
    for (const auto& d : small_domains(4, 3)) {
        auto b = build_graphs(d);
        for (const auto& xi : bc_pairs(b, true, 7)) {
            for (const auto& c : enumerate_contours(b, xi)) {
                auto p = explore(b, c, xi);
                std::vector<int> deg(b.faces.size(), 0);
                for (int e : c.edges)
                    for (auto f : b.dual_edges[e].faces()) ++deg[b.face_id(f)];
                std::set<Face> seen;
                for (int t = 0; t < p.n(); ++t) {
                    Face f = p.directed[t].face;
                    bool first = seen.insert(f).second;
                    int fid = b.face_id(f);
                    int marks = (f == xi.marked[0].face) + (f == xi.marked[1].face);
                    if (first && deg[fid] + marks == 4 && !(f == xi.marked[0].face)) {
                        Side in = p.directed[t].side();
                        CHECK(side_of(f, p.steps[t + 1]) == ne_sw_partner(in));
                        ++ambiguous;
                    }
                }
            }
        }
    }
    CHECK(ambiguous > 0);
}

TEST_CASE("explore rejects contours that violate parity") {
    auto b = build_graphs({{0, 0}});
    CHECK_THROWS_AS(explore(b, ContourConfig{{0}}, {{kIn, kOut}}), DomainError);
}

TEST_CASE("reversal gives the reversed path") {
    for (const auto& d : small_domains(4)) {
        auto b = build_graphs(d);
        for (const auto& xi : bc_pairs(b, true, 5)) {
            BoundaryCondition rev{{xi.marked[1], xi.marked[0]}};
            for (const auto& c : enumerate_contours(b, xi)) {
                auto p = explore(b, c, xi);
                auto q = explore(b, c, rev);
                CHECK(*p.n_out == *q.n_out);
                auto s = p.steps;
                std::reverse(s.begin(), s.end());
                CHECK(s == q.steps);
            }
        }
    }
}

TEST_CASE("forced sets decide the event exactly") {
    // C_{gamma,n} = {P : explore(P)[0..n] = gamma}, toward any terminal h
    int events = 0, empties = 0;
    for (const auto& d : small_domains(3)) {
        auto b = build_graphs(d);
        for (const auto& xi : bc_pairs(b, false, 3)) {
            const auto& hin = xi.marked[0];
            const auto& h = xi.marked[1];
            auto cs = enumerate_contours(b, xi);
            std::map<std::vector<DualEdge>, InterfacePath> prefixes;
            for (const auto& c : cs) {
                auto p = explore(b, c, hin, h);
                for (int n = 0; n <= p.n(); ++n) prefixes.emplace(p.prefix(n).steps, p.prefix(n));
            }
            for (const auto& [k, pre] : prefixes) {
                auto fs = forced_sets(b, pre, h);
                REQUIRE_FALSE(fs.empty_event);
                ++events;
                for (const auto& c : cs) {
                    auto p = explore(b, c, hin, h);
                    bool member = p.n() >= pre.n() && same_prefix(p.prefix(pre.n()), pre);
                    CHECK(member == in_event(c, fs));
                }
            }
            // a straight pass through a face that is not in any path: empty or consistent
            for (const auto& [k, pre] : prefixes) {
                if (pre.n() == 0 || pre.terminated) continue;
                Face f = pre.directed.back().face;
                for (int s = 0; s < 4; ++s) {
                    DualEdge e = edge_of(f, static_cast<Side>(s));
                    if (e == pre.steps.back()) continue;
                    InterfacePath ext = pre;
                    if (std::find(ext.steps.begin(), ext.steps.end(), e) != ext.steps.end()) continue;
                    ext.steps.push_back(e);
                    ext.directed.push_back({across(f, e), e});
                    auto fs = forced_sets(b, ext, h);
                    if (fs.empty_event) {
                        ++empties;
                        for (const auto& c : cs) {
                            auto p = explore(b, c, hin, h);
                            CHECK_FALSE((p.n() >= ext.n() && same_prefix(p.prefix(ext.n()), ext)));
                        }
                    }
                }
            }
        }
    }
    CHECK(events > 0);
    CHECK(empties > 0);
}

TEST_CASE("forced sets of the trivial prefix") {
    auto b = build_graphs({{0, 0}});
    InterfacePath p;
    p.steps = {kIn.edge};
    p.directed = {kIn};
    auto fs = forced_sets(b, p, kOut);
    CHECK_FALSE(fs.empty_event);
    CHECK(fs.forced_in.empty());
    CHECK(fs.forced_out.empty());
    CHECK(fs.consumed.empty());
}

TEST_CASE("straight pass forces the side edges out") {
    // 1x3 column; enter the middle face column from below and go straight up
    auto b = build_graphs({{0, 0}, {0, 1}, {0, 2}});
    HalfEdge hin{Face{1, -1}, DualEdge{1, -2}};
    HalfEdge hout{Face{1, 5}, DualEdge{1, 6}};
    InterfacePath p;
    p.steps = {hin.edge, DualEdge{1, 0}, DualEdge{1, 2}};
    p.directed = {hin, {Face{1, 1}, DualEdge{1, 0}}, {Face{1, 3}, DualEdge{1, 2}}};
    auto fs = forced_sets(b, p, hout);
    REQUIRE_FALSE(fs.empty_event);
    // at face (1,1) the pass S->N leaves out W (0,1) and E (2,1)
    // and at face (1,-1) the pass S->N leaves out W (0,-1); the E sides are outside E*
    std::vector<int> want{b.edge_id({0, -1}), b.edge_id({0, 1})};
    std::sort(want.begin(), want.end());
    CHECK(fs.forced_out == want);
    // the derived oracle: these edges are absent from every contour of the event
    auto cs = enumerate_contours(b, {{hin, hout}});
    int members = 0;
    for (const auto& c : cs)
        if (in_event(c, fs)) {
            ++members;
            for (int e : fs.forced_out) CHECK_FALSE(std::binary_search(c.edges.begin(), c.edges.end(), e));
        }
    CHECK(members > 0);
    CHECK(fs.consumed.size() == 2);
}

TEST_CASE("splitting bijection on small domains") {
    long checked = 0;
    for (const auto& d : small_domains(4)) {
        auto b = build_graphs(d);
        for (const auto& xi : bc_pairs(b, true, 4)) {
            const auto& hin = xi.marked[0];
            const auto& h = xi.marked[1];
            auto cs = enumerate_contours(b, xi);
            std::map<std::vector<DualEdge>, InterfacePath> prefixes;
            for (const auto& c : cs) {
                auto p = explore(b, c, hin, h);
                for (int n = 0; n < p.n(); ++n) prefixes.emplace(p.prefix(n).steps, p.prefix(n));
            }
            for (const auto& [k, pre] : prefixes) {
                auto fs = forced_sets(b, pre, h);
                std::set<ContourConfig> image;
                for (const auto& c : cs)
                    if (in_event(c, fs)) {
                        auto r = reduce_contour(c, fs);
                        CHECK(extend_contour(b, r, fs) == c);
                        CHECK(image.insert(r).second);
                    }
                auto target = enumerate_reduced(b, fs, pre.directed.back(), h);
                CHECK(std::set<ContourConfig>(target.begin(), target.end()) == image);
                ++checked;
            }
            // reduce with gamma_[0,0] is the identity
            InterfacePath p0;
            p0.steps = {hin.edge};
            p0.directed = {hin};
            auto fs0 = forced_sets(b, p0, h);
            for (const auto& c : cs) CHECK(reduce_contour(c, fs0) == c);
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("vertex removal loses free edges") {
    // around a single vertex: after the first contour edge the vertex is
    // adjacent to a fixed edge, but two contour edges are still free
    auto b = build_graphs({{0, 0}});
    HalfEdge hin{Face{-1, -1}, DualEdge{-1, -2}}, hout{Face{1, -1}, DualEdge{1, -2}};
    ContourConfig c = contour_from_edges(b, {{-1, 0}, {0, 1}, {1, 0}});
    auto p = explore(b, c, hin, hout);
    REQUIRE(*p.n_out == 4);
    auto fs = forced_sets(b, p.prefix(1), hout);
    CHECK(reduced_domain(b, fs).empty());
    CHECK(free_edges(b, fs).size() == 2);
    auto target = enumerate_reduced(b, fs, p.directed[1], hout);
    REQUIRE(target.size() == 1);
    CHECK(target[0] == reduce_contour(c, fs));
}

TEST_CASE("reducing a full interface leaves closed loops") {
    for (const auto& d : small_domains(4)) {
        auto b = build_graphs(d);
        for (const auto& xi : bc_pairs(b, true, 9))
            for (const auto& c : enumerate_contours(b, xi)) {
                auto p = explore(b, c, xi);
                auto fs = forced_sets(b, p.prefix(*p.n_out - 1), xi.marked[1]);
                auto r = reduce_contour(c, fs);
                // the reduced marks sit on the same face, so the rest is even
                CHECK(p.directed[*p.n_out - 1].face == xi.marked[1].face);
                CHECK(in_space(b, r, nullptr));
            }
    }
}

TEST_CASE("malformed prefixes throw") {
    auto b = build_graphs({{0, 0}});
    InterfacePath p;
    p.steps = {kIn.edge, DualEdge{7, 8}};
    p.directed = {kIn, {Face{7, 9}, DualEdge{7, 8}}};
    CHECK_THROWS_AS(forced_sets(b, p, kOut), DomainError);
}
