#include <set>

#include "doctest.h"
#include "isinglab/errors.h"
#include "isinglab/lattice.h"

using namespace isinglab;

TEST_CASE("empty domain gives an empty bundle") {
    auto b = build_graphs({});
    CHECK(b.primal_edges.empty());
    CHECK(b.dual_edges.empty());
    CHECK(b.faces.empty());
    CHECK(b.n_cluster() == 0);
    CHECK(b.short_edges.empty());
    CHECK(b.long_edges.empty());
}

TEST_CASE("single vertex counts") {
    // hand count: 4 primal edges at the origin, the 4 faces around it
    auto b = build_graphs({{0, 0}});
    CHECK(b.primal_edges.size() == 4);
    CHECK(b.dual_edges.size() == 4);
    CHECK(b.faces.size() == 4);
    CHECK(b.n_cluster() == 16);
    CHECK(b.short_edges.size() == 24);
    CHECK(b.long_edges.size() == 4);
    CHECK(b.boundary_vertices.size() == 4);
    std::set<Face> want{{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
    CHECK(std::set<Face>(b.faces.begin(), b.faces.end()) == want);
}

TEST_CASE("two vertex counts") {
    // edges: 3 + 3 dangling plus the shared one; faces: a 3x2 block
    auto b = build_graphs({{0, 0}, {1, 0}});
    CHECK(b.primal_edges.size() == 7);
    CHECK(b.dual_edges.size() == 7);
    CHECK(b.faces.size() == 6);
    CHECK(b.n_cluster() == 24);
    CHECK(b.boundary_vertices.size() == 6);
}

TEST_CASE("bundle invariants on polyominoes and a disconnected domain") {
    std::vector<Domain> doms;
    for (int k = 1; k <= 4; ++k)
        for (auto& d : fixed_polyominoes(k)) doms.push_back(d);
    doms.push_back({{0, 0}, {3, 0}, {0, 5}});
    for (const auto& d : doms) {
        auto b = build_graphs(d);
        CHECK(b.long_edges.size() == b.dual_edges.size());
        CHECK(b.primal_edges.size() == b.dual_edges.size());
        CHECK(b.short_edges.size() == 6 * b.faces.size());
        for (std::size_t i = 0; i < b.dual_edges.size(); ++i) {
            const auto& e = b.dual_edges[i];
            CHECK(e.valid());
            auto pe = e.primal();
            CHECK((b.contains(pe[0]) || b.contains(pe[1])));
            // midpoint of the primal edge is the dual midpoint
            CHECK(pe[0].x + pe[1].x == e.mx2);
            CHECK(pe[0].y + pe[1].y == e.my2);
            auto le = b.long_edges[i];
            CHECK(le[0] < le[1]);
            CHECK(b.half_edge(le[0]).edge == e);
            CHECK(b.half_edge(le[1]).edge == e);
        }
        for (auto v : b.boundary_vertices) CHECK_FALSE(b.contains(v));
        for (const auto& f : b.faces) {
            CHECK((f.x2 & 1) == 1);
            CHECK((f.y2 & 1) == 1);
            int in = 0;
            for (int s = 0; s < 4; ++s) {
                auto e = edge_of(f, static_cast<Side>(s));
                CHECK(side_of(f, e) == s);
                CHECK(across(across(f, e), e) == f);
                in += b.edge_id(e) >= 0;
            }
            CHECK(in >= 1);
        }
        // determinism
        auto b2 = build_graphs(d);
        CHECK(b2.dual_edges == b.dual_edges);
        CHECK(b2.faces == b.faces);
        CHECK(b2.long_edges == b.long_edges);
    }
}

TEST_CASE("polyomino counts") {
    // fixed polyominoes: 1, 2, 6, 19, 63
    CHECK(fixed_polyominoes(1).size() == 1);
    CHECK(fixed_polyominoes(2).size() == 2);
    CHECK(fixed_polyominoes(3).size() == 6);
    CHECK(fixed_polyominoes(4).size() == 19);
    CHECK(fixed_polyominoes(5).size() == 63);
}

TEST_CASE("half-edge ids follow N<E<S<W inside lexicographic faces") {
    auto b = build_graphs({{0, 0}});
    for (int id = 0; id < b.n_cluster(); ++id) {
        auto h = b.half_edge(id);
        CHECK(b.half_edge_id(h) == id);
        CHECK(static_cast<int>(h.side()) == id % 4);
    }
    CHECK(b.half_edge_id({Face{1, 1}, DualEdge{5, 1}}) == -1);
}

TEST_CASE("admissibility") {
    auto b = build_graphs({{0, 0}});
    SUBCASE("two external half-edges of the single vertex") {
        // face (1,1) N edge and face (-1,-1) S edge are both external
        HalfEdge hin{Face{-1, -1}, DualEdge{-1, -2}};
        HalfEdge hout{Face{1, 1}, DualEdge{1, 2}};
        auto w = check_admissible(b, {{hin, hout}});
        REQUIRE(w.has_value());
        // P_o has odd degree at the two marked faces, even elsewhere
        auto ob = build_graphs(w->outer_domain);
        std::vector<int> deg(ob.faces.size(), 0);
        for (const auto& e : w->outer_contour) {
            CHECK(b.edge_id(e) < 0);
            for (auto f : e.faces()) deg[ob.face_id(f)] ^= 1;
        }
        for (std::size_t f = 0; f < ob.faces.size(); ++f) {
            int want = (ob.faces[f] == hin.face) + (ob.faces[f] == hout.face);
            CHECK(deg[f] == want % 2);
        }
    }
    SUBCASE("interior marked edges admit no witness") {
        auto b2 = build_graphs(rect_domain(0, 0, 2, 2));
        // dual edges crossing edges between interior vertices
        HalfEdge hin{Face{1, 1}, DualEdge{2, 1}};
        HalfEdge hout{Face{3, 3}, DualEdge{3, 2}};
        CHECK_FALSE(check_admissible(b2, {{hin, hout}}).has_value());
    }
    SUBCASE("a boundary face with an interior marked edge is rejected") {
        auto b2 = build_graphs({{0, 0}, {1, 0}});
        HalfEdge inner{Face{1, 1}, DualEdge{1, 0}};  // crosses the edge (0,0)-(1,0)
        HalfEdge crossing{Face{-1, 1}, DualEdge{-1, 0}};  // crosses (0,0)-(-1,0)
        HalfEdge outer{Face{3, -1}, DualEdge{3, -2}};
        CHECK_FALSE(check_admissible(b2, {{inner, outer}}).has_value());
        CHECK(check_admissible(b2, {{crossing, outer}}).has_value());
    }
    SUBCASE("opposite sides of a rectangle") {
        auto b3 = build_graphs(rect_domain(0, 0, 3, 2));
        HalfEdge hin{Face{3, -1}, DualEdge{3, -2}};
        HalfEdge hout{Face{3, 5}, DualEdge{3, 6}};
        CHECK(check_admissible(b3, {{hin, hout}}).has_value());
    }
    SUBCASE("validation") {
        HalfEdge bad{Face{7, 7}, DualEdge{7, 8}};
        HalfEdge ok{Face{1, 1}, DualEdge{1, 2}};
        CHECK_THROWS_AS(check_admissible(b, {{bad, ok}}), DomainError);
        CHECK_THROWS_AS(check_admissible(b, {{ok, ok}}), DomainError);
    }
}
