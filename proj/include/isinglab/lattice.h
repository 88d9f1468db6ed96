#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace isinglab {

// Primal lattice site x + iy.
struct Vertex {
    int x = 0, y = 0;
    auto operator<=>(const Vertex&) const = default;
};

// Face center in doubled coordinates; both odd.
struct Face {
    int x2 = 1, y2 = 1;
    auto operator<=>(const Face&) const = default;
};

enum class Orient : std::uint8_t { Horizontal, Vertical };

// Dual edge by doubled midpoint. Horizontal dual edges (mx2 even, my2 odd)
// join faces f and f+1 and cross a vertical primal edge; vertical ones join
// f and f+i.
struct DualEdge {
    int mx2 = 0, my2 = 1;
    auto operator<=>(const DualEdge&) const = default;

    bool valid() const { return ((mx2 ^ my2) & 1) != 0; }
    Orient orient() const { return (mx2 & 1) == 0 ? Orient::Horizontal : Orient::Vertical; }
    // Faces ordered lexicographically: (f, f+1) or (f, f+i).
    std::array<Face, 2> faces() const;
    // Endpoints of the crossed primal edge, ordered.
    std::array<Vertex, 2> primal() const;
    DualEdge translated(int dx2, int dy2) const { return {mx2 + dx2, my2 + dy2}; }
};

enum Side : int { N = 0, E = 1, S = 2, W = 3 };

DualEdge edge_of(Face f, Side s);
// Side of f on which e lies; -1 if e is not incident to f.
int side_of(Face f, DualEdge e);
Face across(Face f, DualEdge e);  // the other face of e
Side ne_sw_partner(Side s);       // E<->N, W<->S
char side_name(Side s);

struct HalfEdge {
    Face face;
    DualEdge edge;
    auto operator<=>(const HalfEdge&) const = default;
    Side side() const;
};

using Domain = std::vector<Vertex>;  // kept sorted and unique

Domain make_domain(std::vector<Vertex> v);
Domain rect_domain(int x0, int y0, int x1, int y1);

inline std::uint64_t pack(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

struct GraphBundle {
    Domain domain;
    std::vector<std::array<Vertex, 2>> primal_edges;  // index-aligned with dual_edges
    std::vector<Vertex> boundary_vertices;
    std::vector<DualEdge> dual_edges;
    std::vector<Face> faces;
    // cluster vertex id = 4 * face index + side
    std::vector<std::array<int, 2>> short_edges;
    std::vector<std::array<int, 2>> long_edges;  // index-aligned with dual_edges, lo < hi

    int n_cluster() const { return 4 * static_cast<int>(faces.size()); }
    int vertex_id(Vertex v) const;
    int face_id(Face f) const;
    int edge_id(DualEdge e) const;
    int half_edge_id(const HalfEdge& h) const;  // -1 if not in V_cluster
    HalfEdge half_edge(int id) const;
    bool contains(Vertex v) const { return vertex_id(v) >= 0; }

    std::unordered_map<std::uint64_t, int> vertex_index, face_index, edge_index;
};

GraphBundle build_graphs(const Domain& domain);

struct BoundaryCondition {
    std::vector<HalfEdge> marked;
};

struct AdmissibilityWitness {
    Domain outer_domain;
    std::vector<DualEdge> outer_contour;  // sorted
    int margin = 2;
};

// Throws DomainError if any marked half-edge is not in V_cluster or entries repeat.
void validate_bc(const GraphBundle& b, const BoundaryCondition& xi);

// Nothing when a marked dual edge crosses a primal edge with both ends in Omega.
std::optional<AdmissibilityWitness> check_admissible(const GraphBundle& b,
                                                     const BoundaryCondition& xi,
                                                     int margin = 2);

// Dual edges whose crossed primal edge has at least one endpoint in v.
std::vector<DualEdge> dual_edges_of(const Domain& v);

// Number of marks of xi at each face of the bundle, mod 2.
std::vector<int> mark_parity(const GraphBundle& b, const std::vector<HalfEdge>& marks);

// Fixed polyominoes of the given size (connected, up to translation), anchored
// with minimum coordinates 0. Deterministic order.
std::vector<Domain> fixed_polyominoes(int size);

// Half-edges of V_cluster whose dual edge is not in E*_Omega.
std::vector<HalfEdge> external_half_edges(const GraphBundle& b);

std::string to_string(const DualEdge& e);
std::string to_string(const HalfEdge& h);

}  // namespace isinglab
