#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace onelap {

using Vec2 = Eigen::Vector2d;

struct BoundaryEdge {
    std::array<int, 2> vertices;
    Vec2 normal;  // outward, unit length
    double length = 0.0;
};

enum class DomainKind { disk, rect };

struct DomainTag {
    DomainKind kind = DomainKind::disk;
    double radius = 1.0;  // disk
    double width = 1.0;   // rect
    double height = 1.0;  // rect

    static DomainTag disk(double r) { return {DomainKind::disk, r, 0.0, 0.0}; }
    static DomainTag rect(double a, double b) { return {DomainKind::rect, 0.0, a, b}; }

    /// Centroid of the continuous domain; used for normal orientation.
    Vec2 center() const;
};

class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Planar P1 triangulation with the geometric data needed for assembly,
/// trace terms and boundary integrals. Immutable once built.
class Mesh {
public:
    Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
         std::vector<BoundaryEdge> boundary_edges, DomainTag tag);

    const std::vector<Vec2>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }
    const std::vector<int>& boundary_vertices() const { return boundary_vertices_; }
    const DomainTag& domain() const { return tag_; }
    static constexpr int dimension = 2;

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_triangles() const { return triangles_.size(); }
    std::size_t num_edges() const { return num_edges_; }

    double area(std::size_t t) const { return areas_[t]; }
    /// Gradient of the hat function of the i-th local vertex of triangle t.
    const Vec2& hat_gradient(std::size_t t, int i) const { return hat_grads_[t][i]; }
    /// Row sums of the P1 mass matrix.
    const std::vector<double>& lumped_mass() const { return lumped_mass_; }
    bool is_boundary(int v) const { return on_boundary_[v]; }

    /// For each boundary edge, the triangle that owns it and the local index
    /// of the vertex opposite to it.
    int boundary_edge_triangle(std::size_t e) const { return edge_owner_[e]; }
    int boundary_edge_opposite(std::size_t e) const { return edge_opposite_[e]; }

    /// Maximal edge length.
    double mesh_size() const { return h_; }
    double total_area() const;
    double perimeter() const;

private:
    std::vector<Vec2> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<BoundaryEdge> boundary_edges_;
    std::vector<int> boundary_vertices_;
    std::vector<bool> on_boundary_;
    DomainTag tag_;

    std::vector<double> areas_;
    std::vector<std::array<Vec2, 3>> hat_grads_;
    std::vector<double> lumped_mass_;
    std::vector<int> edge_owner_;
    std::vector<int> edge_opposite_;
    std::size_t num_edges_ = 0;
    double h_ = 0.0;
};

/// Hexagonal fan of six triangles around the origin, refined `refinement`
/// times by 1:4 splitting; new boundary vertices are projected onto |x| = R.
Mesh build_disk_mesh(double radius, int refinement);

/// Structured triangulation of (0,a) x (0,b), each cell split along its
/// diagonal into two triangles.
Mesh build_rect_mesh(double a, double b, int nx, int ny);

struct MeshQuality {
    double min_angle_deg = 0.0;
    double h = 0.0;
    double total_area = 0.0;
    std::size_t degenerate_triangles = 0;
};

MeshQuality mesh_quality(const Mesh& mesh);

/// Checks the structural invariants (orientation, unit outward normals,
/// closed boundary loops, Euler relation, boundary on the circle for disks).
/// Returns a list of violations; empty when the mesh is valid.
std::vector<std::string> validate_mesh(const Mesh& mesh);

void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is, DomainTag tag);

}  // namespace onelap
