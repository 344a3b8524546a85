#include "onelap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <utility>

#include "onelap/format.hpp"

namespace onelap {

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey make_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c)
{
    const Vec2 u = b - a;
    const Vec2 v = c - a;
    return 0.5 * (u.x() * v.y() - u.y() * v.x());
}

// Edges owned by exactly one triangle, oriented along that triangle's
// counter-clockwise order so that the outward normal is the clockwise
// rotation of the edge direction.
std::vector<BoundaryEdge> detect_boundary(const std::vector<Vec2>& vertices,
                                          const std::vector<std::array<int, 3>>& triangles)
{
    std::map<EdgeKey, std::pair<int, EdgeKey>> count;  // key -> (uses, oriented)
    for (const auto& tri : triangles) {
        for (int i = 0; i < 3; ++i) {
            const int a = tri[i];
            const int b = tri[(i + 1) % 3];
            auto [it, inserted] = count.try_emplace(make_key(a, b), 0, EdgeKey{a, b});
            ++it->second.first;
        }
    }
    std::vector<BoundaryEdge> edges;
    for (const auto& [key, info] : count) {
        if (info.first != 1) {
            continue;
        }
        const auto [a, b] = info.second;
        const Vec2 d = vertices[b] - vertices[a];
        const double len = d.norm();
        edges.push_back({{a, b}, Vec2(d.y(), -d.x()) / len, len});
    }
    return edges;
}

}  // namespace

Vec2 DomainTag::center() const
{
    if (kind == DomainKind::disk) {
        return Vec2::Zero();
    }
    return Vec2(0.5 * width, 0.5 * height);
}

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<BoundaryEdge> boundary_edges, DomainTag tag)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_edges_(std::move(boundary_edges)),
      tag_(tag)
{
    const auto nv = vertices_.size();
    on_boundary_.assign(nv, false);
    lumped_mass_.assign(nv, 0.0);
    areas_.reserve(triangles_.size());
    hat_grads_.reserve(triangles_.size());

    std::map<EdgeKey, std::pair<int, int>> edge_to_tri;
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const auto& tri = triangles_[t];
        for (int i = 0; i < 3; ++i) {
            if (tri[i] < 0 || static_cast<std::size_t>(tri[i]) >= nv) {
                throw MeshError("triangle references a vertex out of range");
            }
        }
        const Vec2& a = vertices_[tri[0]];
        const Vec2& b = vertices_[tri[1]];
        const Vec2& c = vertices_[tri[2]];
        const double area = signed_area(a, b, c);
        areas_.push_back(area);
        // grad phi_i = perp(x_{i+2} - x_{i+1}) / (2 area), perp(v) = (-v_y, v_x)
        std::array<Vec2, 3> grads;
        for (int i = 0; i < 3; ++i) {
            const Vec2 e = vertices_[tri[(i + 2) % 3]] - vertices_[tri[(i + 1) % 3]];
            grads[i] = Vec2(-e.y(), e.x()) / (2.0 * area);
            lumped_mass_[tri[i]] += area / 3.0;
            edge_to_tri.try_emplace(make_key(tri[i], tri[(i + 1) % 3]),
                                    static_cast<int>(t), (i + 2) % 3);
            h_ = std::max(h_, (vertices_[tri[(i + 1) % 3]] - vertices_[tri[i]]).norm());
        }
        hat_grads_.push_back(grads);
    }
    num_edges_ = edge_to_tri.size();

    edge_owner_.reserve(boundary_edges_.size());
    edge_opposite_.reserve(boundary_edges_.size());
    for (const auto& e : boundary_edges_) {
        on_boundary_[e.vertices[0]] = true;
        on_boundary_[e.vertices[1]] = true;
        const auto it = edge_to_tri.find(make_key(e.vertices[0], e.vertices[1]));
        if (it == edge_to_tri.end()) {
            throw MeshError("boundary edge is not an edge of any triangle");
        }
        edge_owner_.push_back(it->second.first);
        edge_opposite_.push_back(it->second.second);
    }
    for (std::size_t v = 0; v < nv; ++v) {
        if (on_boundary_[v]) {
            boundary_vertices_.push_back(static_cast<int>(v));
        }
    }
}

double Mesh::total_area() const
{
    double sum = 0.0;
    for (double a : areas_) {
        sum += a;
    }
    return sum;
}

double Mesh::perimeter() const
{
    double sum = 0.0;
    for (const auto& e : boundary_edges_) {
        sum += e.length;
    }
    return sum;
}

Mesh build_disk_mesh(double radius, int refinement)
{
    if (!(radius > 0.0)) {
        throw MeshError("disk radius must be positive");
    }
    if (refinement < 0) {
        throw MeshError("refinement level must be nonnegative");
    }
    std::vector<Vec2> vertices{Vec2::Zero()};
    for (int k = 0; k < 6; ++k) {
        const double theta = k * std::numbers::pi / 3.0;
        vertices.emplace_back(radius * std::cos(theta), radius * std::sin(theta));
    }
    std::vector<std::array<int, 3>> triangles;
    std::map<EdgeKey, bool> on_circle;
    for (int k = 0; k < 6; ++k) {
        const int a = k + 1;
        const int b = (k + 1) % 6 + 1;
        triangles.push_back({0, a, b});
        on_circle[make_key(a, b)] = true;
    }

    for (int level = 0; level < refinement; ++level) {
        std::map<EdgeKey, int> midpoint;
        std::map<EdgeKey, bool> next_circle;
        auto mid = [&](int a, int b) {
            const auto key = make_key(a, b);
            if (auto it = midpoint.find(key); it != midpoint.end()) {
                return it->second;
            }
            Vec2 m = 0.5 * (vertices[a] + vertices[b]);
            const bool boundary = on_circle.contains(key);
            if (boundary) {
                m *= radius / m.norm();
            }
            const int id = static_cast<int>(vertices.size());
            vertices.push_back(m);
            midpoint.emplace(key, id);
            if (boundary) {
                next_circle[make_key(a, id)] = true;
                next_circle[make_key(id, b)] = true;
            }
            return id;
        };
        std::vector<std::array<int, 3>> refined;
        refined.reserve(4 * triangles.size());
        for (const auto& [a, b, c] : triangles) {
            const int ab = mid(a, b);
            const int bc = mid(b, c);
            const int ca = mid(c, a);
            refined.push_back({a, ab, ca});
            refined.push_back({ab, b, bc});
            refined.push_back({ca, bc, c});
            refined.push_back({ab, bc, ca});
        }
        triangles = std::move(refined);
        on_circle = std::move(next_circle);
    }

    auto edges = detect_boundary(vertices, triangles);
    return Mesh(std::move(vertices), std::move(triangles), std::move(edges), DomainTag::disk(radius));
}

Mesh build_rect_mesh(double a, double b, int nx, int ny)
{
    if (!(a > 0.0) || !(b > 0.0)) {
        throw MeshError("rectangle sides must be positive");
    }
    if (nx < 1 || ny < 1) {
        throw MeshError("rectangle subdivisions must be at least 1");
    }
    std::vector<Vec2> vertices;
    vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            vertices.emplace_back(a * i / nx, b * j / ny);
        }
    }
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    auto edges = detect_boundary(vertices, triangles);
    return Mesh(std::move(vertices), std::move(triangles), std::move(edges), DomainTag::rect(a, b));
}

MeshQuality mesh_quality(const Mesh& mesh)
{
    MeshQuality q;
    q.h = mesh.mesh_size();
    q.total_area = mesh.total_area();
    q.min_angle_deg = 180.0;
    const auto& x = mesh.vertices();
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles()[t];
        if (!(mesh.area(t) > 0.0)) {
            ++q.degenerate_triangles;
            q.min_angle_deg = 0.0;
            continue;
        }
        for (int i = 0; i < 3; ++i) {
            const Vec2 u = x[tri[(i + 1) % 3]] - x[tri[i]];
            const Vec2 v = x[tri[(i + 2) % 3]] - x[tri[i]];
            const double c = std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0);
            q.min_angle_deg = std::min(q.min_angle_deg, std::acos(c) * 180.0 / std::numbers::pi);
        }
    }
    return q;
}

std::vector<std::string> validate_mesh(const Mesh& mesh)
{
    std::vector<std::string> problems;
    auto report = [&problems](const std::string& what) { problems.push_back(what); };

    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        if (!(mesh.area(t) > 0.0)) {
            report("triangle " + std::to_string(t) + " has nonpositive signed area");
        }
    }

    const Vec2 center = mesh.domain().center();
    std::map<int, std::vector<int>> next;
    for (const auto& e : mesh.boundary_edges()) {
        if (std::abs(e.normal.norm() - 1.0) > 1e-12) {
            report("boundary normal is not unit length");
        }
        const Vec2 mid = 0.5 * (mesh.vertices()[e.vertices[0]] + mesh.vertices()[e.vertices[1]]);
        if (!(e.normal.dot(mid - center) > 0.0)) {
            report("boundary normal points inward");
        }
        next[e.vertices[0]].push_back(e.vertices[1]);
    }

    // Closed loops: each boundary vertex starts exactly one edge and
    // following successors returns to the start.
    std::map<int, int> incoming;
    for (const auto& e : mesh.boundary_edges()) {
        ++incoming[e.vertices[1]];
    }
    for (const auto& [v, succ] : next) {
        if (succ.size() != 1 || incoming[v] != 1) {
            report("boundary vertex " + std::to_string(v) + " is not on a simple loop");
        }
    }
    if (problems.empty() && !next.empty()) {
        std::map<int, bool> seen;
        for (const auto& [start, succ] : next) {
            if (seen[start]) {
                continue;
            }
            int v = start;
            std::size_t steps = 0;
            do {
                seen[v] = true;
                v = next[v].front();
                ++steps;
            } while (v != start && steps <= next.size());
            if (v != start) {
                report("boundary loop does not close");
                break;
            }
        }
    }

    const auto V = static_cast<long>(mesh.num_vertices());
    const auto E = static_cast<long>(mesh.num_edges());
    const auto T = static_cast<long>(mesh.num_triangles());
    if (V - E + T != 1) {
        report("Euler relation V - E + T = 1 violated");
    }

    if (mesh.domain().kind == DomainKind::disk) {
        const double R = mesh.domain().radius;
        const double h = mesh.mesh_size();
        for (int v : mesh.boundary_vertices()) {
            if (std::abs(mesh.vertices()[v].norm() - R) > h * h) {
                report("boundary vertex " + std::to_string(v) + " is off the circle");
            }
        }
    }
    return problems;
}

void write_mesh(std::ostream& os, const Mesh& mesh)
{
    os << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' '
       << mesh.boundary_edges().size() << '\n';
    for (const auto& x : mesh.vertices()) {
        os << fmt_exact(x.x()) << ' ' << fmt_exact(x.y()) << '\n';
    }
    for (const auto& [i, j, k] : mesh.triangles()) {
        os << i << ' ' << j << ' ' << k << '\n';
    }
    for (const auto& e : mesh.boundary_edges()) {
        os << e.vertices[0] << ' ' << e.vertices[1] << ' ' << fmt_exact(e.normal.x()) << ' '
           << fmt_exact(e.normal.y()) << ' ' << fmt_exact(e.length) << '\n';
    }
}

Mesh read_mesh(std::istream& is, DomainTag tag)
{
    std::size_t nv = 0;
    std::size_t nt = 0;
    std::size_t nb = 0;
    if (!(is >> nv >> nt >> nb)) {
        throw MeshError("mesh dump: bad header");
    }
    std::vector<Vec2> vertices(nv);
    for (auto& x : vertices) {
        if (!(is >> x.x() >> x.y())) {
            throw MeshError("mesh dump: truncated vertex block");
        }
    }
    std::vector<std::array<int, 3>> triangles(nt);
    for (auto& t : triangles) {
        if (!(is >> t[0] >> t[1] >> t[2])) {
            throw MeshError("mesh dump: truncated triangle block");
        }
    }
    std::vector<BoundaryEdge> edges(nb);
    for (auto& e : edges) {
        if (!(is >> e.vertices[0] >> e.vertices[1] >> e.normal.x() >> e.normal.y() >> e.length)) {
            throw MeshError("mesh dump: truncated boundary block");
        }
    }
    return Mesh(std::move(vertices), std::move(triangles), std::move(edges), tag);
}

}  // namespace onelap
