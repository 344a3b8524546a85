#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "onelap/mesh.hpp"

using namespace onelap;

namespace {

double inscribed_polygon_area(int sides, double R)
{
    return 0.5 * sides * R * R * std::sin(2.0 * std::numbers::pi / sides);
}

double inscribed_polygon_perimeter(int sides, double R)
{
    return 2.0 * sides * R * std::sin(std::numbers::pi / sides);
}

}  // namespace

TEST(DiskMesh, BaseFan)
{
    const Mesh m = build_disk_mesh(1.0, 0);
    EXPECT_EQ(m.num_vertices(), 7u);
    EXPECT_EQ(m.num_triangles(), 6u);
    EXPECT_EQ(m.boundary_vertices().size(), 6u);
    EXPECT_TRUE(validate_mesh(m).empty());
}

TEST(DiskMesh, SubdivisionCounts)
{
    EXPECT_EQ(build_disk_mesh(1.0, 1).num_triangles(), 24u);
    const Mesh m2 = build_disk_mesh(1.0, 2);
    EXPECT_EQ(m2.num_triangles(), 96u);
    EXPECT_EQ(m2.num_vertices(), 61u);
    EXPECT_EQ(m2.boundary_vertices().size(), 24u);
}

TEST(DiskMesh, BoundaryOnCircle)
{
    const Mesh m = build_disk_mesh(2.0, 0);
    for (int v : m.boundary_vertices()) {
        EXPECT_NEAR(m.vertices()[v].norm(), 2.0, 1e-15);
    }
    const Mesh m3 = build_disk_mesh(2.0, 3);
    for (int v : m3.boundary_vertices()) {
        EXPECT_NEAR(m3.vertices()[v].norm(), 2.0, 1e-14);
    }
}

TEST(DiskMesh, InvariantsHoldAtEveryLevel)
{
    double previous_error = 0.0;
    double previous_h = 0.0;
    for (int k = 0; k <= 5; ++k) {
        const Mesh m = build_disk_mesh(1.5, k);
        const auto problems = validate_mesh(m);
        EXPECT_TRUE(problems.empty()) << "level " << k << ": " << (problems.empty() ? "" : problems.front());
        const int sides = 6 << k;
        EXPECT_NEAR(m.perimeter(), inscribed_polygon_perimeter(sides, 1.5), 1e-12);
        EXPECT_NEAR(m.total_area(), inscribed_polygon_area(sides, 1.5), 1e-12);
        const double error = std::numbers::pi * 1.5 * 1.5 - m.total_area();
        if (k > 0) {
            EXPECT_GE(previous_error / error, 3.0);
            // the first projection lengthens the outer edges
            EXPECT_NEAR(m.mesh_size() / previous_h, 0.5, k == 1 ? 0.13 : 0.05);
        }
        previous_error = error;
        previous_h = m.mesh_size();
    }
}

TEST(MeshQuality, HexagonArea)
{
    const auto q = mesh_quality(build_disk_mesh(1.0, 0));
    EXPECT_NEAR(q.total_area, 1.5 * std::sqrt(3.0), 1e-14);
    EXPECT_NEAR(q.min_angle_deg, 60.0, 1e-9);
    EXPECT_EQ(q.degenerate_triangles, 0u);
}

TEST(MeshQuality, DiskAreaApproachesPi)
{
    const auto q = mesh_quality(build_disk_mesh(1.0, 3));
    EXPECT_LT(std::numbers::pi - q.total_area, 0.01);
    EXPECT_GT(std::numbers::pi - q.total_area, 0.0);
    EXPECT_GT(q.min_angle_deg, 20.0);
}

TEST(RectMesh, Counts)
{
    const Mesh m = build_rect_mesh(1.0, 1.0, 1, 1);
    EXPECT_EQ(m.num_triangles(), 2u);
    EXPECT_EQ(m.num_vertices(), 4u);
    EXPECT_EQ(build_rect_mesh(1.0, 1.0, 2, 2).num_triangles(), 8u);
    EXPECT_EQ(build_rect_mesh(1.0, 1.0, 4, 4).num_triangles(), 32u);
}

TEST(RectMesh, AreaIsExact)
{
    EXPECT_DOUBLE_EQ(build_rect_mesh(2.0, 1.0, 2, 1).total_area(), 2.0);
    EXPECT_DOUBLE_EQ(mesh_quality(build_rect_mesh(1.0, 1.0, 4, 4)).total_area, 1.0);
    for (int n = 1; n <= 16; n *= 2) {
        const Mesh m = build_rect_mesh(1.0, 0.5, n, n);
        EXPECT_NEAR(m.total_area(), 0.5, 1e-15);
        EXPECT_NEAR(m.perimeter(), 3.0, 1e-14);
        EXPECT_TRUE(validate_mesh(m).empty());
    }
}

TEST(Mesh, LumpedMassSumsToArea)
{
    const Mesh m = build_disk_mesh(1.0, 3);
    double sum = 0.0;
    for (double mv : m.lumped_mass()) {
        sum += mv;
    }
    EXPECT_NEAR(sum, m.total_area(), 1e-13);
}

TEST(Mesh, HatGradientsSumToZero)
{
    const Mesh m = build_disk_mesh(1.0, 2);
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const Vec2 s = m.hat_gradient(t, 0) + m.hat_gradient(t, 1) + m.hat_gradient(t, 2);
        EXPECT_LT(s.norm(), 1e-12);
    }
}

TEST(Mesh, DumpRoundTripIsBitExact)
{
    for (const Mesh& m : {build_disk_mesh(1.0, 3), build_rect_mesh(0.7, 1.3, 3, 5)}) {
        std::stringstream first;
        write_mesh(first, m);
        std::stringstream in(first.str());
        const Mesh back = read_mesh(in, m.domain());
        std::stringstream second;
        write_mesh(second, back);
        EXPECT_EQ(first.str(), second.str());
        for (std::size_t v = 0; v < m.num_vertices(); ++v) {
            EXPECT_EQ(m.vertices()[v], back.vertices()[v]);
        }
    }
}

TEST(Mesh, DumpHeader)
{
    std::stringstream s;
    write_mesh(s, build_rect_mesh(1.0, 1.0, 1, 1));
    std::string header;
    std::getline(s, header);
    EXPECT_EQ(header, "4 2 4");
}

TEST(Mesh, RejectsBadInput)
{
    EXPECT_THROW(build_disk_mesh(-1.0, 1), MeshError);
    EXPECT_THROW(build_disk_mesh(1.0, -1), MeshError);
    EXPECT_THROW(build_rect_mesh(1.0, 1.0, 0, 1), MeshError);
    std::stringstream bad("3 1 0\n0 0\n1 0\n");
    EXPECT_THROW(read_mesh(bad, DomainTag::rect(1, 1)), MeshError);
}

TEST(MeshQuality, ReportsDegenerateTriangles)
{
    Mesh m({Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)}, {{{0, 1, 2}}}, {}, DomainTag::rect(2, 1));
    const auto q = mesh_quality(m);
    EXPECT_EQ(q.degenerate_triangles, 1u);
    EXPECT_FALSE(validate_mesh(m).empty());
}
