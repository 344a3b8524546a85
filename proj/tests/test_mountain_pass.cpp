#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "onelap/mountain_pass.hpp"
#include "onelap/radial_shooting.hpp"

using namespace onelap;

namespace {

SourceSpec sqrt_source()
{
    SourceSpec s = SourceSpec::power(0.5);
    s.alpha = 0.5;
    s.kappa = 1.4;
    return s;
}

int center_vertex(const Mesh& mesh)
{
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.vertices()[v].norm() < 1e-12) {
            return static_cast<int>(v);
        }
    }
    return -1;
}

}  // namespace

TEST(Endpoint, DistanceBumpShape)
{
    const Mesh m = build_disk_mesh(1.0, 2);
    const Field phi = distance_bump(m);
    EXPECT_DOUBLE_EQ(phi.max_value(), 1.0);
    EXPECT_DOUBLE_EQ(phi[center_vertex(m)], 1.0);
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
        if (m.is_boundary(static_cast<int>(v))) {
            EXPECT_EQ(phi[static_cast<int>(v)], 0.0);
        } else {
            EXPECT_GT(phi[static_cast<int>(v)], 0.0);
        }
    }
}

TEST(Endpoint, NegativeEnergyPersistsForSmallerP)
{
    const Mesh m = build_disk_mesh(1.0, 2);
    const auto spec = sqrt_source();
    const Field e = find_endpoint(spec, m, p_tilde(spec));
    const double at_14 = energy_Ip(e, {1.4, 0.0, Branch::plus}, spec);
    const double at_11 = energy_Ip(e, {1.1, 0.0, Branch::plus}, spec);
    EXPECT_LT(at_14, 0.0);
    EXPECT_LE(at_11, at_14);
    // T is a power of two
    const double T = e.max_value();
    EXPECT_EQ(std::exp2(std::round(std::log2(T))), T);
    // and the previous power still had nonnegative energy
    const Field half(m, 0.5 * e.values(), true);
    EXPECT_GE(energy_Ip(half, {1.4, 0.0, Branch::plus}, spec), 0.0);
}

TEST(Endpoint, DisabledSourceHasNoGeometry)
{
    const Mesh m = build_disk_mesh(1.0, 1);
    auto spec = sqrt_source();
    spec.amplitude = 0.0;
    EXPECT_THROW(find_endpoint(spec, m, 1.4), NoMountainPassGeometry);
}

TEST(Rho, ConstructionHalvesTheGrowthFactor)
{
    const Mesh m = build_disk_mesh(1.0, 2);
    const auto spec = sqrt_source();
    const RhoEstimate r = measure_rho(spec, m);
    EXPECT_GT(r.embedding, 0.0);
    EXPECT_NEAR(r.K2, r.K1 / 1.5 * r.embedding, 1e-15);
    EXPECT_NEAR(1.0 - r.K2 * std::pow(r.rho, spec.alpha), 0.5, 1e-12);
    // same seed, same estimate
    EXPECT_EQ(measure_rho(spec, m).rho, r.rho);
}

TEST(LocalMin, ZeroIsALocalMinimum)
{
    const Mesh m = build_disk_mesh(1.0, 2);
    const auto spec = sqrt_source();
    const double rho = measure_rho(spec, m).rho;
    const auto report = local_min_check(spec, m, {1.3, 0.0, Branch::plus}, rho, 16);
    EXPECT_TRUE(report.is_local_min);
    ASSERT_EQ(report.radii.size(), 3u);
    EXPECT_DOUBLE_EQ(report.radii[2], rho);
    for (const auto& probes : report.probe_energies) {
        EXPECT_EQ(probes.size(), 16u);
    }
}

TEST(LocalMin, FarProbesCanGoNegative)
{
    const Mesh m = build_disk_mesh(1.0, 2);
    const auto spec = sqrt_source();
    const auto report = local_min_check(spec, m, {1.3, 0.0, Branch::plus}, 1e7, 8);
    EXPECT_FALSE(report.is_local_min);
}

TEST(MountainPassConfig, Validation)
{
    MountainPassConfig c;
    EXPECT_TRUE(c.validate().empty());
    c.path_points = 2;
    EXPECT_FALSE(c.validate().empty());
    c = {};
    c.eps_schedule = {1e-3, 1e-2};
    EXPECT_FALSE(c.validate().empty());
    c = {};
    c.descent_tol = 0.0;
    EXPECT_FALSE(c.validate().empty());
    const Mesh m = build_disk_mesh(1.0, 1);
    EXPECT_THROW(mountain_pass_solve(sqrt_source(), m, 1.3, Field(m), c), std::invalid_argument);
}

TEST(MountainPass, RejectsEndpointWithoutNegativeEnergy)
{
    const Mesh m = build_disk_mesh(1.0, 1);
    EXPECT_THROW(mountain_pass_solve(sqrt_source(), m, 1.3, distance_bump(m), {}), std::invalid_argument);
}

class SqrtSourceSolve : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        mesh_ = new Mesh(build_disk_mesh(1.0, 2));
        spec_ = sqrt_source();
        e_ = new Field(find_endpoint(spec_, *mesh_, p_tilde(spec_)));
        rho_ = measure_rho(spec_, *mesh_).rho;
        MountainPassConfig config;
        config.rho = rho_;
        at_13_ = new MountainPassResult(mountain_pass_solve(spec_, *mesh_, 1.3, *e_, config));
    }
    static void TearDownTestSuite()
    {
        delete at_13_;
        delete e_;
        delete mesh_;
    }

    static Mesh* mesh_;
    static SourceSpec spec_;
    static Field* e_;
    static double rho_;
    static MountainPassResult* at_13_;
};

Mesh* SqrtSourceSolve::mesh_ = nullptr;
SourceSpec SqrtSourceSolve::spec_;
Field* SqrtSourceSolve::e_ = nullptr;
double SqrtSourceSolve::rho_ = 0.0;
MountainPassResult* SqrtSourceSolve::at_13_ = nullptr;

TEST_F(SqrtSourceSolve, ConvergedAndNontrivial)
{
    const auto& r = *at_13_;
    EXPECT_LE(r.residual_norm, 1e-8);
    EXPECT_DOUBLE_EQ(r.eps_final, 1e-6);
    EXPECT_GE(r.value, 0.5 * rho_);
    EXPECT_FALSE(r.suspicious);
    EXPECT_TRUE(r.nonnegative);
    EXPECT_GE(r.w.min_value(), -1e-8 * r.w.max_value());
}

TEST_F(SqrtSourceSolve, ValueMatchesRecomputedEnergy)
{
    const auto& r = *at_13_;
    const double recomputed = energy_Ip(r.w, {1.3, 0.0, Branch::plus}, spec_);
    EXPECT_NEAR(r.value, recomputed, 1e-12 * std::abs(recomputed));
}

TEST_F(SqrtSourceSolve, PathMaximumDecreasesEveryStep)
{
    const auto& log = at_13_->log;
    ASSERT_GT(at_13_->path_iterations, 1);
    double previous = std::numeric_limits<double>::infinity();
    int path_rows = 0;
    for (const auto& row : log) {
        if (std::isnan(row.path_max)) {
            continue;
        }
        ++path_rows;
        EXPECT_LT(row.energy, previous) << "iteration " << row.iter;
        // the sampled path never rises above the ray maximum
        EXPECT_LE(row.path_max, row.energy + 1e-9 * std::abs(row.energy));
        EXPECT_GE(row.t_star, 0.0);
        EXPECT_LE(row.t_star, 1.0);
        previous = row.energy;
    }
    EXPECT_EQ(path_rows, at_13_->path_iterations);
}

TEST_F(SqrtSourceSolve, ValueIncreasesWithP)
{
    MountainPassConfig config;
    const auto low = mountain_pass_solve(spec_, *mesh_, 1.2, *e_, config);
    const auto high = mountain_pass_solve(spec_, *mesh_, 1.35, *e_, config);
    EXPECT_LE(low.value, at_13_->value + 1e-8);
    EXPECT_LE(at_13_->value, high.value + 1e-8);
}

TEST_F(SqrtSourceSolve, WarmStartReachesTheSameCriticalPoint)
{
    MountainPassConfig config;
    const auto warm = mountain_pass_solve(spec_, *mesh_, 1.3, *e_, config, at_13_->w);
    EXPECT_NEAR(warm.value, at_13_->value, 1e-9 * at_13_->value);
    EXPECT_LT(warm.iterations, at_13_->iterations);
}

TEST_F(SqrtSourceSolve, LogIsDeterministic)
{
    MountainPassConfig config;
    config.rho = rho_;
    const auto again = mountain_pass_solve(spec_, *mesh_, 1.3, *e_, config);
    std::ostringstream a;
    std::ostringstream b;
    write_iteration_log(a, at_13_->log);
    write_iteration_log(b, again.log);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "iter,t_star,Ip,residual_norm,step_size,eps");
}

TEST_F(SqrtSourceSolve, IterationBudgetExhaustionReportsBest)
{
    MountainPassConfig config;
    config.max_iters = 3;
    try {
        mountain_pass_solve(spec_, *mesh_, 1.3, *e_, config);
        FAIL() << "expected divergence";
    } catch (const MountainPassDiverged& err) {
        EXPECT_LE(err.best().iterations, 3);
        EXPECT_GT(err.best().residual_norm, config.descent_tol);
        EXPECT_TRUE(std::isfinite(err.best().value));
    }
}

TEST(LaneEmdenBenchmark, CenterValueAndEnergyConverge)
{
    const auto oracle = lane_emden_shooting(3.0, 2, 1.0);
    const auto spec = SourceSpec::power(3.0);
    double previous_error = std::numeric_limits<double>::infinity();
    for (int ref : {2, 3}) {
        const Mesh m = build_disk_mesh(1.0, ref);
        const Field e = find_endpoint(spec, m, 2.0);
        const auto r = mountain_pass_solve(spec, m, 2.0, e, {});
        const double u0 = r.w[center_vertex(m)];
        EXPECT_NEAR(u0 / oracle.u0, 1.0, 0.01) << "ref " << ref;
        const double energy = r.value - 0.5 * m.total_area();
        const double error = std::abs(energy / oracle.energy - 1.0);
        EXPECT_LT(error, previous_error / 3.0);
        previous_error = error;
        // Nehari identity for a critical point of the p = 2 functional
        const Field& w = r.w;
        double source = 0.0;
        for (std::size_t v = 0; v < m.num_vertices(); ++v) {
            source += m.lumped_mass()[v] * std::pow(w[static_cast<int>(v)], 4);
        }
        EXPECT_NEAR(grad_p_integral(w, 2.0), source, 1e-7 * source);
    }
}
