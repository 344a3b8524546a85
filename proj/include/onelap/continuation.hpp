#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "onelap/mountain_pass.hpp"

namespace onelap {

/// Piecewise-constant vector field, one value per triangle.
class FluxField {
public:
    FluxField(const Mesh& mesh, std::vector<Vec2> z);

    const Mesh& mesh() const { return *mesh_; }
    const std::vector<Vec2>& values() const { return z_; }
    const Vec2& operator[](std::size_t t) const { return z_[t]; }

    double max_norm() const;
    /// Fraction of the total area covered by triangles with |z_T| > level.
    double area_fraction_above(double level) const;

private:
    const Mesh* mesh_;
    std::vector<Vec2> z_;
};

/// z_T = (|grad w|^2 + eps^2)^{(p-2)/2} grad w.
FluxField recover_flux(const Field& w, double p, double eps);

/// sum_T |T| (|grad w| - z . grad w). Nonnegative when |z| <= 1.
double pairing_defect(const Field& w, const FluxField& z);

/// Boundary integral of |w| + w (z . nu), with w at edge midpoints and z from
/// the adjacent triangle.
double boundary_sign_defect(const Field& w, const FluxField& z);

/// Same integrand with w replaced by its value at the vertex opposite each
/// boundary edge. A zero-trace field shows detachment only through its first
/// interior ring, so this is the informative variant for continuation output.
double inner_trace_sign_defect(const Field& w, const FluxField& z);

/// Vertex quadrature of (1 + |w|^q)^N over {|w| > k}.
double truncation_tail(const Field& w, const SourceSpec& spec, double k);

/// Nodal G_k: s - k above k, 0 on [-k, k], s + k below -k.
Field G_k_apply(const Field& w, double k);

/// Largest value of w on interior vertices that touch the boundary.
double first_ring_max(const Field& w);

/// Schedules p_k = 1 + (p0 - 1) r^k and an evenly spaced one.
std::vector<double> geometric_schedule(double p0, double ratio, int steps);
std::vector<double> linear_schedule(double p0, double p_last, int steps);

/// eps_final = min(1e-6, (p-1)^2); the base schedule is cut above it.
std::vector<double> eps_schedule_for(double p, const std::vector<double>& base);

struct TailEntry {
    double k = 0.0;
    double tail = 0.0;
};

struct ContinuationStep {
    double p = 0.0;
    double value = 0.0;
    double grad_p_integral = 0.0;
    double grad_1_integral = 0.0;
    double linf = 0.0;
    double flux_max = 0.0;
    double pairing_defect = 0.0;
    double boundary_sign_defect = 0.0;
    double inner_trace_defect = 0.0;
    double residual = 0.0;
    int iterations = 0;
    double eps_final = 0.0;
    /// Right side of the Hoelder bound on grad_1_integral.
    double holder_bound = 0.0;
    double flux_excess_fraction = 0.0;  // area fraction with |z| > 1.05
    double first_ring_max = 0.0;
    /// Tails at k = {0, 1/2, 1, 2} times the sup norm of the first step.
    std::vector<TailEntry> tails;
    /// G_k test (k = linf/2): flux paired with grad G_k(w), the source
    /// paired with G_k(w), and the plain integral of |grad G_k(w)|^p.
    double gk_flux_pairing = 0.0;
    double gk_source_pairing = 0.0;
    double gk_grad_p = 0.0;
    double gk_tolerance = 0.0;
};

struct ContinuationReport {
    std::vector<ContinuationStep> steps;
    bool complete = true;
    std::string failure;
    /// Uniform bound (1/p0 - 1/kappa)^{-1} (C + C1) from the first step.
    double C = 0.0;
    double C1 = 0.0;
    double C_tilde = 0.0;
    RhoEstimate rho;
};

struct ContinuationResult {
    ContinuationReport report;
    std::optional<Field> w;
    std::optional<FluxField> z;
    /// Per-step fields, kept only when requested.
    std::vector<Field> fields;
};

ContinuationResult run_continuation(const SourceSpec& spec, const Mesh& mesh, const std::vector<double>& schedule,
                                    const MountainPassConfig& config, bool keep_fields = false,
                                    std::uint64_t seed = 1);

/// CSV with columns p,Ip_value,grad_p_integral,grad_1_integral,linf,flux_max,
/// pairing_defect,boundary_sign_defect,residual,iters.
void write_report_csv(std::ostream& os, const ContinuationReport& report);

void write_flux(std::ostream& os, const FluxField& z);

}  // namespace onelap
