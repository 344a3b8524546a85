#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "onelap/continuation.hpp"

namespace onelap {

enum class RadialKind { constant, supercritical_plain, supercritical_shifted };

RadialKind parse_radial_kind(const std::string& name);
std::string radial_kind_name(RadialKind kind);

/// Raised when a radial example is requested outside its validity range.
class ConstraintViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Explicit radial solutions on the ball B_R in R^N, with z = -x/R for the
/// constant one and z = -x/|x| for the supercritical ones.
class RadialSolution {
public:
    RadialKind kind() const { return kind_; }
    int N() const { return N_; }
    double R() const { return R_; }
    double q() const { return q_; }

    double u(const Eigen::VectorXd& x) const;
    Eigen::VectorXd z(const Eigen::VectorXd& x) const;
    double u(const Vec2& x) const { return u(Eigen::VectorXd(x)); }
    Vec2 z(const Vec2& x) const { return z(Eigen::VectorXd(x)); }

    /// Profile u(r) and u'(r).
    double profile(double r) const;
    double profile_derivative(double r) const;

    /// The source f with -div z = f(u).
    SourceSpec source() const;

    friend RadialSolution radial_solution(RadialKind kind, int N, double R, double q);

private:
    RadialSolution(RadialKind kind, int N, double R, double q) : kind_(kind), N_(N), R_(R), q_(q) {}

    RadialKind kind_;
    int N_;
    double R_;
    double q_;
};

RadialSolution radial_solution(RadialKind kind, int N, double R, double q);

/// Terms of the Pohozaev identity; residual vanishes for exact solutions.
struct PohozaevReport {
    double bulk1 = 0.0;       // (N-1) int u f(u)
    double bulk2 = 0.0;       // N int F(u)
    double bdry_F = 0.0;      // boundary int F(u) x.nu
    double bdry_grad = 0.0;   // boundary int |grad u| x.nu
    double bdry_mixed = 0.0;  // boundary int (x.grad u)(z.nu)
    double bdry_abs = 0.0;    // (N-1) boundary int |u|
    double residual = 0.0;
};

/// Closed-form route: radial integrals of monomials in r with the exact
/// sphere area.
PohozaevReport pohozaev_eval(const RadialSolution& sol);

/// Discrete route on a planar mesh: vertex quadrature in the bulk and the
/// polygon's own x.nu on each boundary edge.
PohozaevReport pohozaev_eval(const Field& u, const FluxField& z, const SourceSpec& spec);

/// (N-1) int u f - N int F + R int_{boundary} F - (N-1) int_{boundary} |u|;
/// nonnegative for solutions on balls.
double ball_inequality_slack(const RadialSolution& sol);

/// ((N-1) int u f(u)) / (N int F(u)) for f = |s|^{q-1} s and the zero-trace
/// profile u(r) = R^2 - r^2, by adaptive quadrature.
double zero_trace_ratio(double q, int N, double R = 1.0);

/// Solves f(s) = N/R for increasing f by bisection to 1e-12.
double constant_solution_general(const std::function<double(double)>& f, int N, double R);

struct WeakResidualOptions {
    /// Test hats whose support comes closer than this to the origin are
    /// skipped.
    double exclude_radius = 0.0;
};

/// max over interior hats phi_v of |int z.grad phi_v - int f(u) phi_v| / m_v,
/// with u sampled at the vertices and int z.grad phi_v exact per triangle.
double weak_residual(const RadialSolution& sol, const Mesh& mesh, const WeakResidualOptions& options = {});

/// Same residual for discrete data: z constant per triangle.
double weak_residual(const Field& u, const FluxField& z, const SourceSpec& spec,
                     const WeakResidualOptions& options = {});

/// Exact integral of z over triangle t for the closed-form fields above.
Vec2 triangle_flux_integral(const RadialSolution& sol, const Mesh& mesh, std::size_t t);

/// int over the segment [a, b] of |x| ds.
double segment_norm_integral(const Vec2& a, const Vec2& b);

std::string to_json(const PohozaevReport& report, int indent = 2);

}  // namespace onelap
