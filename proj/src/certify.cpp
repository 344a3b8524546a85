#include "onelap/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "onelap/format.hpp"

namespace onelap {

RadialKind parse_radial_kind(const std::string& name)
{
    if (name == "constant") {
        return RadialKind::constant;
    }
    if (name == "supercritical_plain") {
        return RadialKind::supercritical_plain;
    }
    if (name == "supercritical_shifted") {
        return RadialKind::supercritical_shifted;
    }
    throw std::invalid_argument("unknown radial solution kind '" + name + "'");
}

std::string radial_kind_name(RadialKind kind)
{
    switch (kind) {
    case RadialKind::constant:
        return "constant";
    case RadialKind::supercritical_plain:
        return "supercritical_plain";
    case RadialKind::supercritical_shifted:
        return "supercritical_shifted";
    }
    return "unknown";
}

RadialSolution radial_solution(RadialKind kind, int N, double R, double q)
{
    if (N < 2) {
        throw ConstraintViolation("dimension N must be at least 2");
    }
    if (!(R > 0.0)) {
        throw ConstraintViolation("radius R must be positive");
    }
    if (!(q > 0.0)) {
        throw ConstraintViolation("exponent q must be positive");
    }
    if (kind != RadialKind::constant && !(q > 1.0 / (N - 1))) {
        throw ConstraintViolation(radial_kind_name(kind) + " requires q > 1/(N-1) = " + fmt_exact(1.0 / (N - 1)) +
                                  ", got q = " + fmt_exact(q));
    }
    return RadialSolution(kind, N, R, q);
}

double RadialSolution::profile(double r) const
{
    switch (kind_) {
    case RadialKind::constant:
        return std::pow(N_ / R_, 1.0 / q_);
    case RadialKind::supercritical_plain:
        return std::pow((N_ - 1) / r, 1.0 / q_);
    case RadialKind::supercritical_shifted:
        return std::pow((N_ - 1) / r, 1.0 / q_) - std::pow((N_ - 1) / R_, 1.0 / q_);
    }
    return 0.0;
}

double RadialSolution::profile_derivative(double r) const
{
    if (kind_ == RadialKind::constant) {
        return 0.0;
    }
    return -std::pow(N_ - 1.0, 1.0 / q_) / q_ * std::pow(r, -1.0 / q_ - 1.0);
}

double RadialSolution::u(const Eigen::VectorXd& x) const { return profile(x.norm()); }

Eigen::VectorXd RadialSolution::z(const Eigen::VectorXd& x) const
{
    if (kind_ == RadialKind::constant) {
        return -x / R_;
    }
    const double r = x.norm();
    return r > 0.0 ? Eigen::VectorXd(-x / r) : Eigen::VectorXd(Eigen::VectorXd::Zero(x.size()));
}

SourceSpec RadialSolution::source() const
{
    if (kind_ == RadialKind::supercritical_shifted) {
        return SourceSpec::shifted_plus_power(q_, SourceSpec::radial_shift(q_, N_, R_), N_);
    }
    return SourceSpec::power(q_, N_);
}

namespace {

double sphere_area(int N) { return 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N); }

// sum of c r^gamma, integrated over [0, R]
struct Monomial {
    double coef;
    double gamma;
};

double integrate_monomials(const std::vector<Monomial>& terms, double R)
{
    double sum = 0.0;
    for (const auto& m : terms) {
        if (!(m.gamma > -1.0)) {
            throw ConstraintViolation("radial integral of r^" + fmt_exact(m.gamma) + " diverges at the origin");
        }
        sum += m.coef * std::pow(R, m.gamma + 1.0) / (m.gamma + 1.0);
    }
    return sum;
}

double triangle_origin_distance(const Mesh& mesh, const std::array<int, 3>& tri)
{
    const Vec2& a = mesh.vertices()[tri[0]];
    const Vec2& b = mesh.vertices()[tri[1]];
    const Vec2& c = mesh.vertices()[tri[2]];
    auto cross = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
    const double s1 = cross(b - a, -a);
    const double s2 = cross(c - b, -b);
    const double s3 = cross(a - c, -c);
    if ((s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0)) {
        return 0.0;
    }
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        const Vec2& p = mesh.vertices()[tri[i]];
        const Vec2& q = mesh.vertices()[tri[(i + 1) % 3]];
        const Vec2 d = q - p;
        const double t = std::clamp(-p.dot(d) / d.squaredNorm(), 0.0, 1.0);
        best = std::min(best, (p + t * d).norm());
    }
    return best;
}

// Interior vertices whose hats are used as test functions.
std::vector<bool> test_vertices(const Mesh& mesh, double exclude_radius)
{
    std::vector<bool> use(mesh.num_vertices(), false);
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        use[v] = !mesh.is_boundary(static_cast<int>(v));
    }
    if (exclude_radius > 0.0) {
        for (const auto& tri : mesh.triangles()) {
            if (triangle_origin_distance(mesh, tri) < exclude_radius) {
                for (int v : tri) {
                    use[static_cast<std::size_t>(v)] = false;
                }
            }
        }
    }
    return use;
}

template <class FluxOnTriangle, class SourceAtVertex>
double max_weak_residual(const Mesh& mesh, const WeakResidualOptions& options, FluxOnTriangle flux_integral,
                         SourceAtVertex source)
{
    const std::vector<bool> use = test_vertices(mesh, options.exclude_radius);
    std::vector<double> flux(mesh.num_vertices(), 0.0);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles()[t];
        if (!(use[tri[0]] || use[tri[1]] || use[tri[2]])) {
            continue;
        }
        const Vec2 zint = flux_integral(t);
        for (int i = 0; i < 3; ++i) {
            flux[static_cast<std::size_t>(tri[i])] += zint.dot(mesh.hat_gradient(t, i));
        }
    }
    double worst = 0.0;
    const auto& mass = mesh.lumped_mass();
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (use[v]) {
            worst = std::max(worst, std::abs(flux[v] - mass[v] * source(v)) / mass[v]);
        }
    }
    return worst;
}

}  // namespace

PohozaevReport pohozaev_eval(const RadialSolution& sol)
{
    const int N = sol.N();
    const double R = sol.R();
    const double q = sol.q();
    const double S = sphere_area(N);
    const double boundary_measure = S * std::pow(R, N - 1);
    const SourceSpec spec = sol.source();

    std::vector<Monomial> uf;
    std::vector<Monomial> F;
    switch (sol.kind()) {
    case RadialKind::constant: {
        const double c = sol.profile(R);
        uf.push_back({c * f_eval(spec, c), N - 1.0});
        F.push_back({F_eval(spec, c), N - 1.0});
        break;
    }
    case RadialKind::supercritical_plain:
    case RadialKind::supercritical_shifted: {
        // u + c = A r^{-1/q} and f(u) = (N-1)/r
        const double A = std::pow(N - 1.0, 1.0 / q);
        const double c = sol.kind() == RadialKind::supercritical_plain ? 0.0 : std::pow((N - 1) / R, 1.0 / q);
        const double g = N - 2.0 - 1.0 / q;
        uf.push_back({(N - 1) * A, g});
        F.push_back({std::pow(A, q + 1.0) / (q + 1.0), g});
        if (c != 0.0) {
            uf.push_back({-(N - 1) * c, N - 2.0});
            F.push_back({-std::pow(c, q + 1.0) / (q + 1.0), N - 1.0});
        }
        break;
    }
    }

    PohozaevReport r;
    r.bulk1 = (N - 1) * S * integrate_monomials(uf, R);
    r.bulk2 = N * S * integrate_monomials(F, R);
    const double uR = sol.profile(R);
    const double duR = sol.profile_derivative(R);
    // on the sphere x.nu = R and z.nu = -1 for every kind
    r.bdry_F = F_eval(spec, uR) * R * boundary_measure;
    r.bdry_grad = std::abs(duR) * R * boundary_measure;
    r.bdry_mixed = R * duR * -1.0 * boundary_measure;
    r.bdry_abs = (N - 1) * std::abs(uR) * boundary_measure;
    r.residual = r.bulk1 - r.bulk2 + r.bdry_F - r.bdry_grad + r.bdry_mixed - r.bdry_abs;
    return r;
}

PohozaevReport pohozaev_eval(const Field& u, const FluxField& z, const SourceSpec& spec)
{
    const Mesh& mesh = u.mesh();
    const int N = 2;
    PohozaevReport r;
    const auto& mass = mesh.lumped_mass();
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        const double s = u[static_cast<int>(v)];
        r.bulk1 += mass[v] * s * f_eval(spec, s);
        r.bulk2 += mass[v] * F_eval(spec, s);
    }
    r.bulk1 *= N - 1;
    r.bulk2 *= N;
    for (std::size_t e = 0; e < mesh.boundary_edges().size(); ++e) {
        const auto& edge = mesh.boundary_edges()[e];
        const Vec2& a = mesh.vertices()[edge.vertices[0]];
        const Vec2& b = mesh.vertices()[edge.vertices[1]];
        const double ua = u[edge.vertices[0]];
        const double ub = u[edge.vertices[1]];
        const double um = 0.5 * (ua + ub);
        const double x_nu = a.dot(edge.normal);  // constant along a straight edge
        const auto t = static_cast<std::size_t>(mesh.boundary_edge_triangle(e));
        const Vec2 grad = u.gradient(t);
        auto simpson = [&](auto g) { return edge.length * (g(ua) + 4.0 * g(um) + g(ub)) / 6.0; };
        r.bdry_F += x_nu * simpson([&](double s) { return F_eval(spec, s); });
        r.bdry_abs += simpson([](double s) { return std::abs(s); });
        r.bdry_grad += edge.length * grad.norm() * x_nu;
        r.bdry_mixed += edge.length * (0.5 * (a + b)).dot(grad) * z[t].dot(edge.normal);
    }
    r.bdry_abs *= N - 1;
    r.residual = r.bulk1 - r.bulk2 + r.bdry_F - r.bdry_grad + r.bdry_mixed - r.bdry_abs;
    return r;
}

double ball_inequality_slack(const RadialSolution& sol)
{
    const PohozaevReport r = pohozaev_eval(sol);
    return r.bulk1 - r.bulk2 + r.bdry_F - r.bdry_abs;
}

double zero_trace_ratio(double q, int N, double R)
{
    if (!(q > 0.0) || N < 2 || !(R > 0.0)) {
        throw std::invalid_argument("zero_trace_ratio needs q > 0, N >= 2, R > 0");
    }
    const SourceSpec spec = SourceSpec::power(q, N);
    auto profile = [R](double r) { return R * R - r * r; };
    using Quadrature = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double uf = Quadrature::integrate(
        [&](double r) { return profile(r) * f_eval(spec, profile(r)) * std::pow(r, N - 1); }, 0.0, R, 15, 1e-14);
    const double F = Quadrature::integrate(
        [&](double r) { return F_eval(spec, profile(r)) * std::pow(r, N - 1); }, 0.0, R, 15, 1e-14);
    return ((N - 1) * uf) / (N * F);
}

double constant_solution_general(const std::function<double(double)>& f, int N, double R)
{
    if (N < 1 || !(R > 0.0)) {
        throw std::invalid_argument("constant solution needs N >= 1 and R > 0");
    }
    const double target = N / R;
    double lo = 0.0;
    if (f(lo) > target) {
        throw std::domain_error("N/R = " + fmt_exact(target) + " lies below the range of f on [0, inf)");
    }
    double hi = 1.0;
    while (f(hi) < target) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi) || hi > 1e300) {
            throw std::domain_error("N/R = " + fmt_exact(target) + " lies above the range of f");
        }
    }
    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double segment_norm_integral(const Vec2& a, const Vec2& b)
{
    const Vec2 d = b - a;
    const double L = d.norm();
    if (L == 0.0) {
        return 0.0;
    }
    const Vec2 dir = d / L;
    const double s0 = -a.dot(dir);  // arclength of the foot of the origin
    const double h = std::abs(a.x() * dir.y() - a.y() * dir.x());
    // antiderivative of sqrt(h^2 + s^2)
    auto G = [h](double s) {
        if (h == 0.0) {
            return 0.5 * s * std::abs(s);
        }
        return 0.5 * (s * std::hypot(h, s) + h * h * std::asinh(s / h));
    };
    return G(L - s0) - G(-s0);
}

Vec2 triangle_flux_integral(const RadialSolution& sol, const Mesh& mesh, std::size_t t)
{
    const auto& tri = mesh.triangles()[t];
    const Vec2& a = mesh.vertices()[tri[0]];
    const Vec2& b = mesh.vertices()[tri[1]];
    const Vec2& c = mesh.vertices()[tri[2]];
    if (sol.kind() == RadialKind::constant) {
        return -mesh.area(t) * (a + b + c) / (3.0 * sol.R());
    }
    // x/|x| is the gradient of |x|, so its integral is the boundary integral
    // of |x| nu.
    const double orientation = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x() > 0.0 ? 1.0 : -1.0;
    Vec2 sum(0.0, 0.0);
    const std::array<const Vec2*, 3> p{&a, &b, &c};
    for (int i = 0; i < 3; ++i) {
        const Vec2& from = *p[i];
        const Vec2& to = *p[(i + 1) % 3];
        const Vec2 d = to - from;
        const Vec2 nu = orientation * Vec2(d.y(), -d.x()) / d.norm();
        sum += segment_norm_integral(from, to) * nu;
    }
    return -sum;
}

double weak_residual(const RadialSolution& sol, const Mesh& mesh, const WeakResidualOptions& options)
{
    if (sol.N() != 2) {
        throw std::invalid_argument("mesh residuals are planar; N must be 2");
    }
    const SourceSpec spec = sol.source();
    return max_weak_residual(
        mesh, options, [&](std::size_t t) { return triangle_flux_integral(sol, mesh, t); },
        [&](std::size_t v) { return f_eval(spec, sol.u(mesh.vertices()[v])); });
}

double weak_residual(const Field& u, const FluxField& z, const SourceSpec& spec, const WeakResidualOptions& options)
{
    const Mesh& mesh = u.mesh();
    return max_weak_residual(
        mesh, options, [&](std::size_t t) { return Vec2(mesh.area(t) * z[t]); },
        [&](std::size_t v) { return f_eval(spec, u[static_cast<int>(v)]); });
}

std::string to_json(const PohozaevReport& report, int indent)
{
    const nlohmann::ordered_json j{{"bulk1", report.bulk1},           {"bulk2", report.bulk2},
                                   {"bdry_F", report.bdry_F},         {"bdry_grad", report.bdry_grad},
                                   {"bdry_mixed", report.bdry_mixed}, {"bdry_abs", report.bdry_abs},
                                   {"residual", report.residual}};
    return j.dump(indent);
}

}  // namespace onelap
