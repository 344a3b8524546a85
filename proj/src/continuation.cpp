#include "onelap/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "onelap/format.hpp"

namespace onelap {

FluxField::FluxField(const Mesh& mesh, std::vector<Vec2> z) : mesh_(&mesh), z_(std::move(z))
{
    if (z_.size() != mesh.num_triangles()) {
        throw std::invalid_argument("flux field needs one vector per triangle");
    }
}

double FluxField::max_norm() const
{
    double top = 0.0;
    for (const auto& z : z_) {
        top = std::max(top, z.norm());
    }
    return top;
}

double FluxField::area_fraction_above(double level) const
{
    double above = 0.0;
    for (std::size_t t = 0; t < z_.size(); ++t) {
        if (z_[t].norm() > level) {
            above += mesh_->area(t);
        }
    }
    return above / mesh_->total_area();
}

FluxField recover_flux(const Field& w, double p, double eps)
{
    const Mesh& mesh = w.mesh();
    std::vector<Vec2> z(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Vec2 g = w.gradient(t);
        const double s = g.squaredNorm() + eps * eps;
        z[t] = s > 0.0 ? Vec2(std::pow(s, 0.5 * (p - 2.0)) * g) : Vec2(0.0, 0.0);
    }
    return FluxField(mesh, std::move(z));
}

double pairing_defect(const Field& w, const FluxField& z)
{
    double sum = 0.0;
    for (std::size_t t = 0; t < w.mesh().num_triangles(); ++t) {
        const Vec2 g = w.gradient(t);
        sum += w.mesh().area(t) * (g.norm() - z[t].dot(g));
    }
    return sum;
}

namespace {

template <class TraceValue>
double sign_defect(const Field& w, const FluxField& z, TraceValue trace)
{
    const Mesh& mesh = w.mesh();
    double sum = 0.0;
    for (std::size_t e = 0; e < mesh.boundary_edges().size(); ++e) {
        const auto& edge = mesh.boundary_edges()[e];
        const double value = trace(e, edge);
        const double flux = z[static_cast<std::size_t>(mesh.boundary_edge_triangle(e))].dot(edge.normal);
        sum += edge.length * (std::abs(value) + value * flux);
    }
    return sum;
}

}  // namespace

double boundary_sign_defect(const Field& w, const FluxField& z)
{
    return sign_defect(w, z, [&](std::size_t, const BoundaryEdge& edge) {
        return 0.5 * (w[edge.vertices[0]] + w[edge.vertices[1]]);
    });
}

double inner_trace_sign_defect(const Field& w, const FluxField& z)
{
    const Mesh& mesh = w.mesh();
    return sign_defect(w, z, [&](std::size_t e, const BoundaryEdge&) {
        const auto& tri = mesh.triangles()[static_cast<std::size_t>(mesh.boundary_edge_triangle(e))];
        return w[tri[static_cast<std::size_t>(mesh.boundary_edge_opposite(e))]];
    });
}

double truncation_tail(const Field& w, const SourceSpec& spec, double k)
{
    if (k < 0.0) {
        throw std::invalid_argument("truncation level must be nonnegative");
    }
    const auto& mass = w.mesh().lumped_mass();
    double sum = 0.0;
    for (std::size_t v = 0; v < mass.size(); ++v) {
        const double s = std::abs(w[static_cast<int>(v)]);
        if (s > k) {
            sum += mass[v] * std::pow(1.0 + std::pow(s, spec.q), spec.N);
        }
    }
    return sum;
}

Field G_k_apply(const Field& w, double k)
{
    if (k < 0.0) {
        throw std::invalid_argument("truncation level must be nonnegative");
    }
    Eigen::VectorXd v = w.values();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double s = v[i];
        v[i] = s > k ? s - k : (s < -k ? s + k : 0.0);
    }
    return Field(w.mesh(), std::move(v), w.zero_trace());
}

double first_ring_max(const Field& w)
{
    const Mesh& mesh = w.mesh();
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& tri : mesh.triangles()) {
        const bool touches = mesh.is_boundary(tri[0]) || mesh.is_boundary(tri[1]) || mesh.is_boundary(tri[2]);
        if (!touches) {
            continue;
        }
        for (int v : tri) {
            if (!mesh.is_boundary(v)) {
                top = std::max(top, w[v]);
            }
        }
    }
    return std::isfinite(top) ? top : 0.0;
}

std::vector<double> geometric_schedule(double p0, double ratio, int steps)
{
    if (!(p0 > 1.0) || !(ratio > 0.0 && ratio < 1.0) || steps < 1) {
        throw std::invalid_argument("geometric schedule needs p0 > 1, 0 < ratio < 1, steps >= 1");
    }
    std::vector<double> out;
    for (int k = 0; k < steps; ++k) {
        out.push_back(1.0 + (p0 - 1.0) * std::pow(ratio, k));
    }
    return out;
}

std::vector<double> linear_schedule(double p0, double p_last, int steps)
{
    if (!(p0 > 1.0) || !(p_last > 1.0) || steps < 1 || (steps > 1 && !(p_last < p0))) {
        throw std::invalid_argument("linear schedule needs p0 > p_last > 1 and steps >= 1");
    }
    std::vector<double> out;
    for (int k = 0; k < steps; ++k) {
        out.push_back(steps == 1 ? p0 : p0 + (p_last - p0) * k / (steps - 1));
    }
    return out;
}

std::vector<double> eps_schedule_for(double p, const std::vector<double>& base)
{
    const double eps_final = std::min(1e-6, (p - 1.0) * (p - 1.0));
    std::vector<double> out;
    for (double eps : base) {
        if (eps > eps_final) {
            out.push_back(eps);
        }
    }
    out.push_back(eps_final);
    return out;
}

ContinuationResult run_continuation(const SourceSpec& spec, const Mesh& mesh, const std::vector<double>& schedule,
                                    const MountainPassConfig& config, bool keep_fields, std::uint64_t seed)
{
    if (schedule.empty()) {
        throw std::invalid_argument("empty p schedule");
    }
    const double pt = p_tilde(spec);
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!(schedule[i] > 1.0 && schedule[i] < pt)) {
            throw std::invalid_argument("schedule entry " + fmt_exact(schedule[i]) + " is outside (1, p_tilde = " +
                                        fmt_exact(pt) + ")");
        }
        if (i > 0 && !(schedule[i] < schedule[i - 1])) {
            throw std::invalid_argument("schedule must be strictly decreasing");
        }
    }

    ContinuationResult result;
    ContinuationReport& report = result.report;
    report.rho = measure_rho(spec, mesh, seed);
    const Field e = find_endpoint(spec, mesh, pt);
    const double area = mesh.total_area();
    SourceSpec plus = spec;
    plus.branch = Branch::plus;

    std::optional<Field> previous;
    double linf0 = 0.0;
    for (double p : schedule) {
        MountainPassConfig step_config = config;
        step_config.eps_schedule = eps_schedule_for(p, config.eps_schedule);
        if (step_config.rho <= 0.0) {
            step_config.rho = report.rho.rho;
        }
        MountainPassResult solved = [&]() -> MountainPassResult {
            try {
                return mountain_pass_solve(spec, mesh, p, e, step_config, previous);
            } catch (const MountainPassDiverged& err) {
                report.complete = false;
                report.failure = "p = " + fmt_exact(p) + ": " + err.what();
                return err.best();
            }
        }();
        if (!report.complete) {
            break;
        }

        const Field& w = solved.w;
        const double eps = step_config.eps_schedule.back();
        const FluxField z = recover_flux(w, p, eps);
        ContinuationStep row;
        row.p = p;
        row.value = solved.value;
        row.grad_p_integral = grad_p_integral(w, p);
        row.grad_1_integral = total_variation(w);
        row.linf = w.linf();
        row.flux_max = z.max_norm();
        row.pairing_defect = pairing_defect(w, z);
        row.boundary_sign_defect = boundary_sign_defect(w, z);
        row.inner_trace_defect = inner_trace_sign_defect(w, z);
        row.residual = solved.residual_norm;
        row.iterations = solved.iterations;
        row.eps_final = eps;
        row.holder_bound = std::pow(row.grad_p_integral, 1.0 / p) * std::pow(area, (p - 1.0) / p);
        row.flux_excess_fraction = z.area_fraction_above(1.05);
        row.first_ring_max = first_ring_max(w);

        if (report.steps.empty()) {
            linf0 = row.linf;
            report.C = solved.value;
            report.C1 = spec.C * spec.s0 * (1.0 + std::pow(spec.s0, spec.q)) * area;
            report.C_tilde = (report.C + report.C1) / (1.0 / p - 1.0 / spec.kappa);
        }
        for (double factor : {0.0, 0.5, 1.0, 2.0}) {
            row.tails.push_back({factor * linf0, truncation_tail(w, spec, factor * linf0)});
        }

        // Discrete form of testing the equation with G_k(w): the residual
        // paired with G_k(w) vanishes up to the solver tolerance.
        const Field gk = G_k_apply(w, 0.5 * row.linf);
        SourceSpec silent = plus;
        silent.amplitude = 0.0;
        const Eigen::VectorXd flux_part = gradient_Jp(w, {p, eps, Branch::plus}, silent);
        for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
            const int i = static_cast<int>(v);
            if (mesh.is_boundary(i)) {
                continue;
            }
            row.gk_flux_pairing += flux_part[i] * gk[i];
            row.gk_source_pairing += mesh.lumped_mass()[v] * f_eval(plus, w[i]) * gk[i];
        }
        row.gk_grad_p = grad_p_integral(gk, p);
        const FreeDofs dofs(mesh);
        const Eigen::VectorXd g = dofs.restrict(gk.values());
        const double gk_norm = std::sqrt(std::max(0.0, g.dot(stiffness_matrix(mesh, dofs) * g)));
        row.gk_tolerance = 10.0 * config.descent_tol * std::max(1.0, gk_norm);

        report.steps.push_back(row);
        if (keep_fields) {
            result.fields.push_back(w);
        }
        result.w = w;
        result.z = z;
        previous = w;
    }
    return result;
}

void write_report_csv(std::ostream& os, const ContinuationReport& report)
{
    os << "p,Ip_value,grad_p_integral,grad_1_integral,linf,flux_max,pairing_defect,boundary_sign_defect,residual,"
          "iters\n";
    for (const auto& r : report.steps) {
        os << fmt_exact(r.p) << ',' << fmt_exact(r.value) << ',' << fmt_exact(r.grad_p_integral) << ','
           << fmt_exact(r.grad_1_integral) << ',' << fmt_exact(r.linf) << ',' << fmt_exact(r.flux_max) << ','
           << fmt_exact(r.pairing_defect) << ',' << fmt_exact(r.boundary_sign_defect) << ','
           << fmt_exact(r.residual) << ',' << r.iterations << '\n';
    }
}

void write_flux(std::ostream& os, const FluxField& z)
{
    os << z.values().size() << '\n';
    for (const auto& v : z.values()) {
        os << fmt_exact(v.x()) << ' ' << fmt_exact(v.y()) << '\n';
    }
}

}  // namespace onelap
