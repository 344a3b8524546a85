#include "onelap/mountain_pass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "onelap/format.hpp"

namespace onelap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double point_segment_distance(const Vec2& x, const Vec2& a, const Vec2& b)
{
    const Vec2 d = b - a;
    const double t = std::clamp((x - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return (x - (a + t * d)).norm();
}

// Reduced (free-dof) view of I_p with its residual and the stiffness
// preconditioner.
class ReducedProblem {
public:
    ReducedProblem(const SourceSpec& spec, const Mesh& mesh, double p)
        : mesh_(mesh), dofs_(mesh), spec_(spec), p_(p)
    {
        spec_.branch = Branch::plus;
        stiffness_.compute(stiffness_matrix(mesh, dofs_));
    }

    const FreeDofs& dofs() const { return dofs_; }
    int size() const { return dofs_.size(); }
    double p() const { return p_; }

    Field field(const Eigen::VectorXd& x) const { return Field(mesh_, dofs_.extend(x), true); }

    double energy(const Eigen::VectorXd& x, double eps) const
    {
        return energy_Ip(field(x), {p_, eps, Branch::plus}, spec_);
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& x, double eps) const
    {
        return dofs_.restrict(gradient_Jp(field(x), {p_, eps, Branch::plus}, spec_));
    }

    Eigen::MatrixXd hessian(const Eigen::VectorXd& x, double eps) const
    {
        return hessian_Jp(field(x), {p_, eps, Branch::plus}, spec_, dofs_);
    }

    Eigen::VectorXd precondition(const Eigen::VectorXd& r) const { return stiffness_.solve(r); }

    double dual_norm(const Eigen::VectorXd& r) const { return std::sqrt(std::max(0.0, r.dot(precondition(r)))); }

    double energy_norm(const Eigen::VectorXd& x) const
    {
        return std::sqrt(std::max(0.0, x.dot(stiffness_.matrixL() * (stiffness_.matrixL().transpose() * x))));
    }

private:
    const Mesh& mesh_;
    FreeDofs dofs_;
    SourceSpec spec_;
    double p_;
    Eigen::LLT<Eigen::MatrixXd> stiffness_;
};

struct RayMax {
    double t = 0.0;
    double value = 0.0;
    bool interior = false;  // the maximum is not at an end of [lo, hi]
};

// max of t -> I(t v) over [lo, hi]: log-grid scan refined by golden section.
RayMax ray_maximum(const ReducedProblem& prob, const Eigen::VectorXd& v, double eps, double lo, double hi)
{
    const int samples = std::max(8, static_cast<int>(std::ceil(24.0 * std::log10(hi / lo))));
    std::vector<double> ts(static_cast<std::size_t>(samples) + 1);
    int best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= samples; ++i) {
        ts[i] = lo * std::pow(hi / lo, static_cast<double>(i) / samples);
        const double value = prob.energy(ts[i] * v, eps);
        if (value > best_value) {
            best_value = value;
            best = i;
        }
    }
    double a = ts[std::max(best - 1, 0)];
    double b = ts[std::min(best + 1, samples)];
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = prob.energy(c * v, eps);
    double fd = prob.energy(d * v, eps);
    for (int it = 0; it < 100 && (b - a) > 1e-13 * b; ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = prob.energy(c * v, eps);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = prob.energy(d * v, eps);
        }
    }
    RayMax out;
    out.t = fc >= fd ? c : d;
    out.value = std::max(fc, fd);
    if (best_value > out.value) {
        out.t = ts[best];
        out.value = best_value;
    }
    out.interior = best > 0 && best < samples;
    return out;
}

// Ray maximum near t = 1, widening the bracket when the maximum sits on
// its edge.
RayMax ray_maximum_near_one(const ReducedProblem& prob, const Eigen::VectorXd& v, double eps)
{
    const RayMax local = ray_maximum(prob, v, eps, 0.25, 4.0);
    return local.interior ? local : ray_maximum(prob, v, eps, 1e-6, 1e6);
}

// Sampled path 0 -> x -> t_neg x -> e through the ray maximizer x. The ray
// part is spread uniformly in arclength of the graph (x, I(x)) measured
// with the stiffness norm; the remaining points reach e geometrically.
struct SampledPath {
    double max = 0.0;
    double t_star = 0.0;  // path parameter of the ray maximizer
};

SampledPath sample_path(const ReducedProblem& prob, const Eigen::VectorXd& x, double x_value,
                        const Eigen::VectorXd& e, int points, double eps)
{
    double t_neg = 2.0;
    for (int i = 0; i < 200 && prob.energy(t_neg * x, eps) >= 0.0; ++i) {
        t_neg *= 1.5;
    }
    const int tail = std::max(1, points / 5);
    const int core = points - 1 - tail;

    constexpr int fine = 200;
    const double x_norm = prob.energy_norm(x);
    std::vector<double> arc(fine + 1, 0.0);
    std::vector<double> energies(fine + 1, 0.0);
    energies[0] = prob.energy(Eigen::VectorXd::Zero(x.size()), eps);
    for (int i = 1; i <= fine; ++i) {
        energies[i] = prob.energy((t_neg * i / fine) * x, eps);
        const double dx = x_norm * t_neg / fine;
        const double dE = energies[i] - energies[i - 1];
        arc[i] = arc[i - 1] + std::sqrt(dx * dx + dE * dE);
    }
    // arclength position of the maximizer (t = 1) by linear interpolation
    const double u = fine / t_neg;
    const int j = std::min(fine - 1, static_cast<int>(u));
    const double arc_star = arc[j] + (u - j) * (arc[j + 1] - arc[j]);

    SampledPath out;
    out.max = x_value;
    out.t_star = arc_star / arc[fine] * core / (points - 1);
    int seg = 0;
    for (int i = 1; i <= core; ++i) {
        const double target = arc[fine] * i / core;
        while (seg < fine - 1 && arc[seg + 1] < target) {
            ++seg;
        }
        const double len = arc[seg + 1] - arc[seg];
        const double lambda = len > 0.0 ? (target - arc[seg]) / len : 0.0;
        const double t = t_neg * (seg + lambda) / fine;
        out.max = std::max(out.max, prob.energy(t * x, eps));
    }
    const Eigen::VectorXd start = t_neg * x;
    for (int i = 1; i <= tail; ++i) {
        const double tau = std::pow(2.0, i - tail);
        out.max = std::max(out.max, prob.energy(start + tau * (e - start), eps));
    }
    return out;
}

struct NewtonOutcome {
    bool converged = false;
    double residual = 0.0;
    int steps = 0;
};

NewtonOutcome newton_polish(const ReducedProblem& prob, Eigen::VectorXd& x, double eps, double tol, int budget,
                            std::vector<IterationRecord>& log, int& iter_counter, double t_star)
{
    NewtonOutcome out;
    Eigen::VectorXd r = prob.residual(x, eps);
    double merit = prob.dual_norm(r);
    while (out.steps < budget) {
        if (merit <= tol) {
            out.converged = true;
            break;
        }
        const Eigen::MatrixXd H = prob.hessian(x, eps);
        const Eigen::VectorXd delta = -H.partialPivLu().solve(r);
        if (!delta.allFinite()) {
            break;
        }
        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd trial;
        Eigen::VectorXd trial_r;
        double trial_merit = 0.0;
        for (int k = 0; k < 50; ++k) {
            trial = x + step * delta;
            trial_r = prob.residual(trial, eps);
            trial_merit = prob.dual_norm(trial_r);
            if (std::isfinite(trial_merit) && trial_merit <= (1.0 - 1e-4 * step) * merit) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        ++out.steps;
        ++iter_counter;
        if (!accepted) {
            break;
        }
        x = trial;
        r = trial_r;
        merit = trial_merit;
        log.push_back({iter_counter, t_star, prob.energy(x, eps), merit, step, eps, kNaN});
    }
    out.residual = merit;
    out.converged = out.converged || merit <= tol;
    return out;
}

}  // namespace

std::string MountainPassConfig::validate() const
{
    if (path_points < 3) {
        return "path_points must be at least 3";
    }
    if (!(descent_tol > 0.0)) {
        return "descent_tol must be positive";
    }
    if (!(path_tol > 0.0)) {
        return "path_tol must be positive";
    }
    if (max_iters < 1) {
        return "max_iters must be positive";
    }
    if (eps_schedule.empty()) {
        return "eps_schedule must not be empty";
    }
    for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
        if (eps_schedule[i] < 0.0) {
            return "eps_schedule entries must be nonnegative";
        }
        if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1])) {
            return "eps_schedule must be strictly decreasing";
        }
    }
    if (!(step_rule.shrink > 0.0 && step_rule.shrink < 1.0) || !(step_rule.initial_step > 0.0)) {
        return "invalid step rule";
    }
    return {};
}

Field distance_bump(const Mesh& mesh)
{
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
        if (mesh.is_boundary(static_cast<int>(i))) {
            continue;
        }
        double d = std::numeric_limits<double>::infinity();
        for (const auto& e : mesh.boundary_edges()) {
            d = std::min(d, point_segment_distance(mesh.vertices()[i], mesh.vertices()[e.vertices[0]],
                                                   mesh.vertices()[e.vertices[1]]));
        }
        v[static_cast<Eigen::Index>(i)] = d;
    }
    const double top = v.maxCoeff();
    if (top > 0.0) {
        v /= top;
    }
    return Field(mesh, v, true);
}

Field find_endpoint(const SourceSpec& spec, const Mesh& mesh, double p_tilde)
{
    const Field bump = distance_bump(mesh);
    const EnergyParams params{p_tilde, 0.0, Branch::plus};
    for (double T = 1.0; T <= std::ldexp(1.0, 40); T *= 2.0) {
        Field e(mesh, T * bump.values(), true);
        if (energy_Ip(e, params, spec) < 0.0) {
            return e;
        }
    }
    throw NoMountainPassGeometry("no T <= 2^40 gives I(T phi) < 0; the source is too weak for mountain-pass geometry");
}

RhoEstimate measure_rho(const SourceSpec& spec, const Mesh& mesh, std::uint64_t seed)
{
    RhoEstimate est;
    est.K1 = hypothesis_check(spec).K1;
    const double r = 1.0 + spec.alpha;
    const auto& mass = mesh.lumped_mass();
    auto ratio = [&](const Eigen::VectorXd& v) {
        const Field u(mesh, v, true);
        const double norm = bv_norm(u);
        if (!(norm > 0.0)) {
            return 0.0;
        }
        double integral = 0.0;
        for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
            integral += mass[i] * std::pow(std::abs(v[static_cast<Eigen::Index>(i)]), r);
        }
        return integral / std::pow(norm, r);
    };

    const Field bump = distance_bump(mesh);
    const Eigen::VectorXd& phi = bump.values();
    std::vector<double> levels(phi.data(), phi.data() + phi.size());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (double level : levels) {
        if (!(level > 0.0)) {
            continue;
        }
        const Eigen::VectorXd indicator = (phi.array() >= level).cast<double>().matrix();
        est.embedding = std::max(est.embedding, ratio(indicator));
    }
    for (double beta : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        est.embedding = std::max(est.embedding, ratio(phi.array().pow(beta).matrix()));
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 64; ++trial) {
        Eigen::VectorXd v = phi;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            v[i] = v[i] > 0.0 ? dist(rng) : 0.0;
        }
        est.embedding = std::max(est.embedding, ratio(v));
    }
    est.K2 = est.K1 / r * est.embedding;
    est.rho = est.K2 > 0.0 ? std::pow(1.0 / (2.0 * est.K2), 1.0 / spec.alpha) : std::numeric_limits<double>::infinity();
    return est;
}

LocalMinReport local_min_check(const SourceSpec& spec, const Mesh& mesh, const EnergyParams& params, double rho,
                               int probes_per_radius, std::uint64_t seed)
{
    LocalMinReport report;
    report.radii = {rho / 4.0, rho / 2.0, rho};
    const double base = energy_Ip(Field(mesh), params, spec);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const Field bump = distance_bump(mesh);
    for (double radius : report.radii) {
        std::vector<double> probes;
        for (int k = 0; k < probes_per_radius; ++k) {
            Eigen::VectorXd v = bump.values();
            if (k > 0) {
                for (Eigen::Index i = 0; i < v.size(); ++i) {
                    // half the probes nonnegative, half of mixed sign
                    const double x = dist(rng);
                    v[i] = v[i] > 0.0 ? (k % 2 == 0 ? std::abs(x) : x) : 0.0;
                }
            }
            const double norm = bv_norm(Field(mesh, v, true));
            const Field u(mesh, (radius / norm) * v, true);
            const double delta = energy_Ip(u, params, spec) - base;
            probes.push_back(delta);
            report.is_local_min = report.is_local_min && delta >= 0.0;
        }
        report.probe_energies.push_back(std::move(probes));
    }
    return report;
}

MountainPassResult mountain_pass_solve(const SourceSpec& spec, const Mesh& mesh, double p, const Field& e,
                                       const MountainPassConfig& config, const std::optional<Field>& warm_start)
{
    if (const auto problem = config.validate(); !problem.empty()) {
        throw std::invalid_argument(problem);
    }
    const ReducedProblem prob(spec, mesh, p);
    const Eigen::VectorXd xe = prob.dofs().restrict(e.values());
    double eps = config.eps_schedule.front();
    if (!(prob.energy(xe, 0.0) < 0.0)) {
        throw std::invalid_argument("endpoint e must satisfy I_p(e) < 0");
    }

    MountainPassResult result{Field(mesh), 0.0, 0.0, 0, 0, config.eps_schedule.back(), false, true, {}};
    auto& log = result.log;
    int iter = 0;

    // Path phase. The path runs along the ray through the current point x
    // and then to e; x is kept at the ray maximum, so the path maximum is
    // I(x) and a preconditioned descent step from x followed by re-projection
    // onto the ray maximum lowers it.
    RayMax start = warm_start ? ray_maximum(prob, prob.dofs().restrict(warm_start->values()), eps, 1e-6, 1e6)
                              : ray_maximum(prob, xe, eps, 1e-12, 1.0);
    Eigen::VectorXd x = start.t * (warm_start ? prob.dofs().restrict(warm_start->values()) : xe);
    double path_max = start.value;
    double t_star = sample_path(prob, x, path_max, xe, config.path_points, eps).t_star;
    double step = config.step_rule.initial_step;
    double residual = std::numeric_limits<double>::infinity();
    while (iter < config.max_iters) {
        const Eigen::VectorXd g = prob.residual(x, eps);
        const Eigen::VectorXd d = prob.precondition(g);
        const double slope = std::max(0.0, g.dot(d));
        residual = std::sqrt(slope);
        if (residual <= config.path_tol) {
            break;
        }
        // never move further than the size of x itself
        const double cap = prob.energy_norm(x) / std::max(residual, 1e-300);
        double s = std::min(2.0 * step, cap);
        bool accepted = false;
        RayMax trial_max;
        Eigen::VectorXd trial;
        for (int b = 0; b < config.step_rule.max_backtracks; ++b) {
            trial = x - s * d;
            trial_max = ray_maximum_near_one(prob, trial, eps);
            if (trial_max.value <= path_max - config.step_rule.sufficient_decrease * s * slope) {
                accepted = true;
                break;
            }
            s *= config.step_rule.shrink;
        }
        ++iter;
        if (!accepted) {
            break;
        }
        step = s;
        x = trial_max.t * trial;
        path_max = trial_max.value;
        const SampledPath sampled = sample_path(prob, x, path_max, xe, config.path_points, eps);
        t_star = sampled.t_star;
        log.push_back({iter, t_star, path_max, residual, s, eps, sampled.max});
    }
    result.path_iterations = iter;

    // Polishing: damped Newton along the eps schedule, inserting geometric
    // midpoints when a level fails to converge from the previous one.
    std::vector<double> levels(config.eps_schedule.begin(), config.eps_schedule.end());
    bool ok = true;
    double current_eps = levels.front();
    std::size_t level = 0;
    int refinements = 0;
    while (level < levels.size()) {
        const double target = levels[level];
        const bool last = level + 1 == levels.size();
        const double tol = last ? config.descent_tol : std::max(config.descent_tol, 1e-6);
        Eigen::VectorXd attempt = x;
        const int budget = std::max(0, config.max_iters - iter);
        const auto outcome = newton_polish(prob, attempt, target, tol, std::min(budget, 200), log, iter, t_star);
        if (outcome.converged) {
            x = attempt;
            current_eps = target;
            residual = outcome.residual;
            ++level;
            continue;
        }
        if (iter >= config.max_iters || refinements > 12 || target == current_eps) {
            ok = false;
            residual = outcome.residual;
            eps = target;
            break;
        }
        const double mid = current_eps > 0.0 && target > 0.0 ? std::sqrt(current_eps * target) : 0.5 * (current_eps + target);
        levels.insert(levels.begin() + static_cast<std::ptrdiff_t>(level), mid);
        ++refinements;
    }

    result.w = prob.field(x);
    result.value = prob.energy(x, 0.0);
    result.residual_norm = residual;
    result.iterations = iter;
    const double top = result.w.max_value();
    result.nonnegative = result.w.min_value() >= -1e-8 * std::max(top, 0.0);
    result.suspicious = !(result.value > 0.0) || (config.rho > 0.0 && result.value < 0.5 * config.rho);
    if (!ok) {
        throw MountainPassDiverged("mountain pass did not converge (residual " + fmt_exact(residual) + ")",
                                   std::move(result));
    }
    return result;
}

void write_iteration_log(std::ostream& os, const std::vector<IterationRecord>& log)
{
    os << "iter,t_star,Ip,residual_norm,step_size,eps\n";
    for (const auto& r : log) {
        os << r.iter << ',' << fmt_exact(r.t_star) << ',' << fmt_exact(r.energy) << ',' << fmt_exact(r.residual_norm)
           << ',' << fmt_exact(r.step_size) << ',' << fmt_exact(r.eps) << '\n';
    }
}

}  // namespace onelap
