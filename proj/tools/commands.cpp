#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "onelap/certify.hpp"
#include "onelap/continuation.hpp"
#include "onelap/format.hpp"
#include "onelap/radial_shooting.hpp"

namespace onelap::app {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path prepare_out(const RunConfig& c)
{
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    if (ec) {
        throw IoError("cannot create " + c.out_dir + ": " + ec.message());
    }
    return c.out_dir;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot write " + path.string());
    }
    return os;
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer)
{
    auto os = open_out(path);
    writer(os);
    os.flush();
    if (!os) {
        throw IoError("write failed for " + path.string());
    }
}

void write_json(const fs::path& path, const ordered_json& j)
{
    write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open " + path);
    }
    return is;
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

ordered_json rho_json(const RhoEstimate& r)
{
    return {{"K1", r.K1}, {"embedding", r.embedding}, {"K2", r.K2}, {"rho", r.rho}};
}

ordered_json result_json(const MountainPassResult& r)
{
    return {{"value", r.value},
            {"residual_norm", r.residual_norm},
            {"iterations", r.iterations},
            {"path_iterations", r.path_iterations},
            {"eps_final", r.eps_final},
            {"suspicious", r.suspicious},
            {"nonnegative", r.nonnegative},
            {"linf", r.w.linf()}};
}

}  // namespace

int cmd_mesh(const RunConfig& c, std::ostream& log)
{
    validate_common(c);
    const Mesh mesh = build_mesh(c);
    const fs::path out = prepare_out(c);
    write_file(out / "mesh.txt", [&](std::ostream& os) { write_mesh(os, mesh); });

    const MeshQuality q = mesh_quality(mesh);
    ordered_json j;
    j["command"] = "mesh";
    j["config"] = to_json(c);
    j["vertices"] = mesh.num_vertices();
    j["triangles"] = mesh.num_triangles();
    j["boundary_edges"] = mesh.boundary_edges().size();
    j["edges"] = mesh.num_edges();
    j["h"] = q.h;
    j["min_angle_deg"] = q.min_angle_deg;
    j["total_area"] = q.total_area;
    j["degenerate_triangles"] = q.degenerate_triangles;
    j["violations"] = validate_mesh(mesh);
    write_json(out / "mesh_report.json", j);
    log << "mesh: V=" << mesh.num_vertices() << " T=" << mesh.num_triangles()
        << " B=" << mesh.boundary_edges().size() << '\n';
    return ok;
}

int cmd_solve(const RunConfig& c, std::ostream& log)
{
    validate_solve(c);
    const Mesh mesh = build_mesh(c);
    const fs::path out = prepare_out(c);
    write_file(out / "mesh.txt", [&](std::ostream& os) { write_mesh(os, mesh); });

    ordered_json j;
    j["command"] = "solve";
    j["config"] = to_json(c);

    MountainPassConfig mp = c.mountain_pass;
    if (!c.benchmark) {
        const RhoEstimate rho = measure_rho(c.source, mesh, c.seed);
        j["rho"] = rho_json(rho);
        if (mp.rho == 0.0) {
            mp.rho = rho.rho;
        }
    }

    std::optional<MountainPassResult> result;
    int code = ok;
    try {
        const Field e = find_endpoint(c.source, mesh, c.benchmark ? c.p : p_tilde(c.source));
        result = mountain_pass_solve(c.source, mesh, c.p, e, mp);
        j["status"] = "converged";
    } catch (const NoMountainPassGeometry& err) {
        j["status"] = "no_geometry";
        j["message"] = err.what();
        write_json(out / "summary.json", j);
        log << "solve: " << err.what() << '\n';
        return diverged;
    } catch (const MountainPassDiverged& err) {
        result = err.best();
        j["status"] = "diverged";
        j["message"] = err.what();
        code = diverged;
    }

    const MountainPassResult& r = *result;
    j["result"] = result_json(r);
    j["result"]["grad_p_integral"] = grad_p_integral(r.w, c.p);

    if (c.benchmark && code == ok) {
        const auto oracle = lane_emden_shooting(c.source.q, 2, c.domain.radius);
        const int center = center_vertex(mesh);
        const double u0 = r.w[center];
        const double energy = r.value - (c.p - 1.0) / c.p * mesh.total_area();
        const double u0_err = std::abs(u0 / oracle.u0 - 1.0);
        const double energy_err = std::abs(energy / oracle.energy - 1.0);
        j["benchmark"] = {{"u0", u0},
                          {"u0_oracle", oracle.u0},
                          {"u0_rel_error", u0_err},
                          {"u0_within_1pct", u0_err <= 0.01},
                          {"energy", energy},
                          {"energy_oracle", oracle.energy},
                          {"energy_rel_error", energy_err},
                          {"energy_within_2pct", energy_err <= 0.02}};
    }

    write_file(out / "iterations.csv", [&](std::ostream& os) { write_iteration_log(os, r.log); });
    write_file(out / "w.txt", [&](std::ostream& os) { write_field(os, r.w); });
    write_json(out / "summary.json", j);
    log << "solve: " << j["status"].get<std::string>() << " value=" << fmt_exact(r.value)
        << " residual=" << fmt_exact(r.residual_norm) << " iters=" << r.iterations << '\n';
    return code;
}

int cmd_continue(const RunConfig& c, std::ostream& log)
{
    validate_continue(c);
    const Mesh mesh = build_mesh(c);
    const std::vector<double> schedule = c.schedule.resolve();
    const fs::path out = prepare_out(c);
    write_file(out / "mesh.txt", [&](std::ostream& os) { write_mesh(os, mesh); });

    ContinuationResult result;
    try {
        result = run_continuation(c.source, mesh, schedule, c.mountain_pass, c.dump_fields, c.seed);
    } catch (const NoMountainPassGeometry& err) {
        log << "continue: " << err.what() << '\n';
        return diverged;
    }
    const ContinuationReport& rep = result.report;

    write_file(out / "report.csv", [&](std::ostream& os) { write_report_csv(os, rep); });

    ordered_json j;
    j["command"] = "continue";
    j["config"] = to_json(c);
    j["schedule"] = schedule;
    j["complete"] = rep.complete;
    j["failure"] = rep.failure;
    j["rho"] = rho_json(rep.rho);
    j["uniform_bound"] = {{"C", rep.C}, {"C1", rep.C1}, {"C_tilde", rep.C_tilde}};
    // Surrogate thresholds for the limit conditions; artifact choices, not
    // properties of the continuous problem.
    j["surrogate_thresholds"] = {{"defect_ratio", 0.5}, {"flux_level", 1.05}, {"flux_area_fraction", 0.05}};
    ordered_json steps = ordered_json::array();
    for (const auto& s : rep.steps) {
        ordered_json tails = ordered_json::array();
        for (const auto& t : s.tails) {
            tails.push_back({{"k", t.k}, {"tail", t.tail}});
        }
        steps.push_back({{"p", s.p},
                         {"Ip_value", s.value},
                         {"grad_p_integral", s.grad_p_integral},
                         {"grad_1_integral", s.grad_1_integral},
                         {"holder_bound", s.holder_bound},
                         {"linf", s.linf},
                         {"first_ring_max", s.first_ring_max},
                         {"flux_max", s.flux_max},
                         {"flux_excess_fraction", s.flux_excess_fraction},
                         {"pairing_defect", s.pairing_defect},
                         {"boundary_sign_defect", s.boundary_sign_defect},
                         {"inner_trace_defect", s.inner_trace_defect},
                         {"residual", s.residual},
                         {"iters", s.iterations},
                         {"eps_final", s.eps_final},
                         {"tails", tails},
                         {"gk",
                          {{"flux_pairing", s.gk_flux_pairing},
                           {"source_pairing", s.gk_source_pairing},
                           {"grad_p", s.gk_grad_p},
                           {"tolerance", s.gk_tolerance}}}});
    }
    j["steps"] = steps;
    write_json(out / "report.json", j);

    if (result.w) {
        write_file(out / "w_final.txt", [&](std::ostream& os) { write_field(os, *result.w); });
    }
    if (result.z) {
        write_file(out / "z_final.txt", [&](std::ostream& os) { write_flux(os, *result.z); });
    }
    for (std::size_t i = 0; i < result.fields.size(); ++i) {
        write_file(out / ("w_step" + std::to_string(i) + ".txt"),
                   [&](std::ostream& os) { write_field(os, result.fields[i]); });
    }

    log << "continue: " << rep.steps.size() << " of " << schedule.size() << " steps";
    if (!rep.complete) {
        log << " (" << rep.failure << ")";
    }
    log << '\n';
    return rep.complete ? ok : diverged;
}

namespace {

ordered_json certify_field(const RunConfig& c)
{
    if (c.certify.mesh_path.empty() || c.certify.field_path.empty()) {
        throw ConfigError("certify kind 'field' needs mesh_path and field_path");
    }
    if (!(c.certify.p > 1.0)) {
        throw ConfigError("certify kind 'field' needs the exponent p > 1");
    }
    if (!(c.certify.eps >= 0.0)) {
        throw ConfigError("certify eps must be nonnegative");
    }
    auto mesh_in = open_in(c.certify.mesh_path);
    std::optional<Mesh> mesh;
    try {
        mesh.emplace(read_mesh(mesh_in, c.domain));
    } catch (const MeshError& e) {
        throw IoError(e.what());
    }
    auto field_in = open_in(c.certify.field_path);
    std::optional<Field> w;
    try {
        w.emplace(read_field(field_in, *mesh, false));
    } catch (const std::runtime_error& e) {
        throw IoError(e.what());
    }
    const FluxField z = recover_flux(*w, c.certify.p, c.certify.eps);
    SourceSpec spec = c.source;
    spec.branch = Branch::plus;

    ordered_json j;
    j["pohozaev"] = ordered_json::parse(to_json(pohozaev_eval(*w, z, spec)));
    // The identity assumes a flux that is C^1 up to the boundary, which a
    // piecewise constant one is not.
    j["pohozaev_indicative_only"] = true;
    j["weak_residual"] = weak_residual(*w, z, spec);
    j["pairing_defect"] = pairing_defect(*w, z);
    j["boundary_sign_defect"] = boundary_sign_defect(*w, z);
    j["inner_trace_defect"] = inner_trace_sign_defect(*w, z);
    j["flux_max"] = z.max_norm();
    j["flux_excess_fraction"] = z.area_fraction_above(1.05);
    return j;
}

ordered_json certify_radial(const RunConfig& c)
{
    RadialKind kind;
    try {
        kind = parse_radial_kind(c.certify.kind);
    } catch (const std::exception&) {
        throw ConfigError("unknown certify kind '" + c.certify.kind + "'");
    }
    std::optional<RadialSolution> sol;
    try {
        sol.emplace(radial_solution(kind, c.certify.N, c.certify.R, c.certify.q));
    } catch (const ConstraintViolation& e) {
        throw ConfigError(std::string("constraint violated: ") + e.what());
    }

    ordered_json j;
    j["pohozaev"] = ordered_json::parse(to_json(pohozaev_eval(*sol)));
    j["ball_inequality_slack"] = ball_inequality_slack(*sol);
    j["zero_trace_ratio"] = zero_trace_ratio(c.certify.q, c.certify.N, c.certify.R);

    if (c.certify.N != 2) {
        j["weak_residual"] = nullptr;
        return j;
    }
    ordered_json levels = ordered_json::array();
    WeakResidualOptions options;
    bool decreasing = true;
    double previous = 0.0;
    for (std::size_t i = 0; i < c.certify.refinements.size(); ++i) {
        const int ref = c.certify.refinements[i];
        if (ref < 0) {
            throw ConfigError("certify refinements must be nonnegative");
        }
        const Mesh mesh = build_disk_mesh(c.certify.R, ref);
        // The flux is singular at the origin for the supercritical examples;
        // hats near it are excluded with a radius fixed by the coarsest mesh.
        if (i == 0 && kind != RadialKind::constant) {
            options.exclude_radius = mesh.mesh_size();
        }
        const double r = weak_residual(*sol, mesh, options);
        if (i > 0 && r > 1.1 * previous) {
            decreasing = false;
        }
        previous = r;

        ordered_json level{{"refinement", ref}, {"h", mesh.mesh_size()}, {"weak_residual", r}};
        // Sampled Pohozaev on the inscribed polygon; the supercritical
        // profiles blow up at the center vertex, so only the bounded one.
        if (kind == RadialKind::constant) {
            Eigen::VectorXd u(static_cast<Eigen::Index>(mesh.num_vertices()));
            for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
                u[static_cast<Eigen::Index>(v)] = sol->u(mesh.vertices()[v]);
            }
            std::vector<Vec2> z;
            z.reserve(mesh.num_triangles());
            for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
                z.push_back(triangle_flux_integral(*sol, mesh, t) / mesh.area(t));
            }
            const PohozaevReport poly = pohozaev_eval(Field(mesh, u, false), FluxField(mesh, std::move(z)), sol->source());
            level["polygon_pohozaev_residual"] = poly.residual;
        }
        levels.push_back(std::move(level));
    }
    j["exclude_radius"] = options.exclude_radius;
    j["weak_residual"] = levels;
    j["weak_residual_decreasing"] = decreasing;
    return j;
}

}  // namespace

int cmd_certify(const RunConfig& c, std::ostream& log)
{
    ordered_json body = c.certify.kind == "field" ? certify_field(c) : certify_radial(c);
    ordered_json j;
    j["command"] = "certify";
    j["config"] = to_json(c);
    for (auto& [key, value] : body.items()) {
        j[key] = value;
    }
    const fs::path out = prepare_out(c);
    write_json(out / "certify.json", j);
    log << "certify: " << c.certify.kind << " pohozaev residual=" << fmt_exact(j["pohozaev"]["residual"].get<double>())
        << '\n';
    return ok;
}

int run_command(const std::string& name, const RunConfig& config, std::ostream& log, std::ostream& err)
{
    try {
        if (name == "mesh") {
            return cmd_mesh(config, log);
        }
        if (name == "solve") {
            return cmd_solve(config, log);
        }
        if (name == "continue") {
            return cmd_continue(config, log);
        }
        if (name == "certify") {
            return cmd_certify(config, log);
        }
        err << "unknown command " << name << '\n';
        return config_error;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return io_error;
    }
}

}  // namespace onelap::app
