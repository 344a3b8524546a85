#include "run_config.hpp"

#include <fstream>
#include <set>

#include "onelap/continuation.hpp"

namespace onelap::app {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
void read_into(const json& j, const char* key, T& out)
{
    if (!j.contains(key)) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) {
        throw ConfigError("'" + where + "' must be an object");
    }
    for (const auto& item : j.items()) {
        if (!allowed.contains(item.key())) {
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

void merge_domain(RunConfig& c, const json& j)
{
    reject_unknown(j, {"kind", "radius", "width", "height", "nx", "ny"}, "domain");
    std::string kind = c.domain.kind == DomainKind::disk ? "disk" : "rect";
    read_into(j, "kind", kind);
    if (kind == "disk") {
        c.domain.kind = DomainKind::disk;
    } else if (kind == "rect") {
        c.domain.kind = DomainKind::rect;
    } else {
        throw ConfigError("domain kind must be disk or rect, got '" + kind + "'");
    }
    read_into(j, "radius", c.domain.radius);
    read_into(j, "width", c.domain.width);
    read_into(j, "height", c.domain.height);
    read_into(j, "nx", c.nx);
    read_into(j, "ny", c.ny);
}

void merge_source(RunConfig& c, const json& j)
{
    reject_unknown(j, {"kind", "q", "alpha", "kappa", "s0", "C", "N", "shift"}, "source");
    std::string kind = c.source.kind_name();
    read_into(j, "kind", kind);
    try {
        c.source.kind = parse_source_kind(kind);
    } catch (const std::exception&) {
        throw ConfigError("unknown source kind '" + kind + "'");
    }
    read_into(j, "q", c.source.q);
    read_into(j, "alpha", c.source.alpha);
    read_into(j, "kappa", c.source.kappa);
    read_into(j, "s0", c.source.s0);
    read_into(j, "C", c.source.C);
    read_into(j, "N", c.source.N);
    read_into(j, "shift", c.source.shift);
}

void merge_mountain_pass(MountainPassConfig& m, const json& j)
{
    reject_unknown(j, {"path_points", "descent_tol", "path_tol", "max_iters", "eps_schedule", "rho", "step_rule"},
                   "mountain_pass");
    read_into(j, "path_points", m.path_points);
    read_into(j, "descent_tol", m.descent_tol);
    read_into(j, "path_tol", m.path_tol);
    read_into(j, "max_iters", m.max_iters);
    read_into(j, "eps_schedule", m.eps_schedule);
    read_into(j, "rho", m.rho);
    if (j.contains("step_rule")) {
        const json& s = j.at("step_rule");
        reject_unknown(s, {"initial_step", "shrink", "sufficient_decrease", "max_backtracks"}, "step_rule");
        read_into(s, "initial_step", m.step_rule.initial_step);
        read_into(s, "shrink", m.step_rule.shrink);
        read_into(s, "sufficient_decrease", m.step_rule.sufficient_decrease);
        read_into(s, "max_backtracks", m.step_rule.max_backtracks);
    }
}

}  // namespace

std::vector<double> ScheduleConfig::resolve() const
{
    if (!values.empty()) {
        return values;
    }
    if (p_last > 0.0) {
        return linear_schedule(p0, p_last, steps);
    }
    return geometric_schedule(p0, ratio, steps);
}

SourceSpec RunConfig::default_source()
{
    SourceSpec s = SourceSpec::power(0.5);
    s.kappa = 1.4;
    return s;
}

RunConfig RunConfig::benchmark_defaults()
{
    RunConfig c;
    c.benchmark = true;
    c.p = 2.0;
    c.refinement = 3;
    c.source = SourceSpec::power(3.0);
    return c;
}

RunConfig merge_json(RunConfig c, const json& j)
{
    reject_unknown(j,
                   {"domain", "refinement", "source", "p", "schedule", "mountain_pass", "certify", "out_dir",
                    "dump_fields", "benchmark", "seed"},
                   "config");
    if (j.contains("domain")) {
        merge_domain(c, j.at("domain"));
    }
    read_into(j, "refinement", c.refinement);
    if (j.contains("source")) {
        merge_source(c, j.at("source"));
    }
    read_into(j, "p", c.p);
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        reject_unknown(s, {"p0", "ratio", "steps", "p_last", "values"}, "schedule");
        read_into(s, "p0", c.schedule.p0);
        read_into(s, "ratio", c.schedule.ratio);
        read_into(s, "steps", c.schedule.steps);
        read_into(s, "p_last", c.schedule.p_last);
        read_into(s, "values", c.schedule.values);
    }
    if (j.contains("mountain_pass")) {
        merge_mountain_pass(c.mountain_pass, j.at("mountain_pass"));
    }
    if (j.contains("certify")) {
        const json& s = j.at("certify");
        reject_unknown(s, {"kind", "N", "R", "q", "refinements", "mesh_path", "field_path", "p", "eps"}, "certify");
        read_into(s, "kind", c.certify.kind);
        read_into(s, "N", c.certify.N);
        read_into(s, "R", c.certify.R);
        read_into(s, "q", c.certify.q);
        read_into(s, "refinements", c.certify.refinements);
        read_into(s, "mesh_path", c.certify.mesh_path);
        read_into(s, "field_path", c.certify.field_path);
        read_into(s, "p", c.certify.p);
        read_into(s, "eps", c.certify.eps);
    }
    read_into(j, "out_dir", c.out_dir);
    read_into(j, "dump_fields", c.dump_fields);
    read_into(j, "benchmark", c.benchmark);
    read_into(j, "seed", c.seed);
    return c;
}

ordered_json to_json(const RunConfig& c)
{
    ordered_json j;
    ordered_json domain;
    if (c.domain.kind == DomainKind::disk) {
        domain["kind"] = "disk";
        domain["radius"] = c.domain.radius;
    } else {
        domain["kind"] = "rect";
        domain["width"] = c.domain.width;
        domain["height"] = c.domain.height;
        domain["nx"] = c.nx;
        domain["ny"] = c.ny;
    }
    j["domain"] = domain;
    j["refinement"] = c.refinement;
    j["source"] = {{"kind", c.source.kind_name()}, {"q", c.source.q},         {"alpha", c.source.alpha},
                   {"kappa", c.source.kappa},      {"s0", c.source.s0},       {"C", c.source.C},
                   {"N", c.source.N},              {"shift", c.source.shift}};
    j["p"] = c.p;
    j["schedule"] = {{"p0", c.schedule.p0},
                     {"ratio", c.schedule.ratio},
                     {"steps", c.schedule.steps},
                     {"p_last", c.schedule.p_last},
                     {"values", c.schedule.values}};
    const auto& m = c.mountain_pass;
    j["mountain_pass"] = {{"path_points", m.path_points},
                          {"descent_tol", m.descent_tol},
                          {"path_tol", m.path_tol},
                          {"max_iters", m.max_iters},
                          {"eps_schedule", m.eps_schedule},
                          {"rho", m.rho},
                          {"step_rule",
                           {{"initial_step", m.step_rule.initial_step},
                            {"shrink", m.step_rule.shrink},
                            {"sufficient_decrease", m.step_rule.sufficient_decrease},
                            {"max_backtracks", m.step_rule.max_backtracks}}}};
    j["certify"] = {{"kind", c.certify.kind},          {"N", c.certify.N},
                    {"R", c.certify.R},                {"q", c.certify.q},
                    {"refinements", c.certify.refinements}, {"mesh_path", c.certify.mesh_path},
                    {"field_path", c.certify.field_path},   {"p", c.certify.p},
                    {"eps", c.certify.eps}};
    j["out_dir"] = c.out_dir;
    j["dump_fields"] = c.dump_fields;
    j["benchmark"] = c.benchmark;
    j["seed"] = c.seed;
    return j;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed config " + path.string() + ": " + e.what());
    }
    return merge_json(std::move(base), j);
}

Mesh build_mesh(const RunConfig& c)
{
    try {
        if (c.domain.kind == DomainKind::disk) {
            return build_disk_mesh(c.domain.radius, c.refinement);
        }
        return build_rect_mesh(c.domain.width, c.domain.height, c.nx, c.ny);
    } catch (const MeshError& e) {
        throw ConfigError(e.what());
    }
}

void validate_common(const RunConfig& c)
{
    if (c.refinement < 0) {
        throw ConfigError("refinement must be nonnegative");
    }
    if (c.domain.kind == DomainKind::disk && !(c.domain.radius > 0.0)) {
        throw ConfigError("disk radius must be positive");
    }
    if (c.domain.kind == DomainKind::rect) {
        if (!(c.domain.width > 0.0) || !(c.domain.height > 0.0)) {
            throw ConfigError("rectangle sides must be positive");
        }
        if (c.nx < 1 || c.ny < 1) {
            throw ConfigError("rectangle subdivisions must be at least 1");
        }
    }
    if (c.source.N != 2) {
        throw ConfigError("meshes are planar; source N must be 2");
    }
    if (const std::string err = c.mountain_pass.validate(); !err.empty()) {
        throw ConfigError("mountain_pass: " + err);
    }
}

namespace {

void check_hypotheses(const SourceSpec& spec)
{
    const HypothesisReport h = hypothesis_check(spec);
    if (!h.positive_branch()) {
        throw ConfigError("source rejected: " + h.first_failure(true));
    }
}

void check_exponent(double p, double pt)
{
    if (!(p > 1.0 && p < pt)) {
        throw ConfigError("p = " + std::to_string(p) + " outside (1, " + std::to_string(pt) + ")");
    }
}

}  // namespace

void validate_solve(const RunConfig& c)
{
    validate_common(c);
    if (c.benchmark) {
        if (c.p != 2.0) {
            throw ConfigError("benchmark mode runs at p = 2");
        }
        if (c.source.kind != SourceKind::power || !(c.source.q > 1.0)) {
            throw ConfigError("benchmark mode needs a power source with q > 1");
        }
        if (c.domain.kind != DomainKind::disk) {
            throw ConfigError("benchmark mode needs a disk");
        }
        return;
    }
    check_hypotheses(c.source);
    check_exponent(c.p, p_tilde(c.source));
}

void validate_continue(const RunConfig& c)
{
    validate_common(c);
    if (c.benchmark) {
        throw ConfigError("continue has no benchmark mode");
    }
    check_hypotheses(c.source);
    if (c.schedule.values.empty() && c.schedule.steps < 1) {
        throw ConfigError("schedule needs at least one step");
    }
    if (c.schedule.values.empty() && c.schedule.p_last <= 0.0 && !(c.schedule.ratio > 0.0 && c.schedule.ratio < 1.0)) {
        throw ConfigError("schedule ratio must lie in (0, 1)");
    }
    std::vector<double> ps;
    try {
        ps = c.schedule.resolve();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("schedule: ") + e.what());
    }
    const double pt = p_tilde(c.source);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        check_exponent(ps[i], pt);
        if (i > 0 && !(ps[i] < ps[i - 1])) {
            throw ConfigError("schedule must be strictly decreasing");
        }
    }
}

}  // namespace onelap::app
