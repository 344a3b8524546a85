#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace onelap::app;

int main(int argc, char** argv)
{
    CLI::App app{"1-Laplacian mountain-pass solver and certification tools"};
    app.fallthrough();
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool dump_fields = false;
    bool benchmark = false;
    std::optional<double> p, q, radius, p0, p_last, ratio;
    std::optional<int> refinement, steps, max_iters;
    std::optional<std::string> certify_kind;

    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "random seed");
    app.add_flag("--dump-fields", dump_fields, "write per-step field dumps");
    app.add_flag("--benchmark", benchmark, "p = 2, f(u) = u^3 run checked against the radial oracle");
    app.add_option("--p", p, "exponent for solve");
    app.add_option("--q", q, "source exponent");
    app.add_option("--radius", radius, "disk radius");
    app.add_option("--refinement", refinement, "disk refinement level")->check(CLI::NonNegativeNumber);
    app.add_option("--p0", p0, "first exponent of the schedule");
    app.add_option("--p-last", p_last, "last exponent of an evenly spaced schedule");
    app.add_option("--ratio", ratio, "ratio of the geometric schedule");
    app.add_option("--steps", steps, "number of schedule steps");
    app.add_option("--max-iters", max_iters, "iteration budget per solve");
    app.add_option("--kind", certify_kind, "radial solution for certify, or 'field'");

    app.add_subcommand("mesh", "build a mesh and write it with a quality report");
    app.add_subcommand("solve", "mountain-pass solve at a single exponent");
    app.add_subcommand("continue", "continuation in p toward 1");
    app.add_subcommand("certify", "Pohozaev and weak-residual checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    RunConfig config = benchmark ? RunConfig::benchmark_defaults() : RunConfig{};
    try {
        if (!config_path.empty()) {
            config = load_config(config_path, config);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return io_error;
    }
    if (benchmark) {
        config.benchmark = true;
    }
    if (!out_dir.empty()) {
        config.out_dir = out_dir;
    }
    if (seed) {
        config.seed = *seed;
    }
    if (dump_fields) {
        config.dump_fields = true;
    }
    if (p) {
        config.p = *p;
    }
    if (q) {
        config.source.q = *q;
        config.certify.q = *q;
    }
    if (radius) {
        config.domain.radius = *radius;
        config.certify.R = *radius;
    }
    if (refinement) {
        config.refinement = *refinement;
    }
    if (p0) {
        config.schedule.p0 = *p0;
    }
    if (p_last) {
        config.schedule.p_last = *p_last;
    }
    if (ratio) {
        config.schedule.ratio = *ratio;
    }
    if (steps) {
        config.schedule.steps = *steps;
    }
    if (max_iters) {
        config.mountain_pass.max_iters = *max_iters;
    }
    if (certify_kind) {
        config.certify.kind = *certify_kind;
    }

    return run_command(app.get_subcommands().front()->get_name(), config, std::cout, std::cerr);
}
