#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "onelap/mountain_pass.hpp"

namespace onelap::app {

enum ExitCode : int { ok = 0, config_error = 2, diverged = 3, io_error = 4 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScheduleConfig {
    double p0 = 1.35;
    double ratio = 0.8;
    int steps = 7;
    /// When set, p is spaced evenly from p0 down to p_last instead.
    double p_last = 0.0;
    /// Explicit values; overrides everything above.
    std::vector<double> values;

    std::vector<double> resolve() const;
};

struct CertifyConfig {
    /// constant | supercritical_plain | supercritical_shifted | field
    std::string kind = "constant";
    int N = 2;
    double R = 1.0;
    double q = 0.5;
    std::vector<int> refinements{2, 3, 4};
    /// For kind = field: a mesh dump and a nodal field written by solve or
    /// continue, plus the exponent they were computed at.
    std::string mesh_path;
    std::string field_path;
    double p = 0.0;
    double eps = 1e-6;
};

struct RunConfig {
    DomainTag domain = DomainTag::disk(1.0);
    int refinement = 2;
    int nx = 4;  // rect only
    int ny = 4;
    SourceSpec source = default_source();
    double p = 1.3;
    ScheduleConfig schedule;
    MountainPassConfig mountain_pass;
    CertifyConfig certify;
    std::string out_dir = "out";
    bool dump_fields = false;
    bool benchmark = false;
    std::uint64_t seed = 1;

    static SourceSpec default_source();
    /// p = 2 with f(u) = u^3.
    static RunConfig benchmark_defaults();
};

/// Fields present in `j` replace the ones in `base`; unknown keys are errors.
RunConfig merge_json(RunConfig base, const nlohmann::json& j);
nlohmann::ordered_json to_json(const RunConfig& config);

RunConfig load_config(const std::filesystem::path& path, RunConfig base);

Mesh build_mesh(const RunConfig& config);

/// Structural checks that do not depend on the command.
void validate_common(const RunConfig& config);
/// Source hypotheses and the exponent range for a solve at config.p.
void validate_solve(const RunConfig& config);
/// Same for every exponent of the resolved schedule.
void validate_continue(const RunConfig& config);

}  // namespace onelap::app
