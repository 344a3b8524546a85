#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "onelap/energy.hpp"

namespace onelap {

struct StepRule {
    double initial_step = 1.0;
    double shrink = 0.5;
    double sufficient_decrease = 1e-4;
    int max_backtracks = 60;
};

struct MountainPassConfig {
    int path_points = 21;
    /// Target for the final (polished) residual norm.
    double descent_tol = 1e-8;
    /// Residual norm at which the path phase hands over to Newton polishing.
    double path_tol = 1e-2;
    /// Budget shared by path iterations and Newton steps.
    int max_iters = 4000;
    StepRule step_rule;
    /// Strictly decreasing regularization levels; the last one is eps_final.
    std::vector<double> eps_schedule{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    /// Nontriviality radius in the BV norm; 0 means "measure it".
    double rho = 0.0;

    /// Empty when valid, otherwise a description of the first violation.
    std::string validate() const;
};

/// One row of the iteration log.
struct IterationRecord {
    int iter = 0;
    double t_star = 0.0;
    double energy = 0.0;
    double residual_norm = 0.0;
    double step_size = 0.0;
    double eps = 0.0;
    /// Maximum of I_p over the path after the step (Newton rows: NaN).
    double path_max = 0.0;
};

struct MountainPassResult {
    Field w;
    /// I_p(w) with the unregularized functional.
    double value = 0.0;
    /// Dual (stiffness-preconditioned) norm of the residual at eps_final.
    double residual_norm = 0.0;
    int iterations = 0;
    int path_iterations = 0;
    double eps_final = 0.0;
    /// value <= 0 or value < rho/2.
    bool suspicious = false;
    /// min w >= -1e-8 max w.
    bool nonnegative = true;
    std::vector<IterationRecord> log;
};

class MountainPassDiverged : public std::runtime_error {
public:
    MountainPassDiverged(const std::string& what, MountainPassResult best)
        : std::runtime_error(what), best_(std::move(best))
    {
    }
    const MountainPassResult& best() const { return best_; }

private:
    MountainPassResult best_;
};

class NoMountainPassGeometry : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Positive bump dist(x, boundary) normalized to max 1.
Field distance_bump(const Mesh& mesh);

/// e = T * bump with T doubled from 1 until I_{p_tilde}(e) < 0.
Field find_endpoint(const SourceSpec& spec, const Mesh& mesh, double p_tilde);

/// Constants behind the nontriviality radius.
struct RhoEstimate {
    double K1 = 0.0;         // growth constant of f near 0
    double embedding = 0.0;  // sup of sum m_v |u_v|^{1+alpha} / ||u||^{1+alpha}
    double K2 = 0.0;         // K1 / (1+alpha) * embedding
    double rho = 0.0;        // (1 / (2 K2))^{1/alpha}
};

/// Measures the discrete embedding constant over a deterministic candidate
/// family (superlevel sets and powers of the distance bump plus seeded random
/// fields) and derives rho so that 1 - K2 rho^alpha = 1/2.
RhoEstimate measure_rho(const SourceSpec& spec, const Mesh& mesh, std::uint64_t seed = 1);

struct LocalMinReport {
    bool is_local_min = true;
    std::vector<double> radii;
    /// probe_energies[i] holds I_p(u) - I_p(0) for the probes at radii[i].
    std::vector<std::vector<double>> probe_energies;
};

LocalMinReport local_min_check(const SourceSpec& spec, const Mesh& mesh, const EnergyParams& params,
                               double rho, int probes_per_radius = 32, std::uint64_t seed = 1);

/// Numerical mountain pass for I_p between 0 and e, followed by damped
/// Newton polishing along the eps schedule. `warm_start`, when given, is
/// inserted as an intermediate path vertex (rescaled to the ray maximum).
MountainPassResult mountain_pass_solve(const SourceSpec& spec, const Mesh& mesh, double p, const Field& e,
                                       const MountainPassConfig& config,
                                       const std::optional<Field>& warm_start = std::nullopt);

/// CSV with columns iter,t_star,Ip,residual_norm,step_size,eps.
void write_iteration_log(std::ostream& os, const std::vector<IterationRecord>& log);

}  // namespace onelap
