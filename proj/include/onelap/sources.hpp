#pragma once

#include <string>
#include <utility>

namespace onelap {

enum class SourceKind { power, plus_power, shifted_plus_power };

/// Which part of the nonlinearity is active: f itself, f_+ = f [s > 0] or
/// f_- = f [s <= 0].
enum class Branch { full, plus, minus };

/// Autonomous source term f(s) together with the constants of its growth
/// hypotheses.
///
///   power(q):                 f(s) = |s|^{q-1} s
///   plus_power(q):            f(s) = (s_+)^q
///   shifted_plus_power(q, c): f(s) = ((c + s)_+)^q
///
/// `amplitude` multiplies f (and F); zero disables the source.
struct SourceSpec {
    SourceKind kind = SourceKind::power;
    double q = 0.5;
    double alpha = 0.5;
    double kappa = 1.4;
    double s0 = 1.0;
    double C = 1.0;
    int N = 2;
    double shift = 0.0;
    double amplitude = 1.0;
    Branch branch = Branch::full;

    static SourceSpec power(double q, int N = 2);
    static SourceSpec plus_power(double q, int N = 2);
    static SourceSpec shifted_plus_power(double q, double shift, int N = 2);
    /// Shift c = ((N-1)/R)^{1/q} that makes the shifted radial profile vanish on |x| = R.
    static double radial_shift(double q, int N, double R);

    std::string kind_name() const;
};

SourceKind parse_source_kind(const std::string& name);

double f_eval(const SourceSpec& spec, double s);
double F_eval(const SourceSpec& spec, double s);
/// Derivative of f (branch aware). Singular at the origin when q < 1; the
/// value there is evaluated at |s| = 1e-12.
double df_eval(const SourceSpec& spec, double s);

std::pair<SourceSpec, SourceSpec> f_split(const SourceSpec& spec);

struct HypothesisReport {
    bool h1 = false;
    bool h2 = false;
    bool h3 = false;
    bool subcritical = false;
    bool h3_positive = false;  // growth condition restricted to s >= s0
    bool h3_negative = false;  // growth condition restricted to s <= -s0
    double K1 = 0.0;           // max |f(s)| / |s|^alpha over the small-s samples

    bool all() const { return h1 && h2 && h3 && subcritical; }
    /// Conditions used by the nonnegative (plus-branch) construction.
    bool positive_branch() const { return h1 && h2 && h3_positive && subcritical; }
    /// Name of the first failing hypothesis or empty.
    std::string first_failure(bool positive_only) const;
};

HypothesisReport hypothesis_check(const SourceSpec& spec);

double p_tilde(const SourceSpec& spec);

}  // namespace onelap
