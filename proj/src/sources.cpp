#include "onelap/sources.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace onelap {

namespace {

bool branch_active(Branch branch, double s)
{
    switch (branch) {
    case Branch::plus:
        return s > 0.0;
    case Branch::minus:
        return s <= 0.0;
    case Branch::full:
        break;
    }
    return true;
}

// Log-spaced magnitudes 10^lo .. 10^hi, `per_decade` points per decade.
std::vector<double> log_grid(double lo, double hi, int per_decade)
{
    std::vector<double> out;
    const int n = std::max(1, static_cast<int>(std::lround((hi - lo) * per_decade)));
    for (int i = 0; i <= n; ++i) {
        out.push_back(std::pow(10.0, lo + (hi - lo) * i / n));
    }
    return out;
}

}  // namespace

SourceSpec SourceSpec::power(double q, int N)
{
    SourceSpec s;
    s.kind = SourceKind::power;
    s.q = q;
    s.alpha = q;
    s.kappa = q + 1.0;
    s.N = N;
    return s;
}

SourceSpec SourceSpec::plus_power(double q, int N)
{
    SourceSpec s = power(q, N);
    s.kind = SourceKind::plus_power;
    return s;
}

SourceSpec SourceSpec::shifted_plus_power(double q, double shift, int N)
{
    SourceSpec s = power(q, N);
    s.kind = SourceKind::shifted_plus_power;
    s.shift = shift;
    return s;
}

double SourceSpec::radial_shift(double q, int N, double R)
{
    return std::pow((N - 1) / R, 1.0 / q);
}

std::string SourceSpec::kind_name() const
{
    switch (kind) {
    case SourceKind::power:
        return "power";
    case SourceKind::plus_power:
        return "plus_power";
    case SourceKind::shifted_plus_power:
        return "shifted_plus_power";
    }
    return "power";
}

SourceKind parse_source_kind(const std::string& name)
{
    if (name == "power") {
        return SourceKind::power;
    }
    if (name == "plus_power") {
        return SourceKind::plus_power;
    }
    if (name == "shifted_plus_power") {
        return SourceKind::shifted_plus_power;
    }
    throw std::invalid_argument("unknown source kind '" + name + "'");
}

double f_eval(const SourceSpec& spec, double s)
{
    if (!branch_active(spec.branch, s)) {
        return 0.0;
    }
    double value = 0.0;
    switch (spec.kind) {
    case SourceKind::power:
        value = s == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(s), spec.q), s);
        break;
    case SourceKind::plus_power:
        value = s > 0.0 ? std::pow(s, spec.q) : 0.0;
        break;
    case SourceKind::shifted_plus_power:
        value = spec.shift + s > 0.0 ? std::pow(spec.shift + s, spec.q) : 0.0;
        break;
    }
    return spec.amplitude * value;
}

double F_eval(const SourceSpec& spec, double s)
{
    // F_+(s) vanishes for s <= 0 and F_-(s) for s > 0; otherwise F_branch = F.
    if (!branch_active(spec.branch, s)) {
        return 0.0;
    }
    const double qp1 = spec.q + 1.0;
    double value = 0.0;
    switch (spec.kind) {
    case SourceKind::power:
        value = std::pow(std::abs(s), qp1) / qp1;
        break;
    case SourceKind::plus_power:
        value = s > 0.0 ? std::pow(s, qp1) / qp1 : 0.0;
        break;
    case SourceKind::shifted_plus_power: {
        const double c = spec.shift;
        const double top = c + s > 0.0 ? std::pow(c + s, qp1) : 0.0;
        const double base = c > 0.0 ? std::pow(c, qp1) : 0.0;
        value = (top - base) / qp1;
        break;
    }
    }
    return spec.amplitude * value;
}

double df_eval(const SourceSpec& spec, double s)
{
    if (!branch_active(spec.branch, s)) {
        return 0.0;
    }
    constexpr double floor = 1e-12;
    const double qm1 = spec.q - 1.0;
    double value = 0.0;
    switch (spec.kind) {
    case SourceKind::power:
        value = spec.q * std::pow(std::max(std::abs(s), floor), qm1);
        break;
    case SourceKind::plus_power:
        value = s > 0.0 ? spec.q * std::pow(std::max(s, floor), qm1) : 0.0;
        break;
    case SourceKind::shifted_plus_power:
        value = spec.shift + s > 0.0 ? spec.q * std::pow(std::max(spec.shift + s, floor), qm1) : 0.0;
        break;
    }
    return spec.amplitude * value;
}

std::pair<SourceSpec, SourceSpec> f_split(const SourceSpec& spec)
{
    SourceSpec plus = spec;
    SourceSpec minus = spec;
    plus.branch = Branch::plus;
    minus.branch = Branch::minus;
    return {plus, minus};
}

std::string HypothesisReport::first_failure(bool positive_only) const
{
    if (!h1) {
        return "hypothesis (i): f(s)/|s|^alpha unbounded near 0";
    }
    if (!h2) {
        return "hypothesis (ii): |f(s)| <= C(1+|s|^q) violated";
    }
    if (positive_only ? !h3_positive : !h3) {
        return "hypothesis (iii): 0 < kappa F(s) <= s f(s) violated for |s| >= s0";
    }
    if (!subcritical) {
        return "subcriticality: q < 1/(N-1) violated";
    }
    return {};
}

HypothesisReport hypothesis_check(const SourceSpec& input)
{
    SourceSpec spec = input;
    spec.branch = Branch::full;
    HypothesisReport r;

    // (i): ratios at s = +-10^-k, k = 1..12. Finite limsup is certified when
    // the ratio does not keep growing between the middle and the end of the
    // sample range.
    double head = 0.0;
    double tail = 0.0;
    bool finite = true;
    for (int k = 1; k <= 12; ++k) {
        const double s = std::pow(10.0, -k);
        for (double sign : {1.0, -1.0}) {
            const double ratio = std::abs(f_eval(spec, sign * s)) / std::pow(s, spec.alpha);
            finite = finite && std::isfinite(ratio);
            r.K1 = std::max(r.K1, ratio);
            (k <= 6 ? head : tail) = std::max(k <= 6 ? head : tail, ratio);
        }
    }
    r.h1 = finite && tail <= 2.0 * head + 1e-300 && spec.alpha > 0.0;

    r.h2 = std::abs(f_eval(spec, 0.0)) <= spec.C;
    for (double s : log_grid(-6.0, 6.0, 20)) {
        for (double sign : {1.0, -1.0}) {
            const double bound = spec.C * (1.0 + std::pow(s, spec.q));
            r.h2 = r.h2 && std::abs(f_eval(spec, sign * s)) <= bound * (1.0 + 1e-12);
        }
    }

    // (iii) on |s| in [s0, 1e6].
    auto growth_ok = [&](double s) {
        const double F = F_eval(spec, s);
        const double lhs = spec.kappa * F;
        return lhs > 0.0 && lhs <= s * f_eval(spec, s) * (1.0 + 1e-12);
    };
    r.h3_positive = spec.kappa > 1.0 && spec.s0 > 0.0;
    r.h3_negative = r.h3_positive;
    if (spec.s0 > 0.0 && spec.s0 <= 1e6) {
        for (double s : log_grid(std::log10(spec.s0), 6.0, 20)) {
            r.h3_positive = r.h3_positive && growth_ok(s);
            r.h3_negative = r.h3_negative && growth_ok(-s);
        }
    }
    r.h3 = r.h3_positive && r.h3_negative;

    r.subcritical = spec.N >= 2 && spec.q > 0.0 && spec.q < 1.0 / (spec.N - 1);
    return r;
}

double p_tilde(const SourceSpec& spec)
{
    return std::min({1.0 + spec.alpha, spec.kappa, spec.q + 1.0});
}

}  // namespace onelap
