#include "onelap/radial_shooting.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace onelap {

namespace {

struct Trajectory {
    std::vector<double> r, u, du;
};

Trajectory integrate(double a, double q, int N, double R, double h)
{
    auto source = [q](double u) { return std::copysign(std::pow(std::abs(u), q), u); };
    auto rhs = [&](double r, double u, double v) {
        return std::pair{v, -(N - 1) / r * v - source(u)};
    };
    const int n = static_cast<int>(std::lround(R / h));
    h = R / n;
    Trajectory tr;
    tr.r.reserve(static_cast<std::size_t>(n) + 1);
    // series start avoids the 1/r singularity: u = a - a^q r^2 / (2N)
    tr.r.push_back(0.0);
    tr.u.push_back(a);
    tr.du.push_back(0.0);
    double r = h;
    double u = a - source(a) * h * h / (2.0 * N);
    double v = -source(a) * h / N;
    tr.r.push_back(r);
    tr.u.push_back(u);
    tr.du.push_back(v);
    for (int i = 1; i < n; ++i) {
        const auto [k1u, k1v] = rhs(r, u, v);
        const auto [k2u, k2v] = rhs(r + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v);
        const auto [k3u, k3v] = rhs(r + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v);
        const auto [k4u, k4v] = rhs(r + h, u + h * k3u, v + h * k3v);
        u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        r = (i + 1) * h;
        tr.r.push_back(r);
        tr.u.push_back(u);
        tr.du.push_back(v);
    }
    return tr;
}

bool stays_positive(const Trajectory& tr)
{
    for (std::size_t i = 0; i + 1 < tr.u.size(); ++i) {
        if (tr.u[i] <= 0.0) {
            return false;
        }
    }
    return true;
}

}  // namespace

RadialProfile lane_emden_shooting(double q, int N, double R, double step)
{
    if (!(q > 1.0) || N < 2 || !(R > 0.0) || !(step > 0.0)) {
        throw std::invalid_argument("shooting needs q > 1, N >= 2, R > 0");
    }
    // Small u(0) keeps u positive up to R; grow it until the profile reaches
    // zero before R.
    double lo = 1e-3;
    double hi = lo;
    while (stays_positive(integrate(hi, q, N, R, step)) && integrate(hi, q, N, R, step).u.back() > 0.0) {
        lo = hi;
        hi *= 1.5;
        if (hi > 1e8) {
            throw std::runtime_error("shooting failed to bracket u(R) = 0");
        }
    }
    double a0 = lo;
    double a1 = hi;
    double g0 = integrate(a0, q, N, R, step).u.back();
    double g1 = integrate(a1, q, N, R, step).u.back();
    for (int it = 0; it < 100 && std::abs(a1 - a0) > 1e-14 * a1; ++it) {
        double a2 = a1 - g1 * (a1 - a0) / (g1 - g0);
        if (!(a2 > std::min(lo, hi) && a2 < std::max(lo, hi))) {
            a2 = 0.5 * (lo + hi);
        }
        const double g2 = integrate(a2, q, N, R, step).u.back();
        if (g2 > 0.0) {
            lo = a2;
        } else {
            hi = a2;
        }
        a0 = a1;
        g0 = g1;
        a1 = a2;
        g1 = g2;
        if (g2 == 0.0) {
            break;
        }
    }

    const Trajectory tr = integrate(a1, q, N, R, step);
    const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N);
    double energy = 0.0;
    for (std::size_t i = 0; i + 1 < tr.r.size(); ++i) {
        auto density = [&](std::size_t j) {
            const double uj = std::max(tr.u[j], 0.0);
            return (0.5 * tr.du[j] * tr.du[j] - std::pow(uj, q + 1.0) / (q + 1.0)) * std::pow(tr.r[j], N - 1);
        };
        energy += 0.5 * (tr.r[i + 1] - tr.r[i]) * (density(i) + density(i + 1));
    }
    RadialProfile out;
    out.u0 = a1;
    out.energy = sphere * energy;
    out.r = tr.r;
    out.u = tr.u;
    return out;
}

}  // namespace onelap
