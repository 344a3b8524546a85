#pragma once

#include <vector>

namespace onelap {

/// Positive radial solution of -u'' - (N-1)/r u' = u^q on [0, R] with
/// u'(0) = 0 and u(R) = 0, found by shooting on u(0).
struct RadialProfile {
    double u0 = 0.0;
    /// |S^{N-1}| int_0^R ((1/2) u'^2 - u^{q+1}/(q+1)) r^{N-1} dr
    double energy = 0.0;
    std::vector<double> r;
    std::vector<double> u;
};

/// RK4 with fixed step `step`, secant iteration on u(0) started from a sign
/// bracket of u(R).
RadialProfile lane_emden_shooting(double q, int N, double R, double step = 1e-4);

}  // namespace onelap
