#pragma once

namespace hypam {

// Non-decreasing C^2 function with f = 1/2 on [0, 1/2], f' = 1 on [1, inf) and
// 0 <= f' <= 1. Applied to the radial process to turn cluster hops into Euclidean
// first-passage problems. Because f(1) = 3/4, f(x) = x - 1/4 beyond 1.
struct Smoothing {
    static double f(double x);
    static double df(double x);
    static double d2f(double x);
    // offset such that f(x) = x - offset on [1, inf)
    static constexpr double tail_offset = 0.25;
};

// sup_{x >= 0} (d-1) f'(x) coth x + f''(x), by dense scan plus golden refinement.
double smoothing_drift_bound(int d);

}  // namespace hypam
