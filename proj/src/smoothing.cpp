#include "hypam/smoothing.hpp"

#include <cmath>

#include "hypam/common.hpp"

namespace hypam {

double Smoothing::f(double x) {
    if (x <= 0.5) return 0.5;
    if (x >= 1.0) return x - tail_offset;
    double y = x - 0.5;
    return 0.5 + 4.0 * y * y * y - 4.0 * y * y * y * y;
}

double Smoothing::df(double x) {
    if (x <= 0.5) return 0.0;
    if (x >= 1.0) return 1.0;
    double y = x - 0.5;
    return 12.0 * y * y - 16.0 * y * y * y;
}

double Smoothing::d2f(double x) {
    if (x <= 0.5 || x >= 1.0) return 0.0;
    double y = x - 0.5;
    return 24.0 * y - 48.0 * y * y;
}

double smoothing_drift_bound(int d) {
    require(d >= 2, "dimension must be >= 2");
    auto g = [d](double x) { return (d - 1) * Smoothing::df(x) / std::tanh(x) + Smoothing::d2f(x); };
    // beyond x = 1 the expression is (d-1) coth x, decreasing; the sup sits in [1/2, 1]
    const int n = 4000;
    double best = g(1.0), bx = 1.0;
    for (int i = 0; i <= n; ++i) {
        double x = 0.5 + 0.5 * i / n;
        double v = g(x);
        if (v > best) { best = v; bx = x; }
    }
    double a = std::max(0.5, bx - 0.5 / n), b = std::min(1.0, bx + 0.5 / n);
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a), e = a + r * (b - a);
    for (int it = 0; it < 80; ++it) {
        if (g(c) > g(e)) { b = e; e = c; c = b - r * (b - a); }
        else { a = c; c = e; e = a + r * (b - a); }
    }
    return std::max(best, g(0.5 * (a + b)));
}

}  // namespace hypam
