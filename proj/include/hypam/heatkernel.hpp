#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypam/common.hpp"
#include "hypam/hypgeo.hpp"

namespace hypam {

// All kernels use the generator Delta (no 1/2), so in H^3
// p(t, rho) = (4 pi t)^{-3/2} (rho / sinh rho) exp(-t - rho^2 / 4t).

// t^{-d/2} exp(-(d-1)^2 t/4 - rho^2/4t - (d-1) rho/2) (1+rho+t)^{(d-3)/2} (1+rho)
double comparison_fn(double t, double rho, int d);
double log_comparison_fn(double t, double rho, int d);
// d/drho of log_comparison_fn
double dlog_comparison_fn(double t, double rho, int d);

double exact_h3(double t, double rho);
double log_exact_h3(double t, double rho);
double dlog_exact_h3(double t, double rho);

struct CalibrationGrid {
    std::vector<double> t;
    std::vector<double> rho;

    // n_t log-spaced times and n_rho evenly spaced radii
    static CalibrationGrid make(double t0, double t1, int n_t, double rho0, double rho1, int n_rho);
    std::string describe() const;
};

struct CalibrationOptions {
    double ratio_cap = 100.0;
    // Monte Carlo reference (d != 3)
    std::size_t n_paths = 200000;
    double dt = 0.002;
    std::size_t min_count = 200;
    std::uint64_t seed = 1;
};

struct KernelCalibration {
    int d = 0;
    double C1 = 0.0, C2 = 0.0;
    CalibrationGrid grid;
    bool exact_reference = false;
    // grid points that entered the ratio scan (MC mode drops sparse bins)
    std::size_t points_used = 0;
};

// Exact reference for d = 3; otherwise the radial density of the radial SDE is
// histogrammed at each grid time and divided by the sphere area |S^{d-1}| sinh^{d-1}.
KernelCalibration calibrate(int d, const CalibrationGrid& grid,
                            const CalibrationOptions& opt = {});

// p(t_mid - t_a, x, y) p(t_b - t_mid, y, q) / p(t_b - t_a, x, q); d = 3 only.
double bridge_marginal(double t_a, const HPoint& x, double t_b, const HPoint& q,
                       double t_mid, const HPoint& y);

}  // namespace hypam
