#include "hypam/heatkernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "hypam/hypbm.hpp"
#include "hypam/parallel.hpp"
#include "hypam/rng.hpp"

namespace hypam {

namespace {

// log(rho / sinh rho), stable at both ends
double log_rho_over_sinh(double rho) {
    if (rho < 1e-4) return -rho * rho / 6.0;
    if (rho > 30.0) return std::log(2.0 * rho) - rho;
    return std::log(rho / std::sinh(rho));
}

// 1/rho - coth rho
double inv_minus_coth(double rho) {
    if (rho < 1e-3) return -rho / 3.0 + rho * rho * rho / 45.0;
    return 1.0 / rho - 1.0 / std::tanh(rho);
}

}  // namespace

double log_comparison_fn(double t, double rho, int d) {
    require(t > 0.0 && rho >= 0.0, "comparison_fn needs t > 0, rho >= 0");
    double dm1 = d - 1.0;
    return -0.5 * d * std::log(t) - dm1 * dm1 * t / 4.0 - rho * rho / (4.0 * t) - dm1 * rho / 2.0 +
           0.5 * (d - 3.0) * std::log1p(rho + t) + std::log1p(rho);
}

double comparison_fn(double t, double rho, int d) { return std::exp(log_comparison_fn(t, rho, d)); }

double dlog_comparison_fn(double t, double rho, int d) {
    return -rho / (2.0 * t) - 0.5 * (d - 1.0) + 0.5 * (d - 3.0) / (1.0 + rho + t) + 1.0 / (1.0 + rho);
}

double log_exact_h3(double t, double rho) {
    require(t > 0.0 && rho >= 0.0, "exact_h3 needs t > 0, rho >= 0");
    return -1.5 * std::log(4.0 * M_PI * t) + log_rho_over_sinh(rho) - t - rho * rho / (4.0 * t);
}

double exact_h3(double t, double rho) { return std::exp(log_exact_h3(t, rho)); }

double dlog_exact_h3(double t, double rho) { return inv_minus_coth(rho) - rho / (2.0 * t); }

CalibrationGrid CalibrationGrid::make(double t0, double t1, int n_t, double rho0, double rho1,
                                      int n_rho) {
    require(n_t >= 1 && n_rho >= 1, "grid needs at least one point per axis");
    require(t0 > 0.0 && t1 >= t0 && rho0 >= 0.0 && rho1 >= rho0, "bad grid bounds");
    CalibrationGrid g;
    for (int i = 0; i < n_t; ++i) {
        double f = n_t == 1 ? 0.0 : double(i) / (n_t - 1);
        g.t.push_back(t0 * std::pow(t1 / t0, f));
    }
    for (int j = 0; j < n_rho; ++j) {
        double f = n_rho == 1 ? 0.0 : double(j) / (n_rho - 1);
        g.rho.push_back(rho0 + f * (rho1 - rho0));
    }
    return g;
}

std::string CalibrationGrid::describe() const {
    std::ostringstream os;
    os << "t[" << t.size() << "]=" << (t.empty() ? 0.0 : t.front()) << ".."
       << (t.empty() ? 0.0 : t.back()) << " rho[" << rho.size() << "]="
       << (rho.empty() ? 0.0 : rho.front()) << ".." << (rho.empty() ? 0.0 : rho.back());
    return os.str();
}

namespace {

// integral of sinh^{d-1} over [a, b]
double shell_integral(double a, double b, int d) {
    auto f = [d](double r) { return std::pow(std::sinh(r), d - 1); };
    return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

}  // namespace

KernelCalibration calibrate(int d, const CalibrationGrid& grid, const CalibrationOptions& opt) {
    require(d >= 2, "dimension must be >= 2");
    require(!grid.t.empty() && !grid.rho.empty(), "empty calibration grid");
    KernelCalibration cal;
    cal.d = d;
    cal.grid = grid;
    double lo = INFINITY, hi = -INFINITY;
    auto take = [&](double log_ratio) {
        lo = std::min(lo, log_ratio);
        hi = std::max(hi, log_ratio);
        ++cal.points_used;
    };

    if (d == 3) {
        cal.exact_reference = true;
        for (double t : grid.t)
            for (double rho : grid.rho) take(log_exact_h3(t, rho) - log_comparison_fn(t, rho, 3));
    } else {
        // bins centred on the grid radii
        std::vector<double> rho = grid.rho;
        std::sort(rho.begin(), rho.end());
        std::vector<double> edges(rho.size() + 1);
        if (rho.size() == 1) {
            edges[0] = std::max(0.0, rho[0] - 0.1);
            edges[1] = rho[0] + 0.1;
        } else {
            for (std::size_t j = 1; j < rho.size(); ++j) edges[j] = 0.5 * (rho[j - 1] + rho[j]);
            edges[0] = std::max(0.0, rho[0] - (edges[1] - rho[0]));
            edges.back() = rho.back() + (rho.back() - edges[rho.size() - 1]);
        }
        double area = sphere_area(d);
        std::vector<double> finals(opt.n_paths);
        for (std::size_t ti = 0; ti < grid.t.size(); ++ti) {
            double t = grid.t[ti];
            parallel_for(opt.n_paths, [&](std::size_t i) {
                Stream rng(opt.seed, tags::calib, ti * opt.n_paths + i);
                finals[i] = radial_final(d, t, std::min(opt.dt, t / 20.0), 0.0, rng);
            });
            std::vector<std::size_t> counts(rho.size(), 0);
            for (double r : finals) {
                auto it = std::upper_bound(edges.begin(), edges.end(), r);
                if (it == edges.begin() || it == edges.end()) continue;
                ++counts[it - edges.begin() - 1];
            }
            for (std::size_t j = 0; j < rho.size(); ++j) {
                if (counts[j] < opt.min_count) continue;
                double mass = double(counts[j]) / opt.n_paths;
                double p_hat = mass / (area * shell_integral(edges[j], edges[j + 1], d));
                take(std::log(p_hat) - log_comparison_fn(t, rho[j], d));
            }
        }
        if (cal.points_used == 0)
            fail(ErrorKind::CalibrationFailed, "no grid bin reached the minimum count");
    }
    cal.C1 = std::exp(lo);
    cal.C2 = std::exp(hi);
    if (!(cal.C2 / cal.C1 <= opt.ratio_cap))
        fail(ErrorKind::CalibrationFailed,
             "kernel ratio spread " + std::to_string(cal.C2 / cal.C1) + " exceeds cap");
    return cal;
}

double bridge_marginal(double t_a, const HPoint& x, double t_b, const HPoint& q, double t_mid,
                       const HPoint& y) {
    require(t_a < t_mid && t_mid < t_b, "need t_a < t_mid < t_b");
    if (x.dim() != 3)
        fail(ErrorKind::KernelUnavailable, "bridge marginal needs the exact kernel (d = 3)");
    double lp = log_exact_h3(t_mid - t_a, distance(x, y)) + log_exact_h3(t_b - t_mid, distance(y, q)) -
                log_exact_h3(t_b - t_a, distance(x, q));
    return std::exp(lp);
}

}  // namespace hypam
