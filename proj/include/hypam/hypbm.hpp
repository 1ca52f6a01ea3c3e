#pragma once

#include <cstdint>
#include <vector>

#include "hypam/common.hpp"
#include "hypam/heatkernel.hpp"
#include "hypam/hypgeo.hpp"
#include "hypam/rng.hpp"
#include "hypam/stats.hpp"

namespace hypam {

struct Trajectory {
    std::vector<double> times;
    std::vector<HPoint> points;

    std::size_t size() const { return times.size(); }
    // steps whose displacement exceeds 50 sqrt(2 dt)
    std::size_t jump_flags() const;
};

// Geodesic random walk: each step is a N(0, 2 dt I) tangent vector pushed through
// the exponential map. The last step is shortened so the path ends at exactly t.
Trajectory simulate_bm(int d, double t, double dt, std::uint64_t seed,
                       std::uint64_t path = 0);
Trajectory simulate_bm_from(const HPoint& start, double t, double dt,
                            std::uint64_t seed, std::uint64_t path = 0);
// Only the final radius d(o, W_t); no path storage.
double bm_final_radius(int d, double t, double dt, std::uint64_t seed, std::uint64_t path);

// dR = sqrt(2) dbeta + (d-1) coth R dt
double radial_drift(int d, double R);
std::vector<double> simulate_radial(int d, double t, double dt, double r0,
                                    std::uint64_t seed, std::uint64_t path = 0);
double radial_final(int d, double t, double dt, double r0, std::uint64_t seed,
                    std::uint64_t path);
double radial_final(int d, double t, double dt, double r0, Stream& rng);

struct ExitRow {
    double R = 0.0;
    std::size_t hits = 0, n = 0;
    double p_hat = 0.0, ci_lo = 0.0, ci_hi = 0.0;
};

// P(tau_R <= t) from the radial SDE started at 0. Between grid points a Brownian
// bridge crossing probability exp(-(R-a)(R-b)/dt) is used, so exits between
// monitoring times are not lost.
std::vector<ExitRow> exit_stats(int d, const std::vector<double>& R_list, double t,
                                std::size_t n_paths, std::uint64_t seed, double dt = 0.004);

// Density of the first hitting time of level a > 0 by standard 1D Brownian motion.
double first_passage_density(double a, double s);
double first_passage_cdf(double a, double s);

// Hitting times of level a by standard 1D BM on an Euler grid with the bridge
// crossing correction; paths that have not hit by `horizon` are censored (+inf).
std::vector<double> simulate_hitting_times(double a, std::size_t n, double dt, double horizon,
                                           std::uint64_t seed);

struct BridgeSpec {
    HPoint start, end;
    double s = 1.0;
};

// Sequential sampling of the bridge: each Euler step moves by the Brownian increment
// plus the kernel-ratio drift 2 grad_x log p(s - v, x, end), i.e. the transition
// density p(dt, x, y') p(s-v-dt, y', end) / p(s-v, x, end) to first order in dt.
// d = 3 uses the exact kernel; other d use the comparison function and need a
// calibration for that d (KernelUnavailable otherwise). The final point is `end`.
Trajectory simulate_bridge(const BridgeSpec& spec, double dt, std::uint64_t seed,
                           std::uint64_t path = 0, const KernelCalibration* calib = nullptr);

// sum d(x_i, x_{i+1})^2 / dv_i with times rescaled to [0,1]
double path_energy(const Trajectory& traj);

struct EnergyOptions {
    int d = 2;
    bool deviation_constraint = true;
    // check only eta < delta/24 and 3 eta + 2 K zeta <= delta/8; the full
    // eta < min{delta/24, delta^2/(2560 K)} is reported but not enforced
    bool enforce_full_constraint = false;
    int samples = 256;  // grid used when the minimiser is rebuilt as a discrete path
};

struct EnergyReport {
    double min_energy = 0.0;
    double discrete_energy = 0.0;  // path_energy of the minimiser sampled on a grid
    double bound = 0.0;            // K^2 + delta^2/128 - 4K(5 eta + 2K zeta)
    double unconstrained_min = 0.0;
    double excess = 0.0;           // min_energy - unconstrained_min
    double endpoint_slack = 0.0;   // 3 eta + 2 K zeta
    double deviation = 0.0;        // delta / 4
    double best_v = 0.0;
    bool full_constraint_ok = false;
    bool holds = false;            // min_energy >= bound
    std::size_t trials = 0;
};

// Minimum discrete energy over paths from x, with d(x, y) = K, that stray at least
// delta/4 from the geodesic yet end within 3 eta + 2 K zeta of y. For
// a fixed deviation time v the minimiser is piecewise geodesic through a point p
// with d(p, gamma_v) = delta/4, so the search runs over (v, p, endpoint) with
// Nelder-Mead from n_trials random starts.
EnergyReport energy_excess_check(double K_star, double delta, double eta, double zeta,
                                 std::size_t n_trials, std::uint64_t seed,
                                 const EnergyOptions& opt = {});

struct LdpRow {
    double s = 0.0;
    std::size_t hits = 0, n = 0;
    double p_hat = 0.0, ci_lo = 0.0, ci_hi = 0.0;
};

struct LdpReport {
    std::vector<LdpRow> rows;
    LinearFit fit;        // log p_hat against 1/s over rows with hits > 0
    double kappa = 0.0;   // -fit.slope
    double dt_fraction = 0.0;
};

// P(sup_v d(omega_v, gamma_v) > delta/2) for bridges x -> y of duration s, v in [0,1].
// The supremum is over the simulation grid (dt = dt_fraction * s).
LdpReport bridge_ldp_decay(const HPoint& x, const HPoint& y, double delta,
                           const std::vector<double>& s_list, std::size_t n_paths,
                           std::uint64_t seed, double dt_fraction = 0.005,
                           const KernelCalibration* calib = nullptr);

}  // namespace hypam
