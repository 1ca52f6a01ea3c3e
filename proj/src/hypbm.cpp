#include "hypam/hypbm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include <gsl/gsl_multimin.h>

#include "hypam/parallel.hpp"

namespace hypam {

namespace {

std::size_t step_count(double t, double dt) {
    require(dt > 0.0, "dt must be positive");
    require(t >= 0.0, "time must be >= 0");
    if (t == 0.0) return 0;
    return static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
}

Vec gaussian(int d, double scale, Stream& rng) {
    Vec z(d);
    for (int k = 0; k < d; ++k) z[k] = scale * rng.normal();
    return z;
}

}  // namespace

std::size_t Trajectory::jump_flags() const {
    std::size_t flags = 0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        double dt = times[i + 1] - times[i];
        if (distance(points[i], points[i + 1]) > 50.0 * std::sqrt(2.0 * dt)) ++flags;
    }
    return flags;
}

Trajectory simulate_bm_from(const HPoint& start, double t, double dt, std::uint64_t seed,
                            std::uint64_t path) {
    std::size_t n = step_count(t, dt);
    require(n == 0 || dt <= t + 1e-12, "dt must lie in (0, t]");
    Stream rng(seed, tags::bm_path, path);
    Trajectory tr;
    tr.times.reserve(n + 1);
    tr.points.reserve(n + 1);
    tr.times.push_back(0.0);
    tr.points.push_back(start);
    int d = start.dim();
    for (std::size_t k = 0; k < n; ++k) {
        double t0 = k * dt;
        double t1 = (k + 1 == n) ? t : (k + 1) * dt;
        double h = t1 - t0;
        tr.points.push_back(exp_map(tr.points.back(), gaussian(d, std::sqrt(2.0 * h), rng)));
        tr.times.push_back(t1);
    }
    return tr;
}

Trajectory simulate_bm(int d, double t, double dt, std::uint64_t seed, std::uint64_t path) {
    return simulate_bm_from(HPoint::origin(d), t, dt, seed, path);
}

double bm_final_radius(int d, double t, double dt, std::uint64_t seed, std::uint64_t path) {
    std::size_t n = step_count(t, dt);
    Stream rng(seed, tags::bm_path, path);
    HPoint x = HPoint::origin(d);
    for (std::size_t k = 0; k < n; ++k) {
        double h = (k + 1 == n) ? t - k * dt : dt;
        x = exp_map(x, gaussian(d, std::sqrt(2.0 * h), rng));
    }
    return x.radius();
}

double radial_drift(int d, double R) {
    require(R > 0.0, "radial drift needs R > 0");
    return (d - 1.0) / std::tanh(R);
}

namespace {

// Euler step; below R = 0.1 the drift is the Laurent form (d-1)(1/R + 1), with R
// floored at sqrt(dt) so a single step cannot be thrown out by the 1/R pole.
inline double radial_step(int d, double R, double h, double z) {
    double drift;
    if (R >= 0.1) {
        drift = (d - 1.0) / std::tanh(R);
    } else {
        drift = (d - 1.0) * (1.0 / std::max(R, std::sqrt(h)) + 1.0);
    }
    return std::abs(R + drift * h + std::sqrt(2.0 * h) * z);
}

}  // namespace

double radial_final(int d, double t, double dt, double r0, Stream& rng) {
    require(d >= 2, "dimension must be >= 2");
    require(r0 >= 0.0, "r0 must be >= 0");
    std::size_t n = step_count(t, dt);
    double R = r0;
    for (std::size_t k = 0; k < n; ++k) {
        double h = (k + 1 == n) ? t - k * dt : dt;
        R = radial_step(d, R, h, rng.normal());
    }
    return R;
}

double radial_final(int d, double t, double dt, double r0, std::uint64_t seed,
                    std::uint64_t path) {
    Stream rng(seed, tags::radial_path, path);
    return radial_final(d, t, dt, r0, rng);
}

std::vector<double> simulate_radial(int d, double t, double dt, double r0, std::uint64_t seed,
                                    std::uint64_t path) {
    require(d >= 2, "dimension must be >= 2");
    require(r0 >= 0.0, "r0 must be >= 0");
    std::size_t n = step_count(t, dt);
    Stream rng(seed, tags::radial_path, path);
    std::vector<double> R{r0};
    R.reserve(n + 1);
    for (std::size_t k = 0; k < n; ++k) {
        double h = (k + 1 == n) ? t - k * dt : dt;
        R.push_back(radial_step(d, R.back(), h, rng.normal()));
    }
    return R;
}

std::vector<ExitRow> exit_stats(int d, const std::vector<double>& R_list, double t,
                                std::size_t n_paths, std::uint64_t seed, double dt) {
    require(!R_list.empty(), "no exit radii");
    require(n_paths > 0, "n_paths must be positive");
    std::size_t n = step_count(t, dt);
    double Rmin = *std::min_element(R_list.begin(), R_list.end());
    require(Rmin > 0.0, "exit radii must be positive");
    // first exit time of each path through each radius is monotone in R, so one
    // pass records the running maximum including the bridge-crossing test
    std::vector<std::vector<char>> hit(R_list.size(), std::vector<char>(n_paths, 0));
    parallel_for(n_paths, [&](std::size_t i) {
        Stream rng(seed, tags::radial_path, i);
        double R = 0.0;
        std::vector<char> done(R_list.size(), 0);
        std::size_t left = R_list.size();
        for (std::size_t k = 0; k < n && left > 0; ++k) {
            double h = (k + 1 == n) ? t - k * dt : dt;
            double next = radial_step(d, R, h, rng.normal());
            double u = rng.uniform();
            for (std::size_t j = 0; j < R_list.size(); ++j) {
                if (done[j]) continue;
                double L = R_list[j];
                bool crossed = next >= L || R >= L;
                if (!crossed) crossed = u < std::exp(-(L - R) * (L - next) / h);
                if (crossed) {
                    done[j] = 1;
                    --left;
                }
            }
            R = next;
        }
        for (std::size_t j = 0; j < R_list.size(); ++j) hit[j][i] = done[j];
    });
    std::vector<ExitRow> rows;
    for (std::size_t j = 0; j < R_list.size(); ++j) {
        ExitRow row;
        row.R = R_list[j];
        row.n = n_paths;
        for (char c : hit[j]) row.hits += c;
        row.p_hat = double(row.hits) / n_paths;
        Interval ci = wilson_interval(row.hits, n_paths);
        row.ci_lo = ci.lo;
        row.ci_hi = ci.hi;
        rows.push_back(row);
    }
    return rows;
}

double first_passage_density(double a, double s) {
    require(a > 0.0 && s > 0.0, "first passage density needs a, s > 0");
    return a / (std::sqrt(2.0 * M_PI) * std::pow(s, 1.5)) * std::exp(-a * a / (2.0 * s));
}

double first_passage_cdf(double a, double s) {
    require(a > 0.0, "level must be positive");
    if (s <= 0.0) return 0.0;
    return std::erfc(a / std::sqrt(2.0 * s));
}

std::vector<double> simulate_hitting_times(double a, std::size_t n, double dt, double horizon,
                                           std::uint64_t seed) {
    require(a > 0.0 && dt > 0.0 && horizon > 0.0, "hitting simulation needs a, dt, horizon > 0");
    std::vector<double> out(n, std::numeric_limits<double>::infinity());
    std::size_t steps = step_count(horizon, dt);
    double sd = std::sqrt(dt);
    parallel_for(n, [&](std::size_t i) {
        Stream rng(seed, tags::hitting, i);
        double x = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            double next = x + sd * rng.normal();
            double u = rng.uniform();
            if (next >= a || u < std::exp(-2.0 * (a - x) * (a - next) / dt)) {
                // crossing time placed uniformly inside the step
                out[i] = (k + rng.uniform()) * dt;
                return;
            }
            x = next;
        }
    });
    return out;
}

Trajectory simulate_bridge(const BridgeSpec& spec, double dt, std::uint64_t seed,
                           std::uint64_t path, const KernelCalibration* calib) {
    require(spec.s > 0.0, "bridge duration must be positive");
    require(dt > 0.0 && dt < spec.s, "bridge needs 0 < dt < s");
    int d = spec.start.dim();
    require(spec.end.dim() == d, "bridge endpoints differ in dimension");
    bool exact = d == 3;
    if (!exact && (calib == nullptr || calib->d != d))
        fail(ErrorKind::KernelUnavailable,
             "no calibrated kernel for d = " + std::to_string(d));

    std::size_t n = step_count(spec.s, dt);
    double h = spec.s / n;
    Stream rng(seed, tags::bridge_path, path);
    Trajectory tr;
    tr.times.reserve(n + 1);
    tr.points.reserve(n + 1);
    tr.times.push_back(0.0);
    tr.points.push_back(spec.start);
    HPoint x = spec.start;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double tau = spec.s - k * h;
        Vec w = log_map(x, spec.end);
        double rho = w.norm();
        Vec step = gaussian(d, std::sqrt(2.0 * h), rng);
        if (rho > 0.0) {
            double g = exact ? dlog_exact_h3(tau, rho) : dlog_comparison_fn(tau, rho, d);
            step -= (2.0 * g * h / rho) * w;
        }
        x = exp_map(x, step);
        tr.points.push_back(x);
        tr.times.push_back((k + 1) * h);
    }
    tr.points.push_back(spec.end);
    tr.times.push_back(spec.s);
    return tr;
}

double path_energy(const Trajectory& traj) {
    require(traj.size() >= 2, "path energy needs at least two points");
    require(traj.points.size() == traj.times.size(), "times and points differ in length");
    double T = traj.times.back() - traj.times.front();
    require(T > 0.0, "trajectory has zero duration");
    double E = 0.0;
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        double dv = (traj.times[i + 1] - traj.times[i]) / T;
        require(dv > 0.0, "times must be strictly increasing");
        double D = distance(traj.points[i], traj.points[i + 1]);
        E += D * D / dv;
    }
    return E;
}

namespace {

struct EnergyProblem {
    int d;
    double K, dev, slack;
    bool constrained;
    HPoint x, y;

    double v_of(double a) const { return 0.01 + 0.98 / (1.0 + std::exp(-a)); }

    HPoint endpoint(const double* w) const {
        Vec u(d);
        for (int k = 0; k < d; ++k) u[k] = w[k];
        double n = u.norm();
        if (n == 0.0 || slack == 0.0) return y;
        return exp_map(y, (slack * std::tanh(n) / n) * u);
    }

    HPoint deviation_point(double v, const double* w) const {
        Vec u(d);
        for (int k = 0; k < d; ++k) u[k] = w[k];
        double n = u.norm();
        if (n == 0.0) {
            u = Vec::Zero(d);
            u[d - 1] = 1.0;
            n = 1.0;
        }
        return exp_map(geodesic_point(x, y, v), (dev / n) * u);
    }

    // parameters: [endpoint (d)] or [a, deviation direction (d), endpoint (d)]
    double energy(const double* p) const {
        if (!constrained) {
            double D = distance(x, endpoint(p));
            return D * D;
        }
        double v = v_of(p[0]);
        HPoint q = deviation_point(v, p + 1);
        HPoint z = endpoint(p + 1 + d);
        double a = distance(x, q), b = distance(q, z);
        return a * a / v + b * b / (1.0 - v);
    }

    std::size_t dim() const { return constrained ? 1 + 2 * d : d; }
};

double gsl_energy(const gsl_vector* v, void* params) {
    auto* pb = static_cast<const EnergyProblem*>(params);
    return pb->energy(v->data);
}

std::vector<double> nelder_mead(const EnergyProblem& pb, std::vector<double> start, double& fmin) {
    std::size_t n = pb.dim();
    gsl_multimin_function fn{&gsl_energy, n, const_cast<EnergyProblem*>(&pb)};
    gsl_vector* x = gsl_vector_alloc(n);
    gsl_vector* step = gsl_vector_alloc(n);
    for (std::size_t k = 0; k < n; ++k) {
        gsl_vector_set(x, k, start[k]);
        gsl_vector_set(step, k, 0.5);
    }
    gsl_multimin_fminimizer* s =
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    for (int it = 0; it < 20000; ++it) {
        if (gsl_multimin_fminimizer_iterate(s)) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-11) == GSL_SUCCESS) break;
    }
    fmin = s->fval;
    std::vector<double> best(n);
    for (std::size_t k = 0; k < n; ++k) best[k] = gsl_vector_get(s->x, k);
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(x);
    gsl_vector_free(step);
    return best;
}

}  // namespace

EnergyReport energy_excess_check(double K_star, double delta, double eta, double zeta,
                                 std::size_t n_trials, std::uint64_t seed,
                                 const EnergyOptions& opt) {
    require(K_star > 0.0 && delta > 0.0 && eta > 0.0 && zeta >= 0.0,
            "energy check needs K*, delta, eta > 0 and zeta >= 0");
    require(n_trials > 0, "n_trials must be positive");
    require(opt.d >= 2, "dimension must be >= 2");
    EnergyReport rep;
    rep.endpoint_slack = 3.0 * eta + 2.0 * K_star * zeta;
    rep.deviation = delta / 4.0;
    rep.full_constraint_ok = eta < std::min(delta / 24.0, delta * delta / (2560.0 * K_star));
    if (!(eta < delta / 24.0) || rep.endpoint_slack > delta / 8.0)
        fail(ErrorKind::ConstraintViolation,
             "need eta < delta/24 and 3 eta + 2 K zeta <= delta/8");
    if (opt.enforce_full_constraint && !rep.full_constraint_ok)
        fail(ErrorKind::ConstraintViolation, "need eta < min{delta/24, delta^2/(2560 K)}");

    Vec e1 = Vec::Zero(opt.d);
    e1[0] = 1.0;
    EnergyProblem pb{opt.d, K_star, rep.deviation, rep.endpoint_slack, opt.deviation_constraint,
                     HPoint::origin(opt.d), HPoint::polar(K_star, e1)};
    rep.bound = K_star * K_star + delta * delta / 128.0 -
                4.0 * K_star * (5.0 * eta + 2.0 * K_star * zeta);
    double m = std::max(0.0, K_star - rep.endpoint_slack);
    rep.unconstrained_min = m * m;

    double best = INFINITY;
    std::vector<double> arg;
    for (std::size_t i = 0; i < n_trials; ++i) {
        Stream rng(seed, tags::energy, i);
        std::vector<double> start(pb.dim());
        for (double& s : start) s = 2.0 * rng.normal();
        double f;
        auto p = nelder_mead(pb, start, f);
        if (f < best) {
            best = f;
            arg = p;
        }
    }
    rep.min_energy = best;
    rep.excess = best - rep.unconstrained_min;
    rep.trials = n_trials;

    // rebuild the minimiser as a sampled piecewise geodesic and re-measure it
    Trajectory tr;
    int M = std::max(opt.samples, 4);
    if (opt.deviation_constraint) {
        double v = pb.v_of(arg[0]);
        rep.best_v = v;
        HPoint q = pb.deviation_point(v, arg.data() + 1);
        HPoint z = pb.endpoint(arg.data() + 1 + opt.d);
        int k1 = std::clamp(static_cast<int>(std::lround(v * M)), 1, M - 1);
        for (int k = 0; k <= k1; ++k) {
            tr.times.push_back(v * k / k1);
            tr.points.push_back(geodesic_point(pb.x, q, double(k) / k1));
        }
        for (int k = 1; k <= M - k1; ++k) {
            tr.times.push_back(v + (1.0 - v) * k / (M - k1));
            tr.points.push_back(geodesic_point(q, z, double(k) / (M - k1)));
        }
    } else {
        HPoint z = pb.endpoint(arg.data());
        for (int k = 0; k <= M; ++k) {
            tr.times.push_back(double(k) / M);
            tr.points.push_back(geodesic_point(pb.x, z, double(k) / M));
        }
    }
    rep.discrete_energy = path_energy(tr);
    rep.holds = rep.min_energy >= rep.bound;
    return rep;
}

LdpReport bridge_ldp_decay(const HPoint& x, const HPoint& y, double delta,
                           const std::vector<double>& s_list, std::size_t n_paths,
                           std::uint64_t seed, double dt_fraction,
                           const KernelCalibration* calib) {
    require(!s_list.empty(), "no bridge durations");
    require(delta > 0.0 && delta < distance(x, y), "need 0 < delta < d(x, y)");
    require(dt_fraction > 0.0 && dt_fraction < 0.5, "dt_fraction must lie in (0, 0.5)");
    require(n_paths > 0, "n_paths must be positive");
    LdpReport rep;
    rep.dt_fraction = dt_fraction;
    double level = delta / 2.0;
    std::size_t total_hits = 0;
    for (std::size_t si = 0; si < s_list.size(); ++si) {
        double s = s_list[si];
        require(s > 0.0, "bridge durations must be positive");
        BridgeSpec spec{x, y, s};
        double dt = dt_fraction * s;
        std::size_t n = step_count(s, dt);
        std::vector<HPoint> geo(n + 1);
        for (std::size_t k = 0; k <= n; ++k) geo[k] = geodesic_point(x, y, double(k) / n);
        std::atomic<std::size_t> hits{0};
        parallel_for(n_paths, [&](std::size_t i) {
            Trajectory tr = simulate_bridge(spec, dt, seed, si * n_paths + i, calib);
            for (std::size_t k = 1; k + 1 < tr.size(); ++k) {
                if (distance(tr.points[k], geo[k]) > level) {
                    ++hits;
                    return;
                }
            }
        });
        LdpRow row;
        row.s = s;
        row.n = n_paths;
        row.hits = hits.load();
        row.p_hat = double(row.hits) / n_paths;
        Interval ci = wilson_interval(row.hits, n_paths);
        row.ci_lo = ci.lo;
        row.ci_hi = ci.hi;
        total_hits += row.hits;
        rep.rows.push_back(row);
    }
    if (total_hits == 0)
        fail(ErrorKind::AllZeroCounts,
             "no deviation events; one-sided 95% bound p <= " +
                 std::to_string(rep.rows.front().ci_hi));
    std::vector<double> xs, ys;
    for (const auto& r : rep.rows) {
        if (r.hits == 0) continue;
        xs.push_back(1.0 / r.s);
        ys.push_back(std::log(r.p_hat));
    }
    if (xs.size() >= 2) {
        rep.fit = linear_fit(xs, ys);
        rep.kappa = -rep.fit.slope;
    } else {
        rep.fit.n = static_cast<int>(xs.size());
    }
    return rep;
}

}  // namespace hypam
