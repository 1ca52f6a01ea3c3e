#include "hypam/varopt.hpp"

#include <algorithm>
#include <cmath>

#include "hypam/gaussfield.hpp"
#include "hypam/smoothing.hpp"

namespace hypam {

ModelParams::ModelParams(int d_, double sigma2_) : d(d_), sigma2(sigma2_) {
    require(d >= 2, "dimension must be >= 2");
    require(sigma2 > 0.0, "sigma2 must be positive");
}

double ModelParams::mu0() const { return std::sqrt(2.0 * sigma2 * (d - 1)); }

double f_eval(double eps, double K, const ModelParams& p) {
    require(eps > 0.0 && eps < 1.0, "f: eps must lie in (0,1)");
    require(K > 0.0, "f: K must be positive");
    return (1.0 - eps) * std::sqrt(2.0 * p.sigma2 * (p.d - 1) * K) - K * K / (4.0 * eps);
}

namespace {

const double kGolden = 0.5 * (std::sqrt(5.0) - 1.0);

template <class F>
std::pair<double, double> golden_max(F&& g, double a, double b, int iters = 120) {
    double c = b - kGolden * (b - a), e = a + kGolden * (b - a);
    double gc = g(c), ge = g(e);
    for (int it = 0; it < iters && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
        if (gc > ge) {
            b = e; e = c; ge = gc;
            c = b - kGolden * (b - a); gc = g(c);
        } else {
            a = c; c = e; gc = ge;
            e = a + kGolden * (b - a); ge = g(e);
        }
    }
    double x = 0.5 * (a + b);
    return {x, g(x)};
}

// 1D: grid then golden refinement in the neighbouring cells
template <class F>
std::pair<double, double> grid_golden_max(F&& g, double a, double b, int n) {
    double h = (b - a) / n;
    int best = 0;
    double bv = -INFINITY;
    for (int i = 0; i < n; ++i) {
        double v = g(a + (i + 0.5) * h);
        if (v > bv) { bv = v; best = i; }
    }
    double lo = std::max(a, a + (best - 0.5) * h), hi = std::min(b, a + (best + 1.5) * h);
    return golden_max(g, lo, hi);
}

}  // namespace

Max2D maximize_grid_golden(const std::function<double(double, double)>& g, double x0, double x1,
                           double y0, double y1, int grid) {
    auto inner = [&](double x) {
        return grid_golden_max([&](double y) { return g(x, y); }, y0, y1, grid);
    };
    auto [x, v] = grid_golden_max([&](double xx) { return inner(xx).second; }, x0, x1, grid);
    auto [y, v2] = inner(x);
    (void)v;
    return {x, y, v2};
}

VariationalSolution optimize_f(const ModelParams& p) {
    const double s = p.scale();
    VariationalSolution sol;
    sol.eps_star = 0.2;
    sol.K_star = std::pow(2.0, 5.0 / 3.0) / std::pow(5.0, 4.0 / 3.0) * std::cbrt(s);
    sol.L_star = 3.0 * std::pow(2.0, 4.0 / 3.0) / std::pow(5.0, 5.0 / 3.0) * std::pow(s, 2.0 / 3.0);

    // K range: f < 0 once K^{3/2} > mu0, so (0, 2 mu0^{2/3}) holds the optimum
    double Kmax = 2.0 * std::pow(p.mu0(), 2.0 / 3.0);
    auto g = [&](double eps, double K) { return f_eval(eps, K, p); };
    Max2D m = maximize_grid_golden(g, 1e-9, 1.0 - 1e-9, 1e-12, Kmax, 200);
    sol.eps_numeric = m.x;
    sol.K_numeric = m.y;
    sol.L_numeric = m.value;

    double darg = std::max(std::abs(m.x - sol.eps_star), std::abs(m.y - sol.K_star));
    double dval = std::abs(m.value - sol.L_star);
    sol.grid_gap = std::max(darg, dval);

    const double he = 1e-6, hk = 1e-6 * std::max(1.0, sol.K_star);
    double ge = (g(sol.eps_star + he, sol.K_star) - g(sol.eps_star - he, sol.K_star)) / (2 * he);
    double gk = (g(sol.eps_star, sol.K_star + hk) - g(sol.eps_star, sol.K_star - hk)) / (2 * hk);
    sol.gradient_norm = std::hypot(ge, gk);

    if (darg > 1e-4 || dval > 1e-6)
        fail(ErrorKind::CrossValidationMismatch, "numeric optimum of f disagrees with the closed form");
    return sol;
}

double l_star_relaxed(double alpha, double mu, const ModelParams& p) {
    require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0,1]");
    require(mu >= p.mu0() * (1.0 - 1e-12), "mu must be >= mu0");
    // value is negative once alpha K^2 / 4 > mu sqrt(K), so K < (4 mu / alpha)^{2/3}
    double Kmax = std::pow(4.0 * mu / alpha, 2.0 / 3.0);
    auto g = [&](double v, double K) { return mu * std::sqrt(K) * (1.0 - v) - alpha * K * K / (4.0 * v); };
    return maximize_grid_golden(g, 1e-9, 1.0 - 1e-9, 1e-12, Kmax, 200).value;
}

double euclid_growth(double t, const ModelParams& p) {
    require(t > M_E, "euclid_growth needs t > e");
    return std::sqrt(2.0 * p.d * p.sigma2) * t * std::sqrt(std::log(t));
}

LegendreTriple legendre_triple(double h, double sigma2) {
    require(h >= 0.0, "h must be >= 0");
    require(sigma2 > 0.0, "sigma2 must be positive");
    LegendreTriple r;
    r.rho_of_h = h / sigma2;
    r.H_of_rho = 0.5 * sigma2 * r.rho_of_h * r.rho_of_h;
    r.L_of_h = h * h / (2.0 * sigma2);
    if (h > 0.0) {
        auto g = [&](double rho) { return rho * h - 0.5 * sigma2 * rho * rho; };
        r.numeric_sup = grid_golden_max(g, 0.0, 4.0 * h / sigma2 + 1.0, 400).second;
    }
    return r;
}

double peak_height(double R, const ModelParams& p) {
    require(R > 0.0, "peak_height needs R > 0");
    return std::sqrt(2.0 * p.sigma2 * (p.d - 1) * R);
}

double peak_delta(double t, double K_star, const ModelParams& p, double beta) {
    require(beta > 0.25 && beta < 0.5, "beta must lie in (1/4, 1/2)");
    require(t > 0.0 && K_star > 0.0, "peak_delta needs t, K* > 0");
    double h = peak_height(K_star * std::pow(t, 4.0 / 3.0), p);
    double ht = h - std::sqrt(h);
    require(ht > 0.0, "peak height below 1: h - sqrt(h) <= 0");
    return std::pow(ht, -beta);
}

IneqResult chain_bound(const std::vector<double>& D, const std::vector<double>& u) {
    if (D.size() != u.size()) fail(ErrorKind::LengthMismatch, "chain_bound: D and u differ in length");
    if (D.empty()) fail(ErrorKind::EmptyInput, "chain_bound: no terms");
    double lhs = 0.0, sd = 0.0, su = 0.0;
    for (std::size_t i = 0; i < D.size(); ++i) {
        require(D[i] > 0.0 && u[i] > 0.0, "chain_bound: entries must be positive");
        lhs += D[i] * D[i] / u[i];
        sd += D[i];
        su += u[i];
    }
    double rhs = sd * sd / su;
    return {lhs, rhs, lhs >= rhs * (1.0 - 1e-12)};
}

IneqResult hop_inequality(double eps1, double eps2, double eta1, double eta2, double K1, double K2,
                          const ModelParams& p) {
    if (std::abs(eps1 + eps2 + eta1 + eta2 - 1.0) > 1e-12)
        fail(ErrorKind::ConstraintViolation, "hop_inequality: eps1+eps2+eta1+eta2 must equal 1");
    if (!(eps1 > 0 && eps2 > 0 && eta1 >= 0 && eta2 >= 0))
        fail(ErrorKind::ConstraintViolation, "hop_inequality: time fractions must be positive");
    if (!(K1 > 0.0 && K1 < K2)) fail(ErrorKind::ConstraintViolation, "hop_inequality: need 0 < K1 < K2");
    double smu = std::sqrt(p.mu0());
    double lhs = smu * (eta1 * std::sqrt(K1) + eta2 * std::sqrt(K2)) - K1 * K1 / (4.0 * eps1 * eps1) -
                 (K2 - K1) * (K2 - K1) / (4.0 * eps2 * eps2);
    double rhs = smu * (1.0 - eps1 - eps2) * std::sqrt(K2) - K2 * K2 / (4.0 * (eps1 + eps2));
    return {lhs, rhs, lhs <= rhs + 1e-12 * (1.0 + std::abs(rhs))};
}

IneqResult ha_mean_bound(const std::vector<double>& v) {
    if (v.empty()) fail(ErrorKind::EmptyInput, "ha_mean_bound: no terms");
    double inv = 0.0, sum = 0.0;
    for (double x : v) {
        require(x > 0.0, "ha_mean_bound: entries must be positive");
        inv += 1.0 / x;
        sum += x;
    }
    double n = v.size();
    double hm = n / inv, am = sum / n;
    return {hm, am, hm <= am * (1.0 + 1e-12)};
}

double RouteConstants::error_term(double t) const {
    return error_limit() + N_eta * L_delta * hop_offset(t) * std::pow(t, -4.0 / 3.0);
}

double RouteConstants::hop_offset(double t) const { return 0.5 + Smoothing::tail_offset + C_Q * t; }

double RouteConstants::error_limit() const {
    return lambda * (N_eta * L_delta * (6.0 * L_delta + 0.5) + 2.0 * L_delta);
}

RouteConstants route_constants(const RouteInputs& in, const ModelParams& p) {
    require(in.eta > 0.0 && in.lambda > 0.0, "route_constants: lambda, eta must be positive");
    require(in.K0 > 0.0 && in.delta > 0.0 && in.C_R0_hat > 0.0, "route_constants: K0, delta, C must be positive");
    RouteConstants rc;
    double root = std::sqrt(64.0 * p.mu0() * std::sqrt(in.K0));
    rc.N_eta = root / in.eta;
    rc.N_hat_lambda = 0.5 * (1.0 + root / (0.5 * in.lambda));
    ClusterConstants cc = cluster_constants(in.delta, p.d, in.K0, in.C_R0_hat);
    rc.L_delta = cc.L_delta;
    rc.eta_delta = cc.eta_delta;
    rc.C_Q = smoothing_drift_bound(p.d);
    rc.lambda = in.lambda;
    rc.eta = in.eta;
    return rc;
}

IneqResult lambda_eta_constraint(const RouteInputs& in, const ModelParams& p) {
    require(in.alpha > 0.0 && in.alpha < 1.0, "constraint needs alpha in (0,1)");
    require(in.mu > 0.0, "constraint needs mu > 0");
    RouteConstants rc = route_constants(in, p);
    double L = rc.L_delta;
    double lhs = (1.0 - in.alpha) / 16.0 * std::pow(in.delta / in.mu, 4);
    double rhs = 0.5 * in.lambda * in.K0 * (rc.N_eta * L * (6.0 * L + 0.5) + 2.0 * L);
    return {lhs, rhs, lhs > rhs};
}

void require_lambda_eta(const RouteInputs& in, const ModelParams& p) {
    RouteConstants rc = route_constants(in, p);
    if (!(in.lambda < in.eta && in.eta < rc.eta_delta))
        fail(ErrorKind::ConstraintViolation,
             "need 0 < lambda < eta < eta_delta (eta_delta = " + std::to_string(rc.eta_delta) + ")");
    if (!lambda_eta_constraint(in, p).holds)
        fail(ErrorKind::ConstraintViolation, "lambda/eta constraint (1-alpha)/16 (delta/mu)^4 > ... fails");
}

RouteInputs feasible_lambda_eta(RouteInputs in, const ModelParams& p, double eta_frac, double lambda_frac) {
    require(eta_frac > 0.0 && eta_frac < 1.0 && lambda_frac > 0.0 && lambda_frac < 1.0,
            "fractions must lie in (0,1)");
    in.lambda = 1.0;  // placeholder so route_constants accepts the input
    if (in.eta <= 0.0) {
        in.eta = 1.0;
        in.eta = eta_frac * route_constants(in, p).eta_delta;
    }
    auto ok = [&](double lam) {
        RouteInputs r = in;
        r.lambda = lam;
        return lambda_eta_constraint(r, p).holds;
    };
    double lo = 0.0, hi = in.eta;
    if (ok(hi)) {
        lo = hi;
    } else {
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (ok(mid)) lo = mid; else hi = mid;
        }
    }
    if (!(lo > 0.0)) fail(ErrorKind::ConstraintViolation, "no feasible lambda for this eta");
    in.lambda = lambda_frac * lo;
    require_lambda_eta(in, p);
    return in;
}

}  // namespace hypam
