#pragma once

#include <functional>
#include <vector>

#include "hypam/common.hpp"

namespace hypam {

struct ModelParams {
    int d = 2;
    double sigma2 = 1.0;

    ModelParams() = default;
    ModelParams(int d_, double sigma2_);
    double mu0() const;               // sqrt(2 sigma^2 (d-1))
    double scale() const { return sigma2 * (d - 1); }
};

// f(eps, K) = (1-eps) sqrt(2 sigma^2 (d-1) K) - K^2 / (4 eps)
double f_eval(double eps, double K, const ModelParams& p);

struct VariationalSolution {
    double eps_star = 0.0;
    double K_star = 0.0;
    double L_star = 0.0;
    // numeric cross-check
    double eps_numeric = 0.0;
    double K_numeric = 0.0;
    double L_numeric = 0.0;
    double grid_gap = 0.0;       // max of argument and value discrepancies
    double gradient_norm = 0.0;  // central differences at the closed-form optimum
};

// Closed form, cross-validated against grid + nested golden section. Throws
// CrossValidationMismatch if they disagree by more than 1e-4 (arguments) or 1e-6 (value).
VariationalSolution optimize_f(const ModelParams& p);

struct Max2D {
    double x = 0.0, y = 0.0, value = 0.0;
};

// Maximise g(x, y) on (x0,x1) x (y0,y1): coarse grid, then golden section in x of
// the golden-section maximum in y. Assumes g(x, .) and x -> max_y g(x, y) unimodal
// near the grid optimum.
Max2D maximize_grid_golden(const std::function<double(double, double)>& g, double x0, double x1,
                           double y0, double y1, int grid = 200);

// max_{K>0, v in (0,1)} mu sqrt(K) (1-v) - alpha K^2 / (4v)
double l_star_relaxed(double alpha, double mu, const ModelParams& p);

// sqrt(2 d sigma^2) t sqrt(log t), t > e
double euclid_growth(double t, const ModelParams& p);

struct LegendreTriple {
    double H_of_rho = 0.0;  // H(rho(h)) = sigma^2 rho^2 / 2
    double L_of_h = 0.0;    // h^2 / (2 sigma^2)
    double rho_of_h = 0.0;  // h / sigma^2
    double numeric_sup = 0.0;
};

LegendreTriple legendre_triple(double h, double sigma2);

// h_R = sqrt(2 sigma^2 (d-1) R)
double peak_height(double R, const ModelParams& p);
// (h - sqrt h)^{-beta} at h = h_{K* t^{4/3}}, beta in (1/4, 1/2)
double peak_delta(double t, double K_star, const ModelParams& p, double beta = 1.0 / 3.0);

struct IneqResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = true;
};

// sum D_i^2 / u_i >= (sum D_i)^2 / sum u_i
IneqResult chain_bound(const std::vector<double>& D, const std::vector<double>& u);
// two-hop comparison, both sides exactly as printed in the source inequality
IneqResult hop_inequality(double eps1, double eps2, double eta1, double eta2, double K1, double K2,
                          const ModelParams& p);
// lhs = harmonic mean, rhs = arithmetic mean
IneqResult ha_mean_bound(const std::vector<double>& v);

struct RouteConstants {
    double N_eta = 0.0;
    double N_hat_lambda = 0.0;
    double L_delta = 0.0;
    double eta_delta = 0.0;
    double C_Q = 0.0;
    double lambda = 0.0, eta = 0.0;

    // R^t = lambda (N L (6L + 1/2) + 2L) + N L hop_offset(t) t^{-4/3}
    double error_term(double t) const;
    // distance lost per hop: 1/2 + f's tail offset + C_Q t
    double hop_offset(double t) const;
    double error_limit() const;  // t -> infinity
};

struct RouteInputs {
    double eta = 0.0;
    double lambda = 0.0;
    double delta = 0.0;
    double K0 = 0.0;
    double C_R0_hat = 0.0;
    double alpha = 0.0;  // only needed for the constraint check
    double mu = 0.0;     // idem
};

RouteConstants route_constants(const RouteInputs& in, const ModelParams& p);

// Both sides of (1-alpha)/16 (delta/mu)^4 > lambda K0 / 2 [N L (6L + 1/2) + 2L].
IneqResult lambda_eta_constraint(const RouteInputs& in, const ModelParams& p);
// Throws ConstraintViolation when the constraint fails or 0 < lambda < eta < eta_delta is broken.
void require_lambda_eta(const RouteInputs& in, const ModelParams& p);

// For fixed eta, bisection on lambda (the constraint's right side grows linearly in
// lambda) for the largest feasible lambda; returns lambda_frac of it. eta defaults to
// eta_frac * eta_delta. Throws ConstraintViolation if nothing is feasible.
RouteInputs feasible_lambda_eta(RouteInputs in, const ModelParams& p, double eta_frac = 0.5,
                                double lambda_frac = 0.5);

}  // namespace hypam
