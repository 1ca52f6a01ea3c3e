#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "hypam/hypgeo.hpp"

namespace hypam {

// Stationary isotropic covariance C(rho) = c * (k * k)(rho): the autocorrelation of a
// radial bump k supported in [0, R0/2], so C is PSD and vanishes beyond R0.
// Tabulated once, evaluated by a cubic B-spline.
class CovarianceSpec {
public:
    // shapes: "poly3" (1-(r/a)^2)^3 and "poly4" (1-(r/a)^2)^4 are C^2 with compact
    // support; "poly2" (only C^1) and "gaussian" (not compact) are rejected.
    static std::shared_ptr<const CovarianceSpec> make(double sigma2, double R0, const std::string& shape,
                                                      int d, int table_size = 1025);

    double sigma2() const { return sigma2_; }
    double R0() const { return R0_; }
    int dim() const { return d_; }
    const std::string& shape() const { return shape_; }

    double operator()(double rho) const;
    double derivative(double rho) const;

    // unnormalised convolution integral at rho, straight from quadrature
    double raw(double rho) const;

private:
    CovarianceSpec() = default;
    double bump(double r) const;

    double sigma2_ = 1.0, R0_ = 1.0, a_ = 0.5;
    int d_ = 2;
    std::string shape_;
    int power_ = 3;
    double norm_ = 1.0;  // raw(0)
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;  // C / sigma2 on [0, R0]
};

using SpecPtr = std::shared_ptr<const CovarianceSpec>;

struct FieldRealization {
    SpecPtr spec;
    std::vector<HPoint> sites;
    Vec values;
    // Cholesky factor of the site covariance for one-shot draws (empty once the
    // realization was grown by conditional extension).
    Mat chol;
    double jitter = 0.0;
    std::shared_ptr<PointIndex> index;  // all sites, for conditioning lookups

    std::size_t size() const { return sites.size(); }
};

struct FieldOptions {
    std::size_t dense_cap = 2500;         // above this, sites are simulated sequentially
    std::size_t max_conditioning = 2000;  // per-site conditioning set cap (BudgetExceeded)
};

// Dense covariance on the sites and its lower Cholesky factor, jitter raised in
// decades up to 1e-8 sigma^2 (FactorizationFailure beyond).
Mat covariance_matrix(const CovarianceSpec& spec, const std::vector<HPoint>& sites);
Mat cholesky_with_jitter(Mat K, double sigma2, double* jitter_used = nullptr);

FieldRealization sample_field(SpecPtr spec, const std::vector<HPoint>& sites, std::uint64_t seed,
                              const FieldOptions& opt = {});

// Conditional simulation of new sites given the realization; each new site conditions
// on the already simulated sites within R0 (including earlier new sites). Exact for
// every pair within R0 of each other; cross-covariances beyond R0 are left to the
// kriging predictor. Deterministic in (field size, seed).
FieldRealization extend_field(const FieldRealization& field, const std::vector<HPoint>& new_sites,
                              std::uint64_t seed, const FieldOptions& opt = {});
// Same, growing `field` itself; the one-shot Cholesky factor is dropped.
void extend_field_in_place(FieldRealization& field, const std::vector<HPoint>& new_sites,
                           std::uint64_t seed, const FieldOptions& opt = {});

// mean (h / sigma^2) C(d(x, o)), same covariance
FieldRealization tilted_sample(SpecPtr spec, const std::vector<HPoint>& sites, double h,
                               std::uint64_t seed, const FieldOptions& opt = {});

// Field sites for Q_R: greedy packing with centers more than `spacing` apart.
std::vector<HPoint> lattice_sites(const Region& region, double spacing, std::uint64_t seed,
                                  std::size_t cap = 0);

struct MaxScanRow {
    double R = 0.0;
    std::size_t n_sites = 0;
    double mean_max = 0.0;
    double se_max = 0.0;
    double max_max = 0.0;
    double threshold = 0.0;       // sqrt(2 sigma^2 (d-1)(1+eps) R)
    double exceed_fraction = 0.0; // fraction of reps with max |xi| > threshold
    std::vector<double> maxima;   // per rep
    bool budget_exceeded = false;
};

struct MaxScanOptions {
    std::vector<double> R_list;
    double spacing = 0.25;
    int n_reps = 100;
    double eps = 0.5;
    std::size_t site_cap = 2500;
    bool stop_on_budget = true;  // false: mark rows budget_exceeded and continue
};

std::vector<MaxScanRow> max_scan(SpecPtr spec, const MaxScanOptions& opt, std::uint64_t seed);

struct BorellRow {
    double lambda = 0.0;
    double empirical = 0.0;
    double bound = 0.0;
    bool holds = true;
};

// P(max > lambda) against 4 exp(-(lambda - E)^2 / 2 sigma^2) for each lambda > E, with
// E the empirical mean of the maxima.
std::vector<BorellRow> borell_check(const std::vector<double>& maxima, double sigma2, int n_lambda = 12);

// Tail constant C of P(sup_{Q_R0} xi > lambda) ~ exp(-C lambda^2): slope of log P-hat
// against lambda^2 over the upper empirical quantiles.
double estimate_tail_constant(SpecPtr spec, double spacing, int n_reps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Islands and clusters

struct IslandSet {
    double threshold = 0.0;    // delta t^{2/3}
    double link_radius = 0.0;  // 2h: sites within this distance are connected
    std::vector<std::vector<int>> islands;  // site indices, each sorted ascending
};

IslandSet detect_islands(const FieldRealization& field, double delta, double t, double h);

struct Cluster {
    std::vector<int> islands;  // indices into IslandSet::islands, ascending
    std::vector<int> sites;    // union of member sites, ascending
    int center = -1;           // member site minimising the max distance to the others
    double diameter = 0.0;
};

struct ClusterSet {
    double link = 0.0;  // eta t^{4/3}
    std::vector<Cluster> clusters;
};

// Islands closer than eta t^{4/3} (site to site) are merged transitively.
ClusterSet build_clusters(const std::vector<HPoint>& sites, const IslandSet& islands, double eta, double t);

struct ClusterConstants {
    double L_delta = 0.0;
    double eta_delta = 0.0;
};

ClusterConstants cluster_constants(double delta, int d, double K0, double C_R0_hat);

// Fraction of replicates in which some ball of radius sqrt(eta) t^{4/3} (centred at a
// super-level site) holds >= L super-level sites pairwise >= 9 R0 apart. The region is
// held fixed over t so that the experiment stays at desk scale.
struct ClusterPropertyOptions {
    Region region;
    double spacing = 0.25;
    double delta = 0.5;
    double eta = 0.05;
    int L = 2;
    int n_reps = 50;
};

double cluster_property_frequency(SpecPtr spec, const ClusterPropertyOptions& opt, double t, std::uint64_t seed);

struct GradientRow {
    double R = 0.0;
    std::size_t n_sites = 0;
    double mean_grad_max = 0.0;
};

// Finite-difference gradient proxy: max over neighbouring lattice pairs of
// |xi(x) - xi(y)| / d(x, y).
std::vector<GradientRow> gradient_max_scan(SpecPtr spec, const std::vector<double>& R_list, double spacing,
                                           int n_reps, std::uint64_t seed, std::size_t site_cap = 2500);

// Highest site of the realization inside the annulus inner <= d(x, o) <= outer, -1 if none.
int find_peak(const FieldRealization& field, double inner, double outer);

}  // namespace hypam
