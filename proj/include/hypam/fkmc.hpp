#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hypam/gaussfield.hpp"
#include "hypam/hypbm.hpp"
#include "hypam/varopt.hpp"

namespace hypam {

// ---------------------------------------------------------------------------
// Potentials seen by the Brownian paths

class Potential {
public:
    virtual ~Potential() = default;
    virtual double at(const HPoint& x) const = 0;
    // Called once per path, in path order, before any at() on that path.
    virtual void prepare(const Trajectory&) {}
    // Length scale on which the potential varies (infinite for constants).
    virtual double length_scale() const { return std::numeric_limits<double>::infinity(); }
};

class ConstantPotential : public Potential {
public:
    explicit ConstantPotential(double c) : c_(c) {}
    double at(const HPoint&) const override { return c_; }

private:
    double c_;
};

// Deterministic bump h C(d(x, c)) / sigma^2: height h at the center, zero beyond R0.
class PlantedPeak : public Potential {
public:
    PlantedPeak(SpecPtr spec, HPoint center, double h);
    double at(const HPoint& x) const override;
    double length_scale() const override { return spec_->R0(); }
    const HPoint& center() const { return center_; }

private:
    SpecPtr spec_;
    HPoint center_;
    double h_;
};

struct LatticeOptions {
    double resolution = 0.125;  // every path point ends up within this of a site
    std::size_t max_sites = 200000;
    FieldOptions field;
};

// One field realization, grown lazily: whenever a path comes farther than the
// resolution from every site, a site is added there by conditional extension.
// The value at x is the value of the nearest site (plus an optional planted
// bump). Paths are processed in order, so the realization is a function of the
// seed and the path sequence only.
class LatticePotential : public Potential {
public:
    LatticePotential(SpecPtr spec, std::uint64_t seed, const LatticeOptions& opt = {});
    // start from an existing realization (e.g. a sampled lattice)
    LatticePotential(FieldRealization field, std::uint64_t seed, const LatticeOptions& opt = {});

    void plant_peak(const HPoint& center, double h);
    void cover(const HPoint& x);
    void prepare(const Trajectory& traj) override;
    double at(const HPoint& x) const override;
    double length_scale() const override { return field_.spec->R0(); }

    int nearest_site(const HPoint& x, double* dist = nullptr) const;
    const FieldRealization& field() const { return field_; }
    double resolution() const { return opt_.resolution; }

private:
    FieldRealization field_;
    std::uint64_t seed_;
    LatticeOptions opt_;
    bool peak_ = false;
    HPoint peak_center_;
    double peak_h_ = 0.0;
};

// ---------------------------------------------------------------------------
// Feynman-Kac estimates of u(t, o) = E exp(int_0^t xi(W_s) ds)

struct FKEstimate {
    double mean = 0.0;
    double variance = 0.0;  // per path; for batched annealed runs, n_paths * se^2
    std::size_t n_paths = 0;
    double t = 0.0, dt = 0.0;
    double log_mean = 0.0;
    double se = 0.0;        // sqrt(variance / n_paths)
    std::size_t n_fields = 1;
    std::size_t n_accepted = 0;
    std::vector<double> log_weights;  // int xi per path
    std::vector<char> accepted;
};

// Trapezoid rule for int_0^t V(W_s) ds on the path grid.
double path_integral(const Potential& V, const Trajectory& traj);

// Quenched: one potential shared by all paths. Needs dt <= 0.01 t and
// dt <= length_scale^2 / 8.
FKEstimate fk_estimate(Potential& V, int d, double t, double dt, std::size_t n_paths,
                       std::uint64_t seed);

// Annealed: a fresh lazily grown field for every batch of paths_per_field paths.
// With more than one path per field the standard error comes from batch means.
FKEstimate fk_annealed(SpecPtr spec, double t, double dt, std::size_t n_fields,
                       std::size_t paths_per_field, std::uint64_t seed,
                       const LatticeOptions& opt = {});

// E_W exp(1/2 int int C(d(W_s, W_r)) ds dr), the field integrated out exactly
// (double trapezoid on the path grid).
FKEstimate fk_gaussian_moment(SpecPtr spec, double t, double dt, std::size_t n_paths,
                              std::uint64_t seed);

struct LocalizedEvents {
    double eps = 0.2;
    double K = 1.0;
    double delta_tube = 0.5;
    HPoint peak_center;
    double peak_radius = 0.5;
};

// E[exp(int xi); C and E and S] with the events checked on the path grid:
// C: d(W_s, gamma(s / eps t)) <= delta_tube for s <= eps t, gamma the geodesic o -> peak;
// E: d(W_s, peak) <= peak_radius at the first grid time s >= eps t;
// S: d(W_s, peak) <= 2 peak_radius for s >= eps t.
// Same paths as fk_estimate with the same seed. ZeroAcceptance if no path qualifies.
FKEstimate fk_localized_lower(Potential& V, int d, double t, double dt, const LocalizedEvents& ev,
                              std::size_t n_paths, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Routes through clusters

struct RouteOptions {
    // a point is in cluster c when its nearest site is a site of c and within this distance
    double site_radius = 0.125;
};

struct Route {
    std::vector<int> word;      // cluster indices c_1 .. c_m
    std::vector<double> sigma;  // entrance times
    std::vector<double> tau;    // exit times from the lambda t^{4/3} / 2 neighbourhood
    bool last_open = false;     // the last stay lasts until t (tau.back() == t)

    std::size_t size() const { return word.size(); }
    std::vector<double> stop_times() const;  // sigma_1, tau_1, sigma_2, ...
};

// Cluster containing the point, or -1.
int cluster_of(const HPoint& x, const FieldRealization& field, const std::vector<int>& site_cluster,
               double site_radius);
std::vector<int> site_cluster_map(const FieldRealization& field, const ClusterSet& clusters);

Route route_extract(const Trajectory& traj, const FieldRealization& field, const ClusterSet& clusters,
                    double lambda, double t, const RouteOptions& opt = {});

// letters a, b, ... for indices below 26, "<i>" beyond
std::string word_string(const std::vector<int>& word);

struct ReducedWord {
    std::vector<int> letters;
    std::vector<std::size_t> positions;  // 0-based index into the input word of each letter
};

ReducedWord reduce_word_positions(const std::vector<int>& word);
std::vector<int> reduce_word(const std::vector<int>& word);
std::string reduce_word(const std::string& word);

struct SplitResult {
    Route route;
    double staying_time = 0.0;
    double excursion_time = 0.0;
    double K_star = 0.0;  // t^{-4/3} max d(o, site) over the visited clusters
    double bound = 0.0;   // delta t^{5/3} + mu sqrt(K*) t^{2/3} staying_time
};

// Staying part: the union of [sigma_i, tau_i] and [sigma_m, t]; the rest is excursion.
// Times are the trapezoid weights of the grid points in each part.
SplitResult staying_excursion_split(const Trajectory& traj, const FieldRealization& field,
                                    const ClusterSet& clusters, double lambda, double delta, double mu,
                                    double t, const RouteOptions& opt = {});

// ---------------------------------------------------------------------------
// Route budget

// log int_0^t fp(a, u) e^{-c u} du, fp the first-passage density of level a.
double log_first_passage_laplace(double a, double c, double t);

struct RouteGeometry {
    std::vector<double> D;   // D_0 .. D_{m-1}: gap from the previous neighbourhood to the next cluster
    std::vector<int> word;   // c_1 .. c_m, for the reduction
    double K_star = 0.0;
};

struct RouteBudget {
    double hop_offset = 0.0;   // D-hat = D - hop_offset
    double error_term = 0.0;   // R^t
    double reduced_sum = 0.0;  // sum of D-hat over the reduced route
    double main_term = 0.0;    // L*(alpha, mu)
    double A = 0.0;            // (1-alpha) D-hat_0^2 / 4 - K* R^t t^{8/3} / 2
    double log_I = 0.0;        // log of the route integral itself
    double log_J = 0.0;        // +inf when A <= 0
    double log_bound = 0.0;    // (delta + L*) t^{5/3} + log J
    std::size_t m = 0, m_bar = 0;
};

// Evaluates the route integral I and its bound. Throws ConstraintViolation when the
// lambda/eta constraint fails; InvalidArgument for geometries outside the
// preconditions (gaps below lambda t^{4/3} / 2 or the hop offset, more than
// N-hat_lambda hops, K* beyond K0 or the triangle estimate).
RouteBudget route_budget(const RouteGeometry& g, double t, const RouteInputs& in, const ModelParams& p);

struct LongRouteTail {
    double log_F = 0.0;
    double exponent = 0.0;  // (eta N)^2 / 32 - 2 mu0 sqrt(K0)
    double log_bound = 0.0; // log F - exponent t^{5/3}
};

// F(t; eta, N) = int_{v_1 + .. + v_N < t^{-5/3}} prod (eta / 4 sqrt(pi)) v^{-3/2} e^{-eta^2 / 32 v} dv
// by an N-fold convolution on a grid. QuadratureFailure for N > max_N.
LongRouteTail long_route_tail(double eta, int N, double t, const ModelParams& p, double K0,
                              int grid = 2000, int max_N = 8);

}  // namespace hypam
