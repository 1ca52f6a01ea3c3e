#include "hypam/fkmc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hypam/parallel.hpp"
#include "hypam/rng.hpp"
#include "hypam/stats.hpp"

namespace hypam {

PlantedPeak::PlantedPeak(SpecPtr spec, HPoint center, double h)
    : spec_(std::move(spec)), center_(std::move(center)), h_(h) {
    require(spec_ != nullptr, "null covariance spec");
}

double PlantedPeak::at(const HPoint& x) const {
    return h_ * (*spec_)(distance(x, center_)) / spec_->sigma2();
}

LatticePotential::LatticePotential(SpecPtr spec, std::uint64_t seed, const LatticeOptions& opt)
    : seed_(seed), opt_(opt) {
    require(spec != nullptr, "null covariance spec");
    require(opt.resolution > 0.0, "lattice resolution must be positive");
    field_.spec = spec;
    field_.index = std::make_shared<PointIndex>(spec->dim(), spec->R0());
}

LatticePotential::LatticePotential(FieldRealization field, std::uint64_t seed, const LatticeOptions& opt)
    : field_(std::move(field)), seed_(seed), opt_(opt) {
    require(field_.spec != nullptr, "null covariance spec");
    require(opt.resolution > 0.0, "lattice resolution must be positive");
    if (!field_.index) {
        field_.index = std::make_shared<PointIndex>(field_.spec->dim(), field_.spec->R0());
        for (const auto& s : field_.sites) field_.index->add(s);
    }
}

void LatticePotential::plant_peak(const HPoint& center, double h) {
    peak_ = true;
    peak_center_ = center;
    peak_h_ = h;
}

void LatticePotential::cover(const HPoint& x) {
    if (field_.index->any_within(x, opt_.resolution)) return;
    if (field_.size() >= opt_.max_sites)
        fail(ErrorKind::BudgetExceeded, "lazy field passed " + std::to_string(opt_.max_sites) + " sites");
    extend_field_in_place(field_, {x}, seed_, opt_.field);
}

void LatticePotential::prepare(const Trajectory& traj) {
    for (const auto& x : traj.points) cover(x);
}

int LatticePotential::nearest_site(const HPoint& x, double* dist) const { return field_.index->nearest(x, dist); }

double LatticePotential::at(const HPoint& x) const {
    int j = field_.index->nearest(x);
    require(j >= 0, "lattice potential has no sites yet");
    double v = field_.values[j];
    if (peak_) v += peak_h_ * (*field_.spec)(distance(field_.sites[j], peak_center_)) / field_.spec->sigma2();
    return v;
}

double path_integral(const Potential& V, const Trajectory& traj) {
    const std::size_t n = traj.size();
    if (n < 2) return 0.0;
    double s = 0.0, prev = V.at(traj.points[0]);
    for (std::size_t k = 1; k < n; ++k) {
        double cur = V.at(traj.points[k]);
        s += 0.5 * (traj.times[k] - traj.times[k - 1]) * (prev + cur);
        prev = cur;
    }
    return s;
}

namespace {

constexpr std::size_t kBlock = 256;

void check_step(double t, double dt, double scale) {
    require(t >= 0.0 && dt > 0.0, "need t >= 0 and dt > 0");
    if (t == 0.0) return;
    require(dt <= 0.01 * t * (1 + 1e-12), "dt must be <= 0.01 t");
    require(dt <= scale * scale / 8.0 * (1 + 1e-12), "dt must be <= R0^2 / 8");
}

void summarize(FKEstimate& e) {
    const std::size_t n = e.log_weights.size();
    e.n_paths = n;
    std::vector<double> w(n);
    e.n_accepted = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool ok = e.accepted.empty() || e.accepted[i];
        w[i] = ok ? std::exp(e.log_weights[i]) : 0.0;
        e.n_accepted += ok;
    }
    Moments m = moments(w);
    e.mean = m.mean;
    e.variance = n > 1 ? m.var : 0.0;
    e.se = std::sqrt(e.variance / n);
    e.log_mean = std::log(e.mean);
}

// Runs paths [first, first + n): trajectories in parallel, field preparation in
// path order, weights in parallel.
template <class Post>
void run_block(Potential& V, int d, double t, double dt, std::uint64_t seed, std::size_t first,
               std::size_t n, std::vector<double>& lw, Post&& post) {
    for (std::size_t b0 = 0; b0 < n; b0 += kBlock) {
        std::size_t nb = std::min(kBlock, n - b0);
        std::vector<Trajectory> tr(nb);
        parallel_for(nb, [&](std::size_t i) { tr[i] = simulate_bm(d, t, dt, seed, first + b0 + i); });
        for (auto& x : tr) V.prepare(x);
        parallel_for(nb, [&](std::size_t i) {
            lw[first + b0 + i] = path_integral(V, tr[i]);
            post(first + b0 + i, tr[i]);
        });
    }
}

}  // namespace

FKEstimate fk_estimate(Potential& V, int d, double t, double dt, std::size_t n_paths, std::uint64_t seed) {
    require(n_paths >= 1, "need at least one path");
    check_step(t, dt, V.length_scale());
    FKEstimate e;
    e.t = t;
    e.dt = dt;
    e.log_weights.assign(n_paths, 0.0);
    run_block(V, d, t, dt, seed, 0, n_paths, e.log_weights, [](std::size_t, const Trajectory&) {});
    summarize(e);
    return e;
}

FKEstimate fk_annealed(SpecPtr spec, double t, double dt, std::size_t n_fields, std::size_t paths_per_field,
                       std::uint64_t seed, const LatticeOptions& opt) {
    require(spec != nullptr, "null covariance spec");
    require(n_fields >= 1 && paths_per_field >= 1, "need at least one field and one path");
    check_step(t, dt, spec->R0());
    FKEstimate e;
    e.t = t;
    e.dt = dt;
    e.n_fields = n_fields;
    e.log_weights.assign(n_fields * paths_per_field, 0.0);
    for (std::size_t b = 0; b < n_fields; ++b) {
        Stream s(seed, tags::fk_field, b);
        std::uint64_t fseed = (std::uint64_t(s()) << 32) | s();
        LatticePotential V(spec, fseed, opt);
        run_block(V, spec->dim(), t, dt, seed, b * paths_per_field, paths_per_field, e.log_weights,
                  [](std::size_t, const Trajectory&) {});
    }
    summarize(e);
    if (paths_per_field > 1 && n_fields > 1) {
        std::vector<double> bm(n_fields, 0.0);
        for (std::size_t b = 0; b < n_fields; ++b) {
            for (std::size_t i = 0; i < paths_per_field; ++i)
                bm[b] += std::exp(e.log_weights[b * paths_per_field + i]);
            bm[b] /= paths_per_field;
        }
        Moments m = moments(bm);
        e.se = std::sqrt(m.var / n_fields);
        e.variance = e.se * e.se * e.n_paths;
    }
    return e;
}

FKEstimate fk_gaussian_moment(SpecPtr spec, double t, double dt, std::size_t n_paths, std::uint64_t seed) {
    require(spec != nullptr, "null covariance spec");
    require(n_paths >= 1, "need at least one path");
    check_step(t, dt, spec->R0());
    FKEstimate e;
    e.t = t;
    e.dt = dt;
    e.log_weights.assign(n_paths, 0.0);
    const CovarianceSpec& C = *spec;
    parallel_for(n_paths, [&](std::size_t i) {
        Trajectory tr = simulate_bm(spec->dim(), t, dt, seed, i);
        const std::size_t n = tr.size();
        if (n < 2) return;
        std::vector<double> w(n, 0.0);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            double h = tr.times[k + 1] - tr.times[k];
            w[k] += 0.5 * h;
            w[k + 1] += 0.5 * h;
        }
        double q = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double row = 0.0;
            for (std::size_t k = j + 1; k < n; ++k) row += w[k] * C(distance(tr.points[j], tr.points[k]));
            q += w[j] * (w[j] * C(0.0) + 2.0 * row);
        }
        e.log_weights[i] = 0.5 * q;
    });
    summarize(e);
    return e;
}

FKEstimate fk_localized_lower(Potential& V, int d, double t, double dt, const LocalizedEvents& ev,
                              std::size_t n_paths, std::uint64_t seed) {
    require(n_paths >= 1, "need at least one path");
    require(ev.eps > 0.0 && ev.eps < 1.0, "eps must lie in (0,1)");
    require(ev.delta_tube > 0.0 && ev.peak_radius > 0.0, "tube and peak radius must be positive");
    require(ev.peak_center.dim() == d, "peak center has the wrong dimension");
    check_step(t, dt, V.length_scale());
    const HPoint o = HPoint::origin(d);
    const double dist_c = distance(o, ev.peak_center);
    const double target = ev.K * std::pow(t, 4.0 / 3.0);
    require(std::abs(dist_c - target) <= 0.1 * target + ev.delta_tube,
            "peak center is not at distance ~ K t^{4/3} from o");

    FKEstimate e;
    e.t = t;
    e.dt = dt;
    e.log_weights.assign(n_paths, 0.0);
    e.accepted.assign(n_paths, 0);
    const double t_enter = ev.eps * t;
    run_block(V, d, t, dt, seed, 0, n_paths, e.log_weights, [&](std::size_t i, const Trajectory& tr) {
        bool ok = true, entered = false;
        for (std::size_t k = 0; k < tr.size() && ok; ++k) {
            double s = tr.times[k];
            const HPoint& x = tr.points[k];
            if (s < t_enter) {
                if (std::isfinite(ev.delta_tube))
                    ok = distance(x, geodesic_point(o, ev.peak_center, s / t_enter)) <= ev.delta_tube;
            } else {
                double r = distance(x, ev.peak_center);
                if (!entered) {
                    ok = r <= ev.peak_radius;
                    entered = true;
                } else {
                    ok = r <= 2.0 * ev.peak_radius;
                }
            }
        }
        e.accepted[i] = ok;
    });
    summarize(e);
    if (e.n_accepted == 0) {
        std::ostringstream os;
        os << "no path satisfied the localization events; acceptance probability < " << 3.0 / n_paths
           << " at 95%";
        fail(ErrorKind::ZeroAcceptance, os.str());
    }
    return e;
}

// ---------------------------------------------------------------------------

std::vector<double> Route::stop_times() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < word.size(); ++i) {
        out.push_back(sigma[i]);
        out.push_back(tau[i]);
    }
    return out;
}

std::vector<int> site_cluster_map(const FieldRealization& field, const ClusterSet& clusters) {
    std::vector<int> m(field.size(), -1);
    for (std::size_t c = 0; c < clusters.clusters.size(); ++c)
        for (int s : clusters.clusters[c].sites) m.at(s) = static_cast<int>(c);
    return m;
}

int cluster_of(const HPoint& x, const FieldRealization& field, const std::vector<int>& site_cluster,
               double site_radius) {
    if (!field.index || field.size() == 0) return -1;
    double dist = 0.0;
    int j = field.index->nearest(x, &dist);
    if (j < 0 || dist > site_radius) return -1;
    return site_cluster[j];
}

namespace {

bool within_cluster(const HPoint& x, const FieldRealization& field, const Cluster& c, double r) {
    for (int s : c.sites)
        if (distance(x, field.sites[s]) <= r) return true;
    return false;
}

}  // namespace

Route route_extract(const Trajectory& traj, const FieldRealization& field, const ClusterSet& clusters,
                    double lambda, double t, const RouteOptions& opt) {
    require(lambda > 0.0 && t > 0.0, "lambda and t must be positive");
    const double nbhd = 0.5 * lambda * std::pow(t, 4.0 / 3.0);
    require(opt.site_radius < nbhd, "site radius must be below the cluster neighbourhood radius");
    auto sc = site_cluster_map(field, clusters);
    Route r;
    const std::size_t n = traj.size();
    std::size_t k = 0;
    while (k < n) {
        int c = -1;
        while (k < n && (c = cluster_of(traj.points[k], field, sc, opt.site_radius)) < 0) ++k;
        if (k >= n || traj.times[k] >= t) break;
        r.word.push_back(c);
        r.sigma.push_back(traj.times[k]);
        ++k;
        while (k < n && within_cluster(traj.points[k], field, clusters.clusters[c], nbhd)) ++k;
        if (k >= n) {
            r.tau.push_back(t);
            r.last_open = true;
            break;
        }
        r.tau.push_back(traj.times[k]);
    }
    return r;
}

std::string word_string(const std::vector<int>& word) {
    std::string s;
    for (int c : word) {
        if (c >= 0 && c < 26) s += static_cast<char>('a' + c);
        else s += "<" + std::to_string(c) + ">";
    }
    return s;
}

ReducedWord reduce_word_positions(const std::vector<int>& word) {
    if (word.empty()) fail(ErrorKind::EmptyInput, "cannot reduce an empty word");
    ReducedWord r;
    std::size_t pos = 0;
    while (pos < word.size()) {
        std::size_t last = pos;
        for (std::size_t j = pos; j < word.size(); ++j)
            if (word[j] == word[pos]) last = j;
        r.letters.push_back(word[last]);
        r.positions.push_back(last);
        pos = last + 1;
    }
    return r;
}

std::vector<int> reduce_word(const std::vector<int>& word) { return reduce_word_positions(word).letters; }

std::string reduce_word(const std::string& word) {
    std::vector<int> w(word.begin(), word.end());
    auto r = reduce_word(w);
    return std::string(r.begin(), r.end());
}

SplitResult staying_excursion_split(const Trajectory& traj, const FieldRealization& field,
                                    const ClusterSet& clusters, double lambda, double delta, double mu,
                                    double t, const RouteOptions& opt) {
    require(delta > 0.0 && mu > 0.0, "delta and mu must be positive");
    SplitResult s;
    s.route = route_extract(traj, field, clusters, lambda, t, opt);
    const Route& r = s.route;
    const std::size_t n = traj.size();
    for (std::size_t k = 0; k < n; ++k) {
        double w = 0.0;
        if (k > 0) w += 0.5 * (traj.times[k] - traj.times[k - 1]);
        if (k + 1 < n) w += 0.5 * (traj.times[k + 1] - traj.times[k]);
        double time = traj.times[k];
        bool stay = false;
        if (!r.word.empty()) {
            stay = time >= r.sigma.back();
            for (std::size_t i = 0; i + 1 < r.word.size() && !stay; ++i)
                stay = time >= r.sigma[i] && time < r.tau[i];
        }
        (stay ? s.staying_time : s.excursion_time) += w;
    }
    HPoint o = HPoint::origin(traj.points.empty() ? 2 : traj.points[0].dim());
    double far = 0.0;
    for (int c : r.word)
        for (int site : clusters.clusters[c].sites) far = std::max(far, distance(o, field.sites[site]));
    s.K_star = far * std::pow(t, -4.0 / 3.0);
    s.bound = delta * std::pow(t, 5.0 / 3.0) + mu * std::sqrt(s.K_star) * std::pow(t, 2.0 / 3.0) * s.staying_time;
    return s;
}

// ---------------------------------------------------------------------------

double log_first_passage_laplace(double a, double c, double t) {
    require(a > 0.0 && c >= 0.0 && t > 0.0, "need a > 0, c >= 0, t > 0");
    auto g = [&](double u) {
        return std::log(a) - 0.5 * std::log(2.0 * M_PI) - 1.5 * std::log(u) - a * a / (2.0 * u) - c * u;
    };
    double peak = c > 0.0 ? (-1.5 + std::sqrt(2.25 + 2.0 * c * a * a)) / (2.0 * c) : a * a / 3.0;
    peak = std::min(peak, t);
    const double gmax = g(peak);
    auto f = [&](double u) { return u <= 0.0 ? 0.0 : std::exp(g(u) - gmax); };
    // width of the peak: curvature at an interior peak, slope at the right end
    double g1 = -1.5 / peak + a * a / (2.0 * peak * peak) - c;
    double g2 = 1.5 / (peak * peak) - a * a / (peak * peak * peak);
    double w = peak < t ? 1.0 / std::sqrt(-g2) : 1.0 / g1;
    if (!(w > 0.0) || !std::isfinite(w)) w = peak;
    w = std::min(w, peak);
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    // geometric segments outwards from the peak, stopping once the integrand is negligible
    double mass = 0.0;
    for (double hi = peak, step = w; hi > 0.0; step *= 2.0) {
        double lo = std::max(0.0, hi - step);
        mass += GK::integrate(f, lo, hi, 10, 1e-13);
        if (f(lo) < 1e-30) break;
        hi = lo;
    }
    for (double lo = peak, step = w; lo < t; step *= 2.0) {
        double hi = std::min(t, lo + step);
        mass += GK::integrate(f, lo, hi, 10, 1e-13);
        if (f(hi) < 1e-30) break;
        lo = hi;
    }
    if (!(mass > 0.0) || !std::isfinite(mass))
        fail(ErrorKind::QuadratureFailure, "first-passage integral did not converge");
    return gmax + std::log(mass);
}

RouteBudget route_budget(const RouteGeometry& g, double t, const RouteInputs& in, const ModelParams& p) {
    require(t > 0.0, "t must be positive");
    require_lambda_eta(in, p);
    const RouteConstants rc = route_constants(in, p);
    const std::size_t m = g.D.size();
    require(m >= 1, "route needs at least one hop");
    require(g.word.size() == m, "word and gaps differ in length");
    require(double(m) <= rc.N_hat_lambda, "route longer than N-hat_lambda");
    require(g.K_star > 0.0 && g.K_star <= in.K0, "K* must lie in (0, K0]");
    const double s43 = std::pow(t, 4.0 / 3.0);

    RouteBudget b;
    b.m = m;
    b.hop_offset = rc.hop_offset(t);
    b.error_term = rc.error_term(t);
    std::vector<double> Dh(m);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        require(g.D[i] >= 0.5 * in.lambda * s43, "gap below lambda t^{4/3} / 2");
        Dh[i] = g.D[i] - b.hop_offset;
        require(Dh[i] > 0.0, "gap shorter than the hop offset");
        total += Dh[i];
    }

    ReducedWord red = reduce_word_positions(g.word);
    b.m_bar = red.letters.size();
    b.reduced_sum = Dh[0];
    for (std::size_t l = 0; l + 1 < red.positions.size(); ++l) b.reduced_sum += Dh[red.positions[l] + 1];
    require(g.K_star <= b.reduced_sum / s43 + b.error_term, "K* violates the triangle estimate");

    b.main_term = l_star_relaxed(in.alpha, in.mu, p);
    const double c = in.mu * std::sqrt(g.K_star) * std::pow(t, 2.0 / 3.0);
    b.log_I = c * t + log_first_passage_laplace(total / std::sqrt(2.0), c, t);

    const double t53 = std::pow(t, 5.0 / 3.0);
    b.A = (1.0 - in.alpha) * Dh[0] * Dh[0] / 4.0 - 0.5 * g.K_star * b.error_term * s43 * s43;
    if (b.A > 0.0) {
        double a_tot = std::sqrt(2.0 * b.A);
        for (std::size_t i = 1; i < m; ++i) a_tot += std::sqrt(1.0 - in.alpha) * Dh[i] / std::sqrt(2.0);
        b.log_J = std::log(Dh[0] / (2.0 * std::sqrt(b.A))) - 0.5 * (m - 1.0) * std::log(1.0 - in.alpha) +
                  log_first_passage_laplace(a_tot, 0.0, t);
    } else {
        b.log_J = std::numeric_limits<double>::infinity();
    }
    b.log_bound = (in.delta + b.main_term) * t53 + b.log_J;
    return b;
}

LongRouteTail long_route_tail(double eta, int N, double t, const ModelParams& p, double K0, int grid, int max_N) {
    require(eta > 0.0 && N >= 1 && t > 0.0 && K0 > 0.0, "need eta > 0, N >= 1, t > 0, K0 > 0");
    require(grid >= 10, "grid too coarse");
    if (N > max_N)
        fail(ErrorKind::QuadratureFailure,
             "N = " + std::to_string(N) + " beyond the convolution cap " + std::to_string(max_N));
    const double T = std::pow(t, -5.0 / 3.0);
    const double a = eta / 4.0;
    const int M = grid;
    std::vector<double> mass(M);
    for (int j = 0; j < M; ++j)
        mass[j] = std::sqrt(2.0) * (first_passage_cdf(a, T * (j + 1) / M) - (j == 0 ? 0.0 : first_passage_cdf(a, T * j / M)));
    std::vector<double> phi(M + 1, 1.0), next(M + 1);
    for (int n = 1; n <= N; ++n) {
        for (int k = 0; k <= M; ++k) {
            double s = 0.0;
            for (int j = 0; j < k; ++j) s += mass[j] * 0.5 * (phi[k - j] + phi[k - j - 1]);
            next[k] = s;
        }
        phi.swap(next);
    }
    LongRouteTail r;
    if (!(phi[M] > 0.0) || !std::isfinite(phi[M]))
        fail(ErrorKind::QuadratureFailure, "long-route integral underflowed");
    r.log_F = std::log(phi[M]);
    r.exponent = (eta * N) * (eta * N) / 32.0 - 2.0 * p.mu0() * std::sqrt(K0);
    r.log_bound = r.log_F - r.exponent * std::pow(t, 5.0 / 3.0);
    return r;
}

}  // namespace hypam
