#include "hypam/gaussfield.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include <boost/math/quadrature/gauss.hpp>

#include "hypam/parallel.hpp"
#include "hypam/stats.hpp"

namespace hypam {

namespace {

using GL = boost::math::quadrature::gauss<double, 40>;

}  // namespace

double CovarianceSpec::bump(double r) const {
    if (r >= a_) return 0.0;
    double q = 1.0 - (r / a_) * (r / a_);
    return std::pow(q, power_);
}

double CovarianceSpec::raw(double rho) const {
    rho = std::abs(rho);
    const double a = a_;
    if (rho >= 2.0 * a) return 0.0;
    const int d = d_;
    const double sh_rho = std::sinh(rho);
    const double sa = std::sinh(0.5 * a);

    // inner integral over the polar angle theta measured from the direction of y
    auto inner = [&](double r) {
        double kr = bump(r);
        if (kr == 0.0) return 0.0;
        double sr = std::sinh(r);
        double theta_max = M_PI;
        if (sh_rho > 0.0 && sr > 0.0) {
            double h = std::sinh(0.5 * (r - rho));
            double q = (sa * sa - h * h) / (sr * sh_rho);
            if (q <= 0.0) return 0.0;
            if (q < 1.0) theta_max = 2.0 * std::asin(std::sqrt(q));
        }
        auto g = [&](double th) {
            double s = std::sin(0.5 * th);
            double h = std::sinh(0.5 * (r - rho));
            double v = h * h + sr * sh_rho * s * s;
            double D = 2.0 * std::asinh(std::sqrt(v));
            double w = d == 2 ? 1.0 : std::pow(std::sin(th), d - 2);
            return w * bump(D);
        };
        return kr * std::pow(sr, d - 1) * GL::integrate(g, 0.0, theta_max);
    };

    double lo = std::max(0.0, rho - a);
    double split = a - rho;
    double total = 0.0;
    if (split > lo && split < a) {
        total = GL::integrate(inner, lo, split) + GL::integrate(inner, split, a);
    } else {
        total = GL::integrate(inner, lo, a);
    }
    return sphere_area(d - 1) * total;
}

SpecPtr CovarianceSpec::make(double sigma2, double R0, const std::string& shape, int d, int table_size) {
    require(sigma2 > 0.0, "sigma2 must be positive");
    require(R0 > 0.0, "R0 must be positive");
    require(d >= 2, "dimension must be >= 2");
    require(table_size >= 65, "covariance table too small");
    int power = 0;
    if (shape == "poly3") power = 3;
    else if (shape == "poly4") power = 4;
    else if (shape == "poly2") fail(ErrorKind::InvalidBump, "bump (1-(r/a)^2)^2 is only C^1 at its edge");
    else if (shape == "gaussian") fail(ErrorKind::InvalidBump, "gaussian bump has no compact support");
    else fail(ErrorKind::InvalidBump, "unknown bump shape '" + shape + "'");

    static std::mutex mu;
    static std::map<std::tuple<double, double, std::string, int, int>, SpecPtr> cache;
    auto key = std::make_tuple(sigma2, R0, shape, d, table_size);
    {
        std::lock_guard<std::mutex> g(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    auto spec = std::shared_ptr<CovarianceSpec>(new CovarianceSpec());
    spec->sigma2_ = sigma2;
    spec->R0_ = R0;
    spec->a_ = 0.5 * R0;
    spec->d_ = d;
    spec->shape_ = shape;
    spec->power_ = power;
    spec->norm_ = spec->raw(0.0);
    if (!(spec->norm_ > 0.0)) fail(ErrorKind::QuadratureFailure, "covariance normalisation vanished");

    double step = R0 / (table_size - 1);
    std::vector<double> vals(table_size);
    parallel_for(vals.size(), [&](std::size_t i) {
        vals[i] = i + 1 == vals.size() ? 0.0 : spec->raw(i * step) / spec->norm_;
    });
    vals[0] = 1.0;
    spec->spline_ = boost::math::interpolators::cardinal_cubic_b_spline<double>(vals.data(), vals.size(), 0.0,
                                                                                step, 0.0, 0.0);
    std::lock_guard<std::mutex> g(mu);
    cache.emplace(key, spec);
    return spec;
}

double CovarianceSpec::operator()(double rho) const {
    rho = std::abs(rho);
    if (rho >= R0_) return 0.0;
    return sigma2_ * spline_(rho);
}

double CovarianceSpec::derivative(double rho) const {
    double s = rho < 0 ? -1.0 : 1.0;
    rho = std::abs(rho);
    if (rho >= R0_) return 0.0;
    return s * sigma2_ * spline_.prime(rho);
}

Mat covariance_matrix(const CovarianceSpec& spec, const std::vector<HPoint>& sites) {
    const int n = static_cast<int>(sites.size());
    Mat K(n, n);
    for (int i = 0; i < n; ++i) {
        K(i, i) = spec.sigma2();
        for (int j = 0; j < i; ++j) K(i, j) = K(j, i) = spec(distance(sites[i], sites[j]));
    }
    return K;
}

Mat cholesky_with_jitter(Mat K, double sigma2, double* jitter_used) {
    const int n = static_cast<int>(K.rows());
    double jitter = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        Mat A = K;
        if (jitter > 0.0) A.diagonal().array() += jitter;
        Eigen::LLT<Mat> llt(A);
        if (llt.info() == Eigen::Success) {
            if (jitter_used) *jitter_used = jitter;
            return llt.matrixL();
        }
        jitter = jitter == 0.0 ? 1e-15 * sigma2 : jitter * 10.0;
        if (jitter > tol::jitter_cap * sigma2 * (1.0 + 1e-9)) break;
    }
    fail(ErrorKind::FactorizationFailure,
         "covariance of " + std::to_string(n) + " sites not PD with jitter <= 1e-8 sigma^2");
}

namespace {

void check_distinct(const std::vector<HPoint>& sites, PointIndex& idx) {
    for (const auto& s : sites) {
        if (idx.any_within(s, tol::same_point)) fail(ErrorKind::InvalidArgument, "field sites must be distinct");
        idx.add(s);
    }
}

}  // namespace

FieldRealization sample_field(SpecPtr spec, const std::vector<HPoint>& sites, std::uint64_t seed,
                              const FieldOptions& opt) {
    require(spec != nullptr, "null covariance spec");
    FieldRealization f;
    f.spec = spec;
    f.index = std::make_shared<PointIndex>(spec->dim(), spec->R0());
    if (sites.size() > opt.dense_cap) {
        FieldRealization empty = f;
        return extend_field(empty, sites, seed, opt);
    }
    check_distinct(sites, *f.index);
    f.sites = sites;
    f.chol = cholesky_with_jitter(covariance_matrix(*spec, sites), spec->sigma2(), &f.jitter);
    Stream rng(seed, tags::field, 0);
    Vec z(sites.size());
    for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
    f.values = f.chol.triangularView<Eigen::Lower>() * z;
    return f;
}

void extend_field_in_place(FieldRealization& field, const std::vector<HPoint>& new_sites, std::uint64_t seed,
                           const FieldOptions& opt) {
    require(field.spec != nullptr, "null covariance spec");
    const CovarianceSpec& spec = *field.spec;
    if (!field.index) {
        field.index = std::make_shared<PointIndex>(spec.dim(), spec.R0());
        for (const auto& s : field.sites) field.index->add(s);
    }
    field.chol.resize(0, 0);
    std::vector<double> vals(field.values.data(), field.values.data() + field.values.size());
    vals.reserve(vals.size() + new_sites.size());
    field.sites.reserve(field.sites.size() + new_sites.size());

    Stream rng(seed, tags::field_extend, field.sites.size());
    std::vector<int> nb;
    for (const auto& x : new_sites) {
        field.index->within(x, spec.R0(), nb);
        for (int j : nb)
            if (distance(x, field.sites[j]) < tol::same_point)
                fail(ErrorKind::InvalidArgument, "new site coincides with an existing site");
        if (nb.size() > opt.max_conditioning)
            fail(ErrorKind::BudgetExceeded, "conditioning set of " + std::to_string(nb.size()) + " sites exceeds cap");
        double z = rng.normal();
        double v;
        if (nb.empty()) {
            v = std::sqrt(spec.sigma2()) * z;
        } else {
            std::sort(nb.begin(), nb.end());
            const int m = static_cast<int>(nb.size());
            std::vector<HPoint> cs;
            cs.reserve(m);
            for (int j : nb) cs.push_back(field.sites[j]);
            Mat L = cholesky_with_jitter(covariance_matrix(spec, cs), spec.sigma2());
            Vec c(m), y(m);
            for (int k = 0; k < m; ++k) {
                c[k] = spec(distance(x, cs[k]));
                y[k] = vals[nb[k]];
            }
            Vec w = L.triangularView<Eigen::Lower>().solve(c);
            Vec yw = L.triangularView<Eigen::Lower>().solve(y);
            double mean = w.dot(yw);
            double var = std::max(0.0, spec.sigma2() - w.squaredNorm());
            v = mean + std::sqrt(var) * z;
        }
        field.sites.push_back(x);
        field.index->add(x);
        vals.push_back(v);
    }
    field.values = Eigen::Map<Vec>(vals.data(), vals.size());
}

FieldRealization extend_field(const FieldRealization& field, const std::vector<HPoint>& new_sites,
                              std::uint64_t seed, const FieldOptions& opt) {
    require(field.spec != nullptr, "null covariance spec");
    FieldRealization out;
    out.spec = field.spec;
    out.sites = field.sites;
    out.values = field.values;
    if (field.index) out.index = std::make_shared<PointIndex>(*field.index);
    extend_field_in_place(out, new_sites, seed, opt);
    return out;
}

FieldRealization tilted_sample(SpecPtr spec, const std::vector<HPoint>& sites, double h, std::uint64_t seed,
                               const FieldOptions& opt) {
    require(h >= 0.0, "tilt h must be >= 0");
    FieldRealization f = sample_field(spec, sites, seed, opt);
    if (sites.empty()) return f;
    HPoint o = HPoint::origin(spec->dim());
    double rho = h / spec->sigma2();
    for (std::size_t i = 0; i < sites.size(); ++i) f.values[i] += rho * (*spec)(distance(sites[i], o));
    return f;
}

std::vector<HPoint> lattice_sites(const Region& region, double spacing, std::uint64_t seed, std::size_t cap) {
    require(spacing > 0.0, "spacing must be positive");
    return greedy_packing(region, 0.5 * spacing, seed, cap).centers;
}

std::vector<MaxScanRow> max_scan(SpecPtr spec, const MaxScanOptions& opt, std::uint64_t seed) {
    require(opt.spacing <= 0.5 * spec->R0() + 1e-12, "max_scan: spacing must be <= R0/2");
    require(opt.n_reps >= 1, "max_scan: need at least one replicate");
    std::vector<MaxScanRow> rows;
    const int d = spec->dim();
    for (std::size_t k = 0; k < opt.R_list.size(); ++k) {
        MaxScanRow row;
        row.R = opt.R_list[k];
        row.threshold = std::sqrt(2.0 * spec->sigma2() * (d - 1) * (1.0 + opt.eps) * row.R);
        std::vector<HPoint> sites;
        try {
            sites = lattice_sites(Region::ball(HPoint::origin(d), row.R), opt.spacing, seed + 7919 * k, opt.site_cap);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::BudgetExceeded || opt.stop_on_budget) throw;
            row.budget_exceeded = true;
            rows.push_back(row);
            continue;
        }
        row.n_sites = sites.size();
        const int n = static_cast<int>(sites.size());
        Mat L = cholesky_with_jitter(covariance_matrix(*spec, sites), spec->sigma2());
        row.maxima.assign(opt.n_reps, 0.0);
        parallel_for(opt.n_reps, [&](std::size_t r) {
            Stream rng(seed, tags::field, (static_cast<std::uint64_t>(k) << 32) | r);
            Vec z(n);
            for (int i = 0; i < n; ++i) z[i] = rng.normal();
            Vec v = L.triangularView<Eigen::Lower>() * z;
            row.maxima[r] = v.cwiseAbs().maxCoeff();
        });
        Moments m = moments(row.maxima);
        row.mean_max = m.mean;
        row.se_max = m.se();
        row.max_max = *std::max_element(row.maxima.begin(), row.maxima.end());
        int exceed = 0;
        for (double v : row.maxima) exceed += v > row.threshold;
        row.exceed_fraction = static_cast<double>(exceed) / opt.n_reps;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<BorellRow> borell_check(const std::vector<double>& maxima, double sigma2, int n_lambda) {
    if (maxima.empty()) fail(ErrorKind::EmptyInput, "borell_check: no maxima");
    double E = moments(maxima).mean;
    double top = *std::max_element(maxima.begin(), maxima.end());
    double span = std::max(top - E, std::sqrt(sigma2));
    std::vector<BorellRow> rows;
    for (int i = 1; i <= n_lambda; ++i) {
        BorellRow r;
        r.lambda = E + span * i / n_lambda;
        long long c = 0;
        for (double m : maxima) c += m > r.lambda;
        r.empirical = static_cast<double>(c) / maxima.size();
        r.bound = 4.0 * std::exp(-0.5 * (r.lambda - E) * (r.lambda - E) / sigma2);
        r.holds = r.empirical <= r.bound;
        rows.push_back(r);
    }
    return rows;
}

double estimate_tail_constant(SpecPtr spec, double spacing, int n_reps, std::uint64_t seed) {
    MaxScanOptions opt;
    opt.R_list = {spec->R0()};
    opt.spacing = spacing;
    opt.n_reps = n_reps;
    auto rows = max_scan(spec, opt, seed);
    std::vector<double> m = rows[0].maxima;
    std::sort(m.begin(), m.end());
    // upper tail: quantiles 0.5 .. 0.99
    std::vector<double> x, y;
    for (double q = 0.5; q < 0.995; q += 0.05) {
        double lam = m[static_cast<std::size_t>(q * (m.size() - 1))];
        double p = 1.0 - q;
        if (lam <= 0.0) continue;
        x.push_back(lam * lam);
        y.push_back(std::log(p));
    }
    if (x.size() < 2) fail(ErrorKind::EmptyInput, "too few replicates for a tail fit");
    return -linear_fit(x, y).slope;
}

int find_peak(const FieldRealization& field, double inner, double outer) {
    if (field.sites.empty()) return -1;
    HPoint o = HPoint::origin(field.sites[0].dim());
    int best = -1;
    for (std::size_t i = 0; i < field.sites.size(); ++i) {
        double r = distance(field.sites[i], o);
        if (r < inner || r > outer) continue;
        if (best < 0 || field.values[i] > field.values[best]) best = static_cast<int>(i);
    }
    return best;
}

std::vector<GradientRow> gradient_max_scan(SpecPtr spec, const std::vector<double>& R_list, double spacing,
                                           int n_reps, std::uint64_t seed, std::size_t site_cap) {
    std::vector<GradientRow> rows;
    const int d = spec->dim();
    for (std::size_t k = 0; k < R_list.size(); ++k) {
        GradientRow row;
        row.R = R_list[k];
        auto sites = lattice_sites(Region::ball(HPoint::origin(d), row.R), spacing, seed + 104729 * k, site_cap);
        row.n_sites = sites.size();
        PointIndex idx(d, spacing);
        for (auto& s : sites) idx.add(s);
        // neighbour pairs within 2 spacing
        std::vector<std::pair<int, int>> pairs;
        std::vector<double> dist;
        std::vector<int> nb;
        for (int i = 0; i < static_cast<int>(sites.size()); ++i) {
            idx.within(sites[i], 2.0 * spacing, nb);
            for (int j : nb)
                if (j > i) {
                    pairs.emplace_back(i, j);
                    dist.push_back(distance(sites[i], sites[j]));
                }
        }
        Mat L = cholesky_with_jitter(covariance_matrix(*spec, sites), spec->sigma2());
        std::vector<double> gmax(n_reps);
        parallel_for(n_reps, [&](std::size_t r) {
            Stream rng(seed, tags::field, (static_cast<std::uint64_t>(k + 1000) << 32) | r);
            Vec z(sites.size());
            for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
            Vec v = L.triangularView<Eigen::Lower>() * z;
            double g = 0.0;
            for (std::size_t p = 0; p < pairs.size(); ++p)
                g = std::max(g, std::abs(v[pairs[p].first] - v[pairs[p].second]) / dist[p]);
            gmax[r] = g;
        });
        row.mean_grad_max = moments(gmax).mean;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace hypam
