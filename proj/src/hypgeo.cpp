#include "hypam/hypgeo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace hypam {

HPoint HPoint::origin(int d) {
    require(d >= 2, "dimension must be >= 2");
    HPoint p;
    p.u_ = Vec::Zero(d);
    p.u_[0] = 1.0;
    return p;
}

HPoint HPoint::polar(double r, const Vec& dir) {
    require(dir.size() >= 2, "dimension must be >= 2");
    require(r >= 0.0 && std::isfinite(r), "polar radius must be finite and >= 0");
    double n = dir.norm();
    require(n > 0.0, "polar direction must be non-zero");
    HPoint p;
    p.r_ = r;
    p.u_ = dir / n;
    return p;
}

HPoint HPoint::from_coords(const Vec& x) {
    if (x.size() < 3) fail(ErrorKind::InvalidPoint, "hyperboloid point needs d+1 >= 3 coordinates");
    double q = minkowski(x, x);
    double scale = std::max(1.0, x[0] * x[0]);
    if (!(x[0] >= 1.0 - tol::minkowski_norm) || std::abs(q + 1.0) > tol::minkowski_norm * scale)
        fail(ErrorKind::InvalidPoint, "point is off the hyperboloid <x,x> = -1, x0 >= 1");
    Vec s = x.tail(x.size() - 1);
    double n = s.norm();
    if (n == 0.0) return origin(static_cast<int>(s.size()));
    HPoint p;
    p.r_ = std::asinh(n);
    p.u_ = s / n;
    return p;
}

Vec HPoint::coords() const {
    Vec x(u_.size() + 1);
    x[0] = std::cosh(r_);
    x.tail(u_.size()) = std::sinh(r_) * u_;
    return x;
}

Vec HPoint::poincare() const { return std::tanh(0.5 * r_) * u_; }

double minkowski(const Vec& x, const Vec& y) {
    return -x[0] * y[0] + x.tail(x.size() - 1).dot(y.tail(y.size() - 1));
}

double hyperboloid_distance(const Vec& x, const Vec& y) {
    return std::acosh(std::max(1.0, -minkowski(x, y)));
}

double poincare_distance(const Vec& p, const Vec& q) {
    double num = 2.0 * (p - q).squaredNorm();
    double den = (1.0 - p.squaredNorm()) * (1.0 - q.squaredNorm());
    return std::acosh(1.0 + num / den);
}

double distance(const HPoint& x, const HPoint& y) {
    if (x.dim() != y.dim()) fail(ErrorKind::InvalidPoint, "points of different dimension");
    // sinh^2(D/2) = sinh^2((r1-r2)/2) + sinh r1 sinh r2 sin^2(theta/2)
    double a = std::sinh(0.5 * (x.radius() - y.radius()));
    double s = 0.5 * (x.direction() - y.direction()).norm();
    double v = a * a + std::sinh(x.radius()) * std::sinh(y.radius()) * s * s;
    return 2.0 * std::asinh(std::sqrt(v));
}

HPoint exp_map(const HPoint& x, const Vec& v) {
    double ell = v.norm();
    if (ell == 0.0) return x;
    const Vec& u = x.direction();
    double a = v.dot(u);
    Vec w = v - a * u;
    double b = w.norm();
    double r = x.radius();
    double ch = std::cosh(ell), sh = std::sinh(ell);
    double X1 = ch * std::sinh(r) + sh * (a / ell) * std::cosh(r);
    double X2 = sh * (b / ell);
    double n = std::hypot(X1, X2);
    if (n == 0.0) return HPoint::origin(x.dim());
    Vec dir = (X1 / n) * u;
    if (b > 0.0) dir += (X2 / n) * (w / b);
    return HPoint::polar(std::asinh(n), dir);
}

Vec log_map(const HPoint& x, const HPoint& y) {
    double D = distance(x, y);
    if (D < tol::same_point) return Vec::Zero(x.dim());
    const Vec& ux = x.direction();
    const Vec& uy = y.direction();
    double rx = x.radius(), ry = y.radius();
    Vec w = uy - ux.dot(uy) * ux;
    double sin_t = w.norm();
    double half = 0.5 * (uy - ux).norm();  // sin(theta/2)
    // coordinates of y after moving x to o along its radial line
    double y1 = std::sinh(ry - rx) - 2.0 * std::cosh(rx) * std::sinh(ry) * half * half;
    double y2 = std::sinh(ry) * sin_t;
    double n = std::hypot(y1, y2);
    Vec v = (D * y1 / n) * ux;
    if (sin_t > 0.0) v += (D * y2 / n) * (w / sin_t);
    return v;
}

HPoint geodesic_point(const HPoint& x, const HPoint& y, double s) {
    require(s >= 0.0 && s <= 1.0, "geodesic fraction must lie in [0,1]");
    if (s == 0.0) return x;
    if (s == 1.0) return y;
    Vec v = log_map(x, y);
    if (v.squaredNorm() == 0.0) return x;  // degenerate endpoints
    return exp_map(x, s * v);
}

GeodesicSegment::GeodesicSegment(const HPoint& from, const HPoint& to)
    : a(from), b(to), length(distance(from, to)), velocity(log_map(from, to)) {}

HPoint GeodesicSegment::point_at(double s) const {
    if (length == 0.0 || s <= 0.0) return a;
    if (s >= length) return b;
    return exp_map(a, (s / length) * velocity);
}

double sphere_area(int d) {
    return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}

double ball_volume(double R, int d) {
    require(R > 0.0, "ball radius must be positive");
    require(d >= 2, "dimension must be >= 2");
    auto f = [d](double r) { return std::pow(std::sinh(r), d - 1); };
    double err = 0.0;
    double I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, R, 20, 1e-12, &err);
    return sphere_area(d) * I;
}

bool Region::contains(const HPoint& p) const {
    double r = distance(center, p);
    return r >= inner - 1e-12 && r <= outer + 1e-12;
}

namespace {

// integral of sinh^n over [0, r]
double sinh_power_integral(int n, double r) {
    double lo = r;                        // n = 0
    double hi = std::cosh(r) - 1.0;       // n = 1
    if (n == 0) return lo;
    if (n == 1) return hi;
    double sh = std::sinh(r), ch = std::cosh(r);
    double prev2 = lo, prev1 = hi, cur = hi;
    for (int k = 2; k <= n; ++k) {
        cur = std::pow(sh, k - 1) * ch / k - (k - 1.0) / k * prev2;
        prev2 = prev1;
        prev1 = cur;
    }
    return cur;
}

double sample_shell_radius(int d, double a, double b, Stream& rng) {
    if (b <= a) return a;
    int n = d - 1;
    double Ia = sinh_power_integral(n, a);
    double target = Ia + rng.uniform() * (sinh_power_integral(n, b) - Ia);
    double lo = a, hi = b;
    for (int it = 0; it < 60 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
        double mid = 0.5 * (lo + hi);
        if (sinh_power_integral(n, mid) < target) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

Vec random_direction(int d, Stream& rng) {
    Vec v(d);
    double n = 0.0;
    while (n < 1e-12) {
        for (int i = 0; i < d; ++i) v[i] = rng.normal();
        n = v.norm();
    }
    return v / n;
}

HPoint sample_uniform(const Region& region, Stream& rng) {
    int d = region.center.dim();
    double r = sample_shell_radius(d, region.inner, region.outer, rng);
    return exp_map(region.center, r * random_direction(d, rng));
}

Packing greedy_packing(const Region& region, double r, std::uint64_t seed, std::size_t max_centers) {
    require(r > 0.0, "packing radius must be positive");
    if (region.outer < 0.0 || region.inner < 0.0 || region.inner > region.outer)
        fail(ErrorKind::RegionTooSmall, "region has no interior");
    Packing pk{region, r, {}};
    if (region.inner == region.outer) return pk;

    const int d = region.center.dim();
    const double sep = 2.0 * r;
    PointIndex index(d, sep);
    Stream rng(seed, tags::packing, 0);

    auto try_add = [&](const HPoint& c) {
        if (!region.contains(c) || index.any_within(c, sep)) return false;
        index.add(c);
        pk.centers.push_back(c);
        if (max_centers && pk.centers.size() > max_centers)
            fail(ErrorKind::BudgetExceeded, "packing needs more than " + std::to_string(max_centers) +
                                                " centers");
        return true;
    };

    // Phase 1: uniform candidates until rejections dominate.
    std::size_t misses = 0;
    while (misses < std::max<std::size_t>(200, 2 * pk.centers.size())) {
        if (try_add(sample_uniform(region, rng))) misses = 0; else ++misses;
    }

    // Phase 2: uncovered pockets always touch some sphere S(c, 2r), so probe those
    // spheres from every center, including the ones added here.
    const int per_center = d == 2 ? 64 : 48 * d;
    const double step = sep * (1.0 + 1e-9);
    auto sweep = [&](std::size_t from) {
        for (std::size_t i = from; i < pk.centers.size(); ++i) {
            HPoint c = pk.centers[i];
            for (int k = 0; k < per_center; ++k) {
                Vec dir;
                if (d == 2) {
                    double phi = 2.0 * M_PI * (k + rng.uniform()) / per_center;
                    dir = Vec(2);
                    dir << std::cos(phi), std::sin(phi);
                } else {
                    dir = random_direction(d, rng);
                }
                try_add(exp_map(c, step * dir));
            }
        }
    };
    sweep(0);

    // Phase 3: random probes; any uncovered probe becomes a center and is swept.
    for (int round = 0; round < 4; ++round) {
        std::size_t before = pk.centers.size();
        for (int k = 0; k < 20000; ++k) try_add(sample_uniform(region, rng));
        if (pk.centers.size() == before) break;
        sweep(before);
    }
    if (pk.centers.empty()) fail(ErrorKind::RegionTooSmall, "no packing center fits the region");
    return pk;
}

// ---------------------------------------------------------------------------

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

PointIndex::PointIndex(int d, double cell) : d_(d), cell_(cell) {
    require(cell > 0.0, "index cell must be positive");
}

double PointIndex::cube_size(int shell) const {
    if (shell == 0) return 4.0;
    double c = 2.0 * std::sinh(0.5 * cell_) / std::sinh(shell * cell_);
    return std::clamp(c, 1e-15, 4.0);
}

std::uint64_t PointIndex::key(int shell, const Vec& u) const {
    double c = cube_size(shell);
    std::uint64_t h = mix64(static_cast<std::uint64_t>(shell));
    for (int i = 0; i < d_; ++i)
        h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(u[i] / c))));
    return h;
}

int PointIndex::add(const HPoint& p) {
    if (p.dim() != d_) fail(ErrorKind::InvalidPoint, "index dimension mismatch");
    int id = static_cast<int>(points_.size());
    points_.push_back(p);
    int shell = static_cast<int>(p.radius() / cell_);
    if (shell >= static_cast<int>(shells_.size())) shells_.resize(shell + 1);
    shells_[shell].push_back(id);
    buckets_[key(shell, p.direction())].push_back(id);
    return id;
}

template <class F>
void PointIndex::visit(const HPoint& q, double radius, F&& f) const {
    if (points_.empty()) return;
    int s_lo = std::max(0, static_cast<int>((q.radius() - radius) / cell_));
    int s_hi = std::min(static_cast<int>(shells_.size()) - 1, static_cast<int>((q.radius() + radius) / cell_));
    const Vec& u = q.direction();
    std::vector<std::int64_t> lo(d_), hi(d_), cur(d_);
    for (int s = s_lo; s <= s_hi; ++s) {
        const auto& shell = shells_[s];
        if (shell.empty()) continue;
        double denom = std::sinh(q.radius()) * std::sinh(s * cell_);
        double beta = denom > 0.0 ? 2.0 * std::sinh(0.5 * radius) / std::sqrt(denom) : 1e300;
        double c = cube_size(s);
        double cubes = 1.0;
        if (beta < 2.0) {
            for (int i = 0; i < d_; ++i) {
                lo[i] = static_cast<std::int64_t>(std::floor((u[i] - beta) / c));
                hi[i] = static_cast<std::int64_t>(std::floor((u[i] + beta) / c));
                cubes *= static_cast<double>(hi[i] - lo[i] + 1);
            }
        }
        if (beta >= 2.0 || cubes > static_cast<double>(shell.size())) {
            for (int id : shell) if (!f(id)) return;
            continue;
        }
        cur = lo;
        while (true) {
            std::uint64_t h = mix64(static_cast<std::uint64_t>(s));
            for (int i = 0; i < d_; ++i) h = mix64(h ^ static_cast<std::uint64_t>(cur[i]));
            auto it = buckets_.find(h);
            if (it != buckets_.end())
                for (int id : it->second) {
                    // hash collisions only add candidates; the shell check filters them
                    if (static_cast<int>(points_[id].radius() / cell_) != s) continue;
                    if (!f(id)) return;
                }
            int i = 0;
            while (i < d_ && ++cur[i] > hi[i]) { cur[i] = lo[i]; ++i; }
            if (i == d_) break;
        }
    }
}

void PointIndex::within(const HPoint& q, double radius, std::vector<int>& out) const {
    out.clear();
    visit(q, radius, [&](int id) {
        if (distance(q, points_[id]) <= radius) out.push_back(id);
        return true;
    });
}

bool PointIndex::any_within(const HPoint& q, double radius) const {
    bool found = false;
    visit(q, radius, [&](int id) {
        if (distance(q, points_[id]) <= radius) { found = true; return false; }
        return true;
    });
    return found;
}

int PointIndex::nearest(const HPoint& q, double* dist) const {
    if (points_.empty()) return -1;
    double radius = cell_;
    while (true) {
        int best = -1;
        double bd = 0.0;
        visit(q, radius, [&](int id) {
            double dd = distance(q, points_[id]);
            if (dd <= radius && (best < 0 || dd < bd)) { best = id; bd = dd; }
            return true;
        });
        if (best >= 0) {
            if (dist) *dist = bd;
            return best;
        }
        radius *= 2.0;
    }
}

}  // namespace hypam
