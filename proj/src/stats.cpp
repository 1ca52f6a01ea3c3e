#include "hypam/stats.hpp"

#include <algorithm>
#include <cmath>

#include "hypam/common.hpp"

namespace hypam {

double kolmogorov_tail(double lambda) {
    if (lambda < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

KsResult ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
    if (xs.empty()) fail(ErrorKind::EmptyInput, "KS test on empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double D = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double F = cdf(xs[i]);
        D = std::max({D, (i + 1) / n - F, F - i / n});
    }
    double sn = std::sqrt(n);
    return {D, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * D)};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) fail(ErrorKind::EmptyInput, "KS test on empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = a.size(), nb = b.size();
    std::size_t i = 0, j = 0;
    double D = 0.0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        D = std::max(D, std::abs(i / na - j / nb));
    }
    double ne = std::sqrt(na * nb / (na + nb));
    return {D, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * D)};
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) fail(ErrorKind::LengthMismatch, "fit arrays differ in length");
    if (x.size() < 2) fail(ErrorKind::EmptyInput, "fit needs at least two points");
    const double n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.n = static_cast<int>(x.size());
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

Interval wilson_interval(long long k, long long n, double z) {
    if (n <= 0) return {0.0, 1.0};
    double p = static_cast<double>(k) / n;
    double z2 = z * z;
    double den = 1.0 + z2 / n;
    double c = (p + z2 / (2.0 * n)) / den;
    double h = z * std::sqrt(p * (1 - p) / n + z2 / (4.0 * n * n)) / den;
    return {k == 0 ? 0.0 : std::max(0.0, c - h), k == n ? 1.0 : std::min(1.0, c + h)};
}

double Moments::se() const { return n > 0 ? std::sqrt(var / n) : 0.0; }

Moments moments(const std::vector<double>& xs) {
    Moments m;
    m.n = static_cast<long long>(xs.size());
    if (xs.empty()) return m;
    // Welford
    double mean = 0.0, m2 = 0.0;
    long long k = 0;
    for (double x : xs) {
        ++k;
        double dlt = x - mean;
        mean += dlt / k;
        m2 += dlt * (x - mean);
    }
    m.mean = mean;
    m.var = k > 1 ? m2 / (k - 1) : 0.0;
    return m;
}

}  // namespace hypam
