#pragma once

#include <functional>
#include <vector>

namespace hypam {

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

// Asymptotic Kolmogorov tail P(K > lambda), with the Stephens small-n correction
// applied by the callers below.
double kolmogorov_tail(double lambda);

KsResult ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int n = 0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Wilson score interval for k successes out of n, at normal quantile z.
Interval wilson_interval(long long k, long long n, double z = 1.959963984540054);

struct Moments {
    double mean = 0.0;
    double var = 0.0;  // unbiased
    long long n = 0;
    double se() const;
};

Moments moments(const std::vector<double>& xs);

}  // namespace hypam
