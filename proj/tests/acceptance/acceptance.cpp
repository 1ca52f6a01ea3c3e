// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance [--only 1,5,...] [--allow-fail 9,...]
// Exit status is 0 when every failing criterion is listed in --allow-fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "hypam/fkmc.hpp"
#include "hypam/gaussfield.hpp"
#include "hypam/heatkernel.hpp"
#include "hypam/hypbm.hpp"
#include "hypam/parallel.hpp"
#include "hypam/stats.hpp"
#include "hypam/varopt.hpp"

using namespace hypam;

namespace {

using GK31 = boost::math::quadrature::gauss_kronrod<double, 31>;
using GK61 = boost::math::quadrature::gauss_kronrod<double, 61>;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

Vec unit(int d, int k) {
    Vec e = Vec::Zero(d);
    e[k] = 1.0;
    return e;
}

// ---------------------------------------------------------------------------
// 1. variational constants

// maximiser of (1-e) sqrt(2 s K) - K^2 / 4e, worked by hand: for fixed e the K-optimum
// satisfies K^{3/2} = e (1-e) sqrt(2s), leaving (3/4)(2s)^{2/3} e^{1/3} (1-e)^{4/3},
// maximal at e = 1/5
double closed_K(double s) { return std::pow(0.2 * 0.8 * std::sqrt(2.0 * s), 2.0 / 3.0); }
double closed_L(double s) { return 0.75 * std::pow(2.0 * s, 2.0 / 3.0) * std::cbrt(0.2) * std::pow(0.8, 4.0 / 3.0); }

std::pair<double, double> brent_argmax(double s) {
    auto f = [s](double e, double K) { return (1 - e) * std::sqrt(2 * s * K) - K * K / (4 * e); };
    auto inner = [&](double e) {
        return boost::math::tools::brent_find_minima([&](double K) { return -f(e, K); }, 1e-12,
                                                     4.0 * std::cbrt(s) + 2.0, 60);
    };
    auto outer = boost::math::tools::brent_find_minima([&](double e) { return inner(e).second; }, 1e-6,
                                                       1.0 - 1e-6, 60);
    return {outer.first, inner(outer.first).first};
}

void crit_variational(Outcome& o) {
    auto s = optimize_f(ModelParams(2, 1.0));
    o.check(s.eps_star == 0.2, "eps_star != 0.2 at sigma2=1, d=2");
    std::mt19937_64 gen(101);
    std::uniform_real_distribution<double> U(0.1, 10.0);
    double worst_closed = 0.0, worst_arg = 0.0, worst_val = 0.0, worst_brent = 0.0;
    for (int i = 0; i < 20; ++i) {
        double scale = U(gen);
        int d = 2 + static_cast<int>(gen() % 4);
        ModelParams p(d, scale / (d - 1));
        auto r = optimize_f(p);
        o.check(r.eps_star == 0.2, "eps_star != 0.2");
        worst_closed = std::max({worst_closed, std::abs(r.K_star - closed_K(p.scale())),
                                 std::abs(r.L_star - closed_L(p.scale()))});
        worst_arg = std::max({worst_arg, std::abs(r.eps_numeric - r.eps_star), std::abs(r.K_numeric - r.K_star)});
        worst_val = std::max(worst_val, std::abs(r.L_numeric - r.L_star));
        auto [e, K] = brent_argmax(p.scale());
        worst_brent = std::max({worst_brent, std::abs(e - 0.2), std::abs(K - r.K_star)});
    }
    o.check(worst_closed <= 1e-9, "closed form");
    o.check(worst_arg <= 1e-4, "grid+golden arguments");
    o.check(worst_val <= 1e-6, "grid+golden value");
    o.check(worst_brent <= 1e-4, "Brent oracle");
    o.detail << "closed-form gap " << worst_closed << ", grid args " << worst_arg << ", grid value " << worst_val
             << ", Brent " << worst_brent;
}

// ---------------------------------------------------------------------------
// 2. word reduction

std::string brute_reduce(const std::string& w) {
    if (w.empty()) return "";
    std::size_t k = w.rfind(w[0]);
    return std::string(1, w[k]) + brute_reduce(w.substr(k + 1));
}

void crit_words(Outcome& o) {
    std::string ex = reduce_word(std::string("abcabbacbccb"));
    o.check(ex == "acb", "example gives " + ex);
    std::mt19937_64 gen(202);
    int mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        int letters = 1 + static_cast<int>(gen() % 6);
        int len = 1 + static_cast<int>(gen() % 40);
        std::string w;
        for (int k = 0; k < len; ++k) w += static_cast<char>('a' + gen() % letters);
        if (reduce_word(w) != brute_reduce(w)) ++mismatches;
    }
    o.check(mismatches == 0, "random words");
    o.detail << "example -> " << ex << ", 10000 random words, " << mismatches << " mismatches";
}

// ---------------------------------------------------------------------------
// 3. inequality fuzzers

void crit_inequalities(Outcome& o) {
    std::mt19937_64 gen(303);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int n = 100000;
    int v_chain = 0, v_hop = 0, v_ha = 0;
    for (int i = 0; i < n; ++i) {
        int k = 1 + static_cast<int>(gen() % 8);
        std::vector<double> D(k), u(k);
        for (int j = 0; j < k; ++j) {
            D[j] = 1e-3 + 10.0 * U(gen);
            u[j] = 1e-3 + 10.0 * U(gen);
        }
        if (!chain_bound(D, u).holds) ++v_chain;
        if (!ha_mean_bound(u).holds) ++v_ha;

        // time fractions from a flat Dirichlet, 0 < K1 < K2
        double w[4], tot = 0.0;
        for (double& x : w) tot += (x = -std::log(1.0 - U(gen)) + 1e-12);
        double e1 = w[0] / tot, e2 = w[1] / tot, h1 = w[2] / tot;
        double h2 = 1.0 - e1 - e2 - h1;
        if (!(h2 >= 0.0)) h2 = 0.0, h1 = 1.0 - e1 - e2;
        double K2 = 1e-3 + 5.0 * U(gen), K1 = K2 * (1e-3 + 0.998 * U(gen));
        ModelParams p(2 + static_cast<int>(gen() % 3), 0.1 + 4.9 * U(gen));
        if (!hop_inequality(e1, e2, h1, h2, K1, K2, p).holds) ++v_hop;
    }
    o.check(v_chain == 0, "sum D^2/u >= (sum D)^2 / sum u");
    o.check(v_hop == 0, "two-hop comparison");
    o.check(v_ha == 0, "harmonic <= arithmetic mean");
    o.detail << n << " inputs each; violations " << v_chain << " / " << v_hop << " / " << v_ha;
}

// ---------------------------------------------------------------------------
// 4. first-passage density

double fp_cdf_oracle(double a, double s) { return std::erfc(a / std::sqrt(2.0 * s)); }

void crit_first_passage(Outcome& o) {
    double worst = 0.0;
    for (double a : {0.5, 1.0, 2.0}) {
        // s = e^x turns the s^{-3/2} tail into an exponential one
        double mass = GK61::integrate([a](double x) { return first_passage_density(a, std::exp(x)) * std::exp(x); },
                                      -60.0, 120.0, 20, 1e-14);
        worst = std::max(worst, std::abs(mass - 1.0));
    }
    o.check(worst <= 1e-6, "normalization");
    const double a = 1.0, horizon = 20.0;
    auto times = simulate_hitting_times(a, 10000, 1e-3, horizon, 404);
    std::vector<double> hit;
    for (double t : times)
        if (std::isfinite(t)) hit.push_back(t);
    double Fh = fp_cdf_oracle(a, horizon);
    auto ks = ks_one_sample(hit, [&](double s) { return s <= 0 ? 0.0 : fp_cdf_oracle(a, s) / Fh; });
    o.check(ks.p_value > 0.01, "KS against the hitting-time law");
    o.detail << "mass error " << worst << ", KS p " << ks.p_value << " on " << hit.size() << " hits (a=1, T<=20)";
}

// ---------------------------------------------------------------------------
// 5. H^3 kernel

// radial law of H^3 Brownian motion with generator Delta, written out by hand
double h3_radial_density(double t, double r) {
    return 4.0 * M_PI * std::pow(4.0 * M_PI * t, -1.5) * r * std::sinh(r) * std::exp(-t - r * r / (4.0 * t));
}

double d1(const std::function<double(double)>& f, double x, double h) {
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}
double d2(const std::function<double(double)>& f, double x, double h) {
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h);
}

void crit_h3_kernel(Outcome& o) {
    double worst_mass = 0.0, worst_formula = 0.0;
    for (double t : {0.1, 1.0, 5.0}) {
        double top = 4.0 * t + 20.0 * std::sqrt(t) + 10.0;
        double mass = GK31::integrate(
            [t](double r) { return 4.0 * M_PI * std::exp(log_exact_h3(t, r) + 2.0 * std::log(std::sinh(std::max(r, 1e-300)))); },
            0.0, top, 15, 1e-13);
        worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
        for (double r : {0.3, 1.0, 4.0}) {
            double lib = 4.0 * M_PI * exact_h3(t, r) * std::sinh(r) * std::sinh(r);
            worst_formula = std::max(worst_formula, std::abs(lib / h3_radial_density(t, r) - 1.0));
        }
    }
    o.check(worst_mass <= 1e-6, "normalization");
    o.check(worst_formula <= 1e-12, "closed form");

    double worst_res = 0.0;
    for (double tt : {0.25, 0.5, 1.0, 2.0, 5.0})
        for (double r : {0.5, 1.0, 2.0, 5.0, 10.0}) {
            auto Lr = [tt](double x) { return log_exact_h3(tt, x); };
            auto Lt = [r](double s) { return log_exact_h3(s, r); };
            double lr = d1(Lr, r, 1e-3);
            double res = d1(Lt, tt, 1e-3 * tt) - (d2(Lr, r, 1e-3) + lr * lr + 2.0 / std::tanh(r) * lr);
            worst_res = std::max(worst_res, std::abs(res));
        }
    o.check(worst_res <= 1e-4, "heat-equation residual");

    std::vector<double> rr(10000);
    parallel_for(rr.size(), [&](std::size_t i) { rr[i] = bm_final_radius(3, 1.0, 0.005, 505, i); });
    auto ks = ks_one_sample(rr, [](double x) {
        return x <= 0 ? 0.0 : GK31::integrate([](double s) { return h3_radial_density(1.0, s); }, 0.0, x, 10, 1e-12);
    });
    o.check(ks.p_value > 0.01, "BM radial law");

    auto grid = CalibrationGrid::make(0.1, 10.0, 25, 0.0, 20.0, 81);
    auto cal = calibrate(3, grid);
    bool sandwich = true;
    for (double t : grid.t)
        for (double rho : grid.rho) {
            double p = exact_h3(t, rho), q = comparison_fn(t, rho, 3);
            sandwich = sandwich && cal.C1 * q <= p * (1 + 1e-12) && p <= cal.C2 * q * (1 + 1e-12);
        }
    double ratio = cal.C2 / cal.C1;
    o.check(std::isfinite(ratio) && cal.C1 > 0 && ratio <= 100.0 && sandwich, "comparison sandwich");
    o.detail << "mass " << worst_mass << ", residual " << worst_res << ", KS p " << ks.p_value << ", C1 " << cal.C1
             << " C2 " << cal.C2 << " (ratio " << ratio << ")";
}

// ---------------------------------------------------------------------------
// 6. radial law of large numbers

void crit_radial_lln(Outcome& o) {
    for (int d : {2, 3}) {
        std::vector<double> r(1000);
        parallel_for(r.size(), [&](std::size_t i) { r[i] = bm_final_radius(d, 50.0, 0.01, 606, i); });
        double ratio = moments(r).mean / ((d - 1) * 50.0);
        o.check(ratio >= 0.9 && ratio <= 1.1, "d=" + std::to_string(d));
        o.detail << "d=" << d << " ratio " << ratio << "; ";
    }
}

// ---------------------------------------------------------------------------
// 7. exit-time form

void crit_exit(Outcome& o) {
    const double t = 2.0;
    auto rows = exit_stats(3, {8.0, 10.0, 12.0}, t, 500000, 707);
    std::vector<double> x, y;
    for (const auto& r : rows) {
        o.check(r.hits > 0, "no exits at R=" + std::to_string(r.R));
        if (r.hits == 0) return;
        x.push_back(r.R * r.R / t);
        y.push_back(std::log(r.p_hat));
        o.detail << "R=" << r.R << " hits " << r.hits << "; ";
    }
    auto fit = linear_fit(x, y);
    o.check(fit.slope < 0.0, "slope");
    o.check(fit.r2 >= 0.9, "fit R^2");
    o.detail << "d=3, slope " << fit.slope << ", R^2 " << fit.r2;
}

// ---------------------------------------------------------------------------
// 8. field fidelity

void crit_field(Outcome& o) {
    auto spec = CovarianceSpec::make(1.0, 1.0, "poly3", 2);
    // eight sites, four of them within R0 of the first and some pairs beyond R0
    std::vector<HPoint> sites{HPoint::origin(2)};
    for (double r : {0.2, 0.45, 0.7, 0.95}) sites.push_back(HPoint::polar(r, unit(2, 0)));
    for (double r : {0.5, 1.3, 2.0}) sites.push_back(HPoint::polar(r, unit(2, 1)));
    const int n = 10000;
    const int m = static_cast<int>(sites.size());
    Mat S = Mat::Zero(m, m);
    for (int r = 0; r < n; ++r) {
        auto f = sample_field(spec, sites, 8000 + r);
        S += f.values * f.values.transpose();
    }
    S /= n;

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < m && pairs.size() < 20; ++i)
        for (int j = i + 1; j < m && pairs.size() < 20; ++j) pairs.emplace_back(i, j);
    int bad_cov = 0, bad_zero = 0, n_beyond = 0;
    for (auto [i, j] : pairs) {
        double rho = distance(sites[i], sites[j]);
        double c = (*spec)(rho);
        double se = std::sqrt((1.0 + c * c) / n);
        if (std::abs(S(i, j) - c) >= 4.0 * se) ++bad_cov;
        if (rho > spec->R0()) {
            ++n_beyond;
            if (std::abs(S(i, j) / std::sqrt(S(i, i) * S(j, j))) > 4.0 / std::sqrt(n)) ++bad_zero;
        }
    }
    o.check(bad_cov == 0, "covariance within 4 SE");
    o.check(n_beyond > 0 && bad_zero == 0, "zero correlation beyond R0");

    const double h = 2.0;
    std::vector<double> at_o;
    for (int r = 0; r < n; ++r) at_o.push_back(tilted_sample(spec, sites, h, 20000 + r).values[0]);
    auto mo = moments(at_o);
    o.check(std::abs(mo.mean - h) < 4.0 * mo.se(), "tilted mean at o");
    o.detail << pairs.size() << " pairs (" << n_beyond << " beyond R0), " << bad_cov << " outside 4 SE, tilted mean "
             << mo.mean << " +- " << mo.se();
}

// ---------------------------------------------------------------------------
// 9. extremes

void crit_extremes(Outcome& o) {
    auto spec = CovarianceSpec::make(1.0, 1.0, "poly3", 2);
    MaxScanOptions opt;
    opt.R_list = {5.0, 10.0, 20.0};
    opt.spacing = 0.25;
    opt.n_reps = 60;
    opt.eps = 0.5;
    opt.site_cap = 20000;
    opt.stop_on_budget = false;
    auto rows = max_scan(spec, opt, 909);
    bool borell = true, all_run = true;
    for (const auto& r : rows) {
        if (r.budget_exceeded) {
            all_run = false;
            o.detail << "R=" << r.R << " over the " << opt.site_cap << "-site budget; ";
            continue;
        }
        bool holds = true;
        for (const auto& b : borell_check(r.maxima, 1.0)) holds = holds && b.holds;
        borell = borell && holds;
        o.detail << "R=" << r.R << " sites " << r.n_sites << " exceedance " << r.exceed_fraction << " Borell "
                 << (holds ? "holds" : "fails") << "; ";
    }
    o.check(borell, "Borell bound");
    o.check(all_run, "R in {5,10,20} not reachable: a ball of radius R in H^2 needs ~e^R sites at spacing R0/4");
    if (!all_run) return;
    for (std::size_t i = 1; i < rows.size(); ++i)
        o.check(rows[i].exceed_fraction <= rows[i - 1].exceed_fraction, "exceedance decreasing in R");
}

// ---------------------------------------------------------------------------
// 10. cluster oracles

std::vector<std::vector<int>> bfs_islands(const FieldRealization& f, double thr, double link) {
    const int n = static_cast<int>(f.size());
    std::vector<int> seen(n, 0);
    std::vector<std::vector<int>> out;
    for (int i = 0; i < n; ++i) {
        if (seen[i] || f.values[i] <= thr) continue;
        std::vector<int> comp;
        std::deque<int> q{i};
        seen[i] = 1;
        while (!q.empty()) {
            int a = q.front();
            q.pop_front();
            comp.push_back(a);
            for (int b = 0; b < n; ++b)
                if (!seen[b] && f.values[b] > thr && distance(f.sites[a], f.sites[b]) <= link) {
                    seen[b] = 1;
                    q.push_back(b);
                }
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(comp);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<int>> closure_clusters(const std::vector<HPoint>& sites, const IslandSet& is, double link) {
    const int m = static_cast<int>(is.islands.size());
    std::vector<std::vector<char>> adj(m, std::vector<char>(m, 0));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            adj[i][j] = i == j;
            for (int a : is.islands[i])
                for (int b : is.islands[j])
                    if (distance(sites[a], sites[b]) <= link) adj[i][j] = 1;
        }
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (adj[i][k] && adj[k][j]) adj[i][j] = 1;
    std::set<std::vector<int>> groups;
    for (int i = 0; i < m; ++i) {
        std::vector<int> g;
        for (int j = 0; j < m; ++j)
            if (adj[i][j]) g.push_back(j);
        groups.insert(g);
    }
    return {groups.begin(), groups.end()};
}

void crit_clusters(Outcome& o) {
    auto spec = CovarianceSpec::make(1.0, 1.0, "poly3", 2);
    std::mt19937_64 gen(1010);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int bad_islands = 0, bad_clusters = 0, too_big = 0, nonempty = 0;
    for (int inst = 0; inst < 100; ++inst) {
        double radius = 1.0 + 1.0 * U(gen);
        auto sites = lattice_sites(Region::ball(HPoint::origin(2), radius), 0.25, 1000 + inst);
        if (sites.size() > 500) ++too_big;
        auto f = sample_field(spec, sites, 2000 + inst);
        double t = 0.5 + 1.5 * U(gen), delta = 0.3 + 0.5 * U(gen), h = 0.15 + 0.2 * U(gen);
        auto is = detect_islands(f, delta, t, h);
        if (is.islands != bfs_islands(f, delta * std::pow(t, 2.0 / 3.0), 2.0 * h)) ++bad_islands;
        if (!is.islands.empty()) ++nonempty;
        double eta = 0.1 + 0.9 * U(gen);
        auto cs = build_clusters(sites, is, eta, t);
        std::vector<std::vector<int>> got;
        for (const auto& c : cs.clusters) got.push_back(c.islands);
        std::sort(got.begin(), got.end());
        if (got != closure_clusters(sites, is, eta * std::pow(t, 4.0 / 3.0))) ++bad_clusters;
    }
    o.check(too_big == 0, "instance above 500 sites");
    o.check(bad_islands == 0, "islands");
    o.check(bad_clusters == 0, "clusters");
    auto cc = cluster_constants(1.0, 2, 1.0, 1.0);
    o.check(std::abs(cc.L_delta - 2.02) < 5e-3, "L_delta");
    o.check(std::abs(cc.eta_delta - 0.0275) < 5e-5, "eta_delta");
    o.detail << "100 instances (" << nonempty << " with islands), mismatches " << bad_islands << " / " << bad_clusters
             << "; L_delta " << cc.L_delta << ", eta_delta " << cc.eta_delta;
}

// ---------------------------------------------------------------------------
// 11. Feynman-Kac

void crit_fk(Outcome& o) {
    ConstantPotential V(0.7);
    auto e = fk_estimate(V, 2, 2.0, 0.01, 200, 1);
    o.check(std::abs(e.mean / std::exp(1.4) - 1.0) < 1e-12 && e.variance == 0.0, "constant potential");
    auto z = fk_estimate(V, 2, 0.0, 0.01, 50, 1);
    o.check(z.mean == 1.0 && z.variance == 0.0, "t = 0");

    auto spec = CovarianceSpec::make(0.25, 1.0, "poly3", 2);
    auto an = fk_annealed(spec, 1.0, 0.005, 400, 10, 1111);
    auto gm = fk_gaussian_moment(spec, 1.0, 0.005, 4000, 1112);
    double zs = (an.mean - gm.mean) / std::hypot(an.se, gm.se);
    o.check(std::abs(zs) < 3.0, "field-averaged estimate vs Gaussian moment");
    o.detail << "e^{ct} exact, t=0 -> 1; field average " << an.mean << " +- " << an.se << " (400 fields x 10 paths), "
             << "Gaussian moment " << gm.mean << " +- " << gm.se << ", z " << zs;
}

// ---------------------------------------------------------------------------
// 12. localized lower bound

void crit_localized(Outcome& o) {
    auto spec = CovarianceSpec::make(1.0, 1.0, "poly3", 2);
    const double t = 1.0, dt = 0.005;
    HPoint c = HPoint::polar(1.0, unit(2, 0));
    PlantedPeak P(spec, c, 2.0);

    LocalizedEvents vac{0.2, 1.0, INFINITY, c, INFINITY};
    auto full = fk_estimate(P, 2, t, dt, 1000, 1201);
    auto loc = fk_localized_lower(P, 2, t, dt, vac, 1000, 1201);
    o.check(std::abs(loc.mean - full.mean) <= 1e-12 * full.mean, "vacuous events");

    struct Run {
        Potential* V;
        LocalizedEvents ev;
    };
    auto field_spec = CovarianceSpec::make(0.25, 1.0, "poly3", 2);
    LatticePotential F(field_spec, 1202);
    F.plant_peak(c, 2.0);
    std::vector<Run> grid;
    for (double eps : {0.2, 0.4})
        for (double tube : {0.75, 1.25})
            for (double rad : {1.0, 1.5}) grid.push_back({&P, {eps, 1.0, tube, c, rad}});
    grid.push_back({&F, {0.2, 1.0, 1.0, c, 1.0}});
    grid.push_back({&F, {0.4, 1.0, 1.25, c, 1.5}});

    int bad = 0;
    double worst_z = -INFINITY;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        auto& r = grid[k];
        auto u = fk_estimate(*r.V, 2, t, dt, 1000, 1210 + k);
        auto l = fk_localized_lower(*r.V, 2, t, dt, r.ev, 1000, 1210 + k);
        double zz = (l.mean - u.mean) / std::hypot(l.se, u.se);
        worst_z = std::max(worst_z, zz);
        if (l.mean > u.mean + 3.0 * std::hypot(l.se, u.se)) ++bad;
    }
    o.check(bad == 0, "restricted above unrestricted + 3 SE");
    o.detail << "vacuous gap " << std::abs(loc.mean - full.mean) << "; " << grid.size() << " configs, max z " << worst_z;
}

// ---------------------------------------------------------------------------
// 13. large deviations

void crit_ldp(Outcome& o) {
    auto rep = energy_excess_check(1.0, 0.5, 0.02, 0.001, 20, 1301);
    double bound = 1.0 + 0.25 / 128.0 - 4.0 * 1.0 * (5 * 0.02 + 2 * 1.0 * 0.001);
    o.check(std::abs(rep.bound - bound) < 1e-12, "bound value");
    o.check(rep.min_energy >= bound - 1e-2, "energy minimum");

    HPoint x = HPoint::origin(3), y = HPoint::polar(2.0, unit(3, 0));
    auto ldp = bridge_ldp_decay(x, y, 1.2, {0.4, 0.2, 0.1, 0.05}, 4000, 1302);
    o.check(ldp.fit.n == 4, "all durations have hits");
    o.check(ldp.kappa > 0.0, "kappa");
    o.check(ldp.fit.r2 >= 0.9, "fit R^2");
    o.detail << "min energy " << rep.min_energy << " vs bound " << bound << "; kappa " << ldp.kappa << ", R^2 "
             << ldp.fit.r2 << " (d=3, d(x,y)=2, delta=1.2)";
}

// ---------------------------------------------------------------------------
// 14. upper-bound machinery

void crit_route_budget(Outcome& o) {
    ModelParams p(2, 0.25);
    RouteInputs in;
    in.K0 = 20.0;
    in.C_R0_hat = 50.0;
    in.delta = 3.0;
    in.alpha = 0.1;
    in.mu = p.mu0();
    in.eta = 1.0;
    in.lambda = 0.5;
    in.eta = 0.9 * route_constants(in, p).eta_delta;
    in.lambda = 0.1 * in.eta;
    require_lambda_eta(in, p);
    RouteConstants rc = route_constants(in, p);

    const double t = 20.0, s43 = std::pow(t, 4.0 / 3.0), t53 = std::pow(t, 5.0 / 3.0);
    std::mt19937_64 gen(1401);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int violations = 0, vacuous = 0;
    double gap_lo = std::max(0.5 * in.lambda * s43, rc.hop_offset(t)) * 1.01, gap_hi = 2 * in.K0 * s43;
    int m_max = static_cast<int>(std::floor(rc.N_hat_lambda));
    for (int it = 0; it < 1000; ++it) {
        RouteGeometry g;
        int m = 1 + static_cast<int>(U(gen) * m_max);
        int letters = 1 + static_cast<int>(U(gen) * 3);
        for (int i = 0; i < m; ++i) {
            g.D.push_back(gap_lo + U(gen) * (gap_hi - gap_lo));
            g.word.push_back(static_cast<int>(U(gen) * letters));
        }
        // reduced positions from the string oracle: the last occurrence of each kept letter
        std::string w;
        for (int c : g.word) w += static_cast<char>('a' + c);
        std::string red = brute_reduce(w);
        std::vector<std::size_t> pos;
        for (char ch : red) pos.push_back(w.rfind(ch));
        double red_sum = g.D[0] - rc.hop_offset(t);
        for (std::size_t l = 0; l + 1 < pos.size(); ++l) red_sum += g.D[pos[l] + 1] - rc.hop_offset(t);
        double k_hi = std::min(in.K0, red_sum / s43 + rc.error_term(t));
        g.K_star = (0.05 + 0.95 * U(gen)) * k_hi;
        auto b = route_budget(g, t, in, p);
        if (!std::isfinite(b.log_J)) ++vacuous;
        if (in.delta * t53 + b.log_I > b.log_bound) ++violations;
    }
    o.check(violations == 0, "route integral above its bound");

    double prev = INFINITY;
    bool decreasing = true;
    o.detail << "1000 geometries at t=20: " << violations << " violations (" << vacuous << " vacuous); log J";
    for (double tt : {10.0, 20.0, 40.0}) {
        double s = std::pow(tt, 4.0 / 3.0);
        RouteGeometry g{{5.0 * s, 2.5 * s, 3.0 * s}, {0, 1, 0}, 2.0};
        auto b = route_budget(g, tt, in, p);
        decreasing = decreasing && std::isfinite(b.log_J) && b.log_J < prev;
        prev = b.log_J;
        o.detail << " " << b.log_J;
    }
    o.check(decreasing, "J decreasing in t");

    ModelParams q(2, 0.25);
    const double K0 = 1.0, root = std::sqrt(64.0 * q.mu0() * std::sqrt(K0));
    bool flips = true;
    for (int N : {1, 2, 3, 4, 6, 8}) {
        double c = root / N;
        flips = flips && long_route_tail(c * (1 + 1e-9), N, 10.0, q, K0).exponent > 0.0 &&
                long_route_tail(c * (1 - 1e-9), N, 10.0, q, K0).exponent < 0.0 &&
                std::abs(long_route_tail(c, N, 10.0, q, K0).exponent) < 1e-12;
    }
    o.check(flips, "exponent sign flip");
    o.detail << "; sign flip at eta N = " << root;
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;  // runtime limit, 0 for none
    std::function<void(Outcome&)> run;
};

std::set<int> parse_ids(const std::string& s) {
    std::set<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only, allowed;
    for (int i = 1; i + 1 < argc; i += 2) {
        std::string a = argv[i];
        if (a == "--only") only = parse_ids(argv[i + 1]);
        else if (a == "--allow-fail") allowed = parse_ids(argv[i + 1]);
        else {
            std::fprintf(stderr, "usage: acceptance [--only ids] [--allow-fail ids]\n");
            return 2;
        }
    }

    const std::vector<Criterion> all = {
        {1, "variational constants", 5, crit_variational},
        {2, "word reduction", 5, crit_words},
        {3, "inequality fuzzers", 30, crit_inequalities},
        {4, "first-passage density", 0, crit_first_passage},
        {5, "H^3 kernel oracle", 300, crit_h3_kernel},
        {6, "radial law of large numbers", 300, crit_radial_lln},
        {7, "exit-time form", 0, crit_exit},
        {8, "field fidelity", 0, crit_field},
        {9, "extremes", 0, crit_extremes},
        {10, "cluster oracles", 0, crit_clusters},
        {11, "Feynman-Kac", 600, crit_fk},
        {12, "localized lower bound", 0, crit_localized},
        {13, "large-deviation suite", 0, crit_ldp},
        {14, "upper-bound machinery", 0, crit_route_budget},
    };

    int failed = 0, unexpected = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        Outcome o;
        auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const Error& e) {
            o.pass = false;
            o.detail << " [" << error_kind_name(e.kind()) << ": " << e.what() << "]";
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0 && secs > c.limit_s) o.check(false, "runtime above " + std::to_string(int(c.limit_s)) + " s");
        if (!o.pass) {
            ++failed;
            if (!allowed.count(c.id)) ++unexpected;
        }
        std::printf("%s %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d failed, %d not in the allowed list\n", failed, unexpected);
    return unexpected == 0 ? 0 : 1;
}
