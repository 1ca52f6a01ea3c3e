#include "doctest.h"

#include <cmath>
#include <deque>
#include <set>

#include "hypam/gaussfield.hpp"
#include "hypam/stats.hpp"

using namespace hypam;

namespace {

SpecPtr unit_spec(int d = 2) { return CovarianceSpec::make(1.0, 1.0, "poly3", d); }

// brute-force connected components of super-threshold sites under the 2h link
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

// O(n^2) transitive closure over islands
std::vector<std::vector<int>> closure_clusters(const std::vector<HPoint>& sites, const IslandSet& is, double link) {
    const int m = static_cast<int>(is.islands.size());
    std::vector<std::vector<char>> adj(m, std::vector<char>(m, 0));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            if (i == j) { adj[i][j] = 1; continue; }
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

FieldRealization fake_field(const std::vector<HPoint>& sites, const std::vector<double>& v) {
    FieldRealization f;
    f.sites = sites;
    f.values = Eigen::Map<const Vec>(v.data(), v.size());
    return f;
}

}  // namespace

TEST_CASE("covariance spec") {
    auto spec = unit_spec();
    CHECK((*spec)(0.0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK((*spec)(1.5) == 0.0);
    CHECK((*spec)(1.0) == 0.0);
    double h = 1e-5;
    CHECK(std::abs(((*spec)(h) - (*spec)(-h)) / (2 * h)) <= 1e-4);
    // decreasing profile, smooth against direct quadrature
    double prev = 2.0;
    for (double r = 0.0; r < 1.0; r += 0.01) {
        double c = (*spec)(r);
        CHECK(c <= prev + 1e-12);
        prev = c;
        CHECK(c == doctest::Approx(spec->raw(r) / spec->raw(0.0)).epsilon(1e-6).scale(1.0));
    }
    auto s3 = CovarianceSpec::make(2.0, 1.5, "poly4", 3);
    CHECK((*s3)(0.0) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK((*s3)(1.6) == 0.0);
    CHECK_THROWS_AS(CovarianceSpec::make(1.0, 1.0, "poly2", 2), Error);
    try {
        CovarianceSpec::make(1.0, 1.0, "gaussian", 2);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidBump);
    }
}

TEST_CASE("covariance matrices are PSD") {
    for (int d : {2, 3}) {
        auto spec = unit_spec(d);
        Stream s(21, tags::misc, d);
        std::vector<HPoint> sites;
        for (int i = 0; i < 30; ++i) sites.push_back(sample_uniform(Region::ball(HPoint::origin(d), 1.2), s));
        Mat K = covariance_matrix(*spec, sites);
        Eigen::SelfAdjointEigenSolver<Mat> es(K);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("single-site and pair statistics") {
    auto spec = unit_spec();
    HPoint o = HPoint::origin(2);
    std::vector<double> v;
    for (int r = 0; r < 100000; ++r) v.push_back(sample_field(spec, {o}, 1000 + r).values[0]);
    auto m = moments(v);
    CHECK(std::abs(m.var - 1.0) < 4 * std::sqrt(2.0 / v.size()));

    Vec dir(2);
    dir << 1, 0;
    for (double rho : {0.3, 0.7, 1.4}) {
        std::vector<HPoint> sites{o, HPoint::polar(rho, dir)};
        double sxy = 0, sxx = 0, syy = 0;
        const int n = 10000;
        for (int r = 0; r < n; ++r) {
            auto f = sample_field(spec, sites, 5000 + r);
            sxy += f.values[0] * f.values[1];
            sxx += f.values[0] * f.values[0];
            syy += f.values[1] * f.values[1];
        }
        double c = (*spec)(rho);
        double se = std::sqrt((1 + c * c) / n);
        CHECK(std::abs(sxy / n - c) < 4 * se);
        if (rho > 1.0) CHECK(std::abs(sxy / std::sqrt(sxx * syy)) <= 4 / std::sqrt(n));
    }
}

TEST_CASE("determinism and extension") {
    auto spec = unit_spec();
    auto sites = lattice_sites(Region::ball(HPoint::origin(2), 1.5), 0.25, 4);
    auto a = sample_field(spec, sites, 77);
    auto b = sample_field(spec, sites, 77);
    CHECK(a.values == b.values);

    Vec dir(2);
    dir << 0, 1;
    std::vector<HPoint> far{HPoint::polar(6.0, dir)};
    auto e1 = extend_field(a, far, 9), e2 = extend_field(a, far, 9);
    CHECK(e1.values == e2.values);
    CHECK(e1.size() == a.size() + 1);
    CHECK(e1.values.head(a.size()) == a.values);

    // isolated new site is an unconditional N(0, sigma^2) draw
    std::vector<double> iso;
    for (int r = 0; r < 20000; ++r) iso.push_back(extend_field(a, far, 100 + r).values[a.size()]);
    auto m = moments(iso);
    CHECK(std::abs(m.mean) < 4 * std::sqrt(1.0 / iso.size()));
    CHECK(std::abs(m.var - 1.0) < 4 * std::sqrt(2.0 / iso.size()));

    CHECK_THROWS(extend_field(a, {sites[3]}, 1));
    CHECK_THROWS(sample_field(spec, {sites[0], sites[0]}, 1));
}

TEST_CASE("two-stage covariance equals one-shot covariance") {
    auto spec = unit_spec();
    Vec u(2);
    u << 1, 0;
    Vec w(2);
    w << 0.6, 0.8;
    std::vector<HPoint> old_sites{HPoint::origin(2), HPoint::polar(0.5, u)};
    std::vector<HPoint> new_sites{HPoint::polar(0.4, w), HPoint::polar(0.8, u)};
    std::vector<HPoint> all = old_sites;
    all.insert(all.end(), new_sites.begin(), new_sites.end());
    Mat target = covariance_matrix(*spec, all);
    const int n = 10000;
    Mat acc = Mat::Zero(4, 4);
    for (int r = 0; r < n; ++r) {
        auto f = sample_field(spec, old_sites, 2 * r);
        auto g = extend_field(f, new_sites, 2 * r + 1);
        acc += g.values * g.values.transpose();
    }
    acc /= n;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double se = std::sqrt((target(i, i) * target(j, j) + target(i, j) * target(i, j)) / n);
            CHECK(std::abs(acc(i, j) - target(i, j)) < 4 * se);
        }
}

TEST_CASE("sequential simulation above the dense cap keeps the law") {
    auto spec = unit_spec();
    auto sites = lattice_sites(Region::ball(HPoint::origin(2), 1.0), 0.25, 3);
    FieldOptions opt;
    opt.dense_cap = 5;
    const int n = 4000;
    std::vector<double> v0, cov;
    int i = 0, j = 1;
    for (int r = 0; r < n; ++r) {
        auto f = sample_field(spec, sites, r, opt);
        v0.push_back(f.values[i]);
        cov.push_back(f.values[i] * f.values[j]);
    }
    double c = (*spec)(distance(sites[i], sites[j]));
    CHECK(std::abs(moments(v0).var - 1.0) < 4 * std::sqrt(2.0 / n));
    CHECK(std::abs(moments(cov).mean - c) < 4 * std::sqrt((1 + c * c) / n));
}

TEST_CASE("tilted sample") {
    auto spec = unit_spec();
    HPoint o = HPoint::origin(2);
    Vec u(2);
    u << 1, 0;
    std::vector<HPoint> sites{o, HPoint::polar(1.3, u)};
    const int n = 10000;
    std::vector<double> a, b, z;
    for (int r = 0; r < n; ++r) {
        auto f = tilted_sample(spec, sites, 2.0, r);
        a.push_back(f.values[0]);
        b.push_back(f.values[1]);
        z.push_back(tilted_sample(spec, sites, 0.0, n + r).values[0]);
    }
    CHECK(std::abs(moments(a).mean - 2.0) < 4 * std::sqrt(1.0 / n));
    CHECK(std::abs(moments(b).mean) < 4 * std::sqrt(1.0 / n));
    std::vector<double> plain;
    for (int r = 0; r < n; ++r) plain.push_back(sample_field(spec, sites, 3 * n + r).values[0]);
    CHECK(ks_two_sample(z, plain).p_value > 0.01);
}

TEST_CASE("max scan") {
    auto spec = unit_spec();
    MaxScanOptions opt;
    opt.R_list = {0.05};
    opt.spacing = 0.25;
    opt.n_reps = 20000;
    auto rows = max_scan(spec, opt, 5);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n_sites == 1);
    CHECK(std::abs(rows[0].mean_max - std::sqrt(2 / M_PI)) < 4 * rows[0].se_max);

    MaxScanOptions big;
    big.R_list = {6.0};
    big.site_cap = 100;
    CHECK_THROWS_AS(max_scan(spec, big, 1), Error);
    big.stop_on_budget = false;
    auto r2 = max_scan(spec, big, 1);
    CHECK(r2[0].budget_exceeded);

    MaxScanOptions mid;
    mid.R_list = {2.0};
    mid.n_reps = 400;
    auto r3 = max_scan(spec, mid, 8);
    for (auto& b : borell_check(r3[0].maxima, 1.0)) CHECK(b.holds);
}

TEST_CASE("islands and clusters against brute force") {
    auto spec = unit_spec();
    for (int inst = 0; inst < 20; ++inst) {
        auto sites = lattice_sites(Region::ball(HPoint::origin(2), 2.0), 0.25, 50 + inst);
        REQUIRE(sites.size() <= 500);
        auto f = sample_field(spec, sites, 900 + inst);
        double t = 1.0, delta = 0.5, h = 0.25;
        auto is = detect_islands(f, delta, t, h);
        CHECK(is.islands == bfs_islands(f, 0.5, 0.5));
        for (auto& isl : is.islands)
            for (int s : isl) CHECK(f.values[s] > is.threshold);
        for (double eta : {0.3, 0.6, 1.0}) {
            auto cs = build_clusters(sites, is, eta, t);
            std::vector<std::vector<int>> got;
            for (auto& c : cs.clusters) got.push_back(c.islands);
            std::sort(got.begin(), got.end());
            CHECK(got == closure_clusters(sites, is, eta));
        }
    }
}

TEST_CASE("island and cluster edge cases") {
    Vec u(2);
    u << 1, 0;
    std::vector<HPoint> line;
    for (int i = 0; i < 6; ++i) line.push_back(HPoint::polar(0.25 * i, u));
    auto none = detect_islands(fake_field(line, {0, 0, 0, 0, 0, 0}), 1.0, 1.0, 0.25);
    CHECK(none.islands.empty());
    auto one = detect_islands(fake_field(line, {0, 0, 5, 0, 0, 0}), 1.0, 1.0, 0.25);
    REQUIRE(one.islands.size() == 1);
    CHECK(one.islands[0] == std::vector<int>{2});

    // islands 2 eta t^{4/3} apart stay separate; a chain at half that spacing merges
    std::vector<HPoint> pts;
    for (int i = 0; i < 4; ++i) pts.push_back(HPoint::polar(1.0 * i, u));
    IslandSet is;
    is.islands = {{0}, {1}, {2}, {3}};
    double t = 1.0;
    CHECK(build_clusters(pts, is, 0.5, t).clusters.size() == 4);
    CHECK(build_clusters(pts, is, 2.0, t).clusters.size() == 1);
    auto cs = build_clusters(pts, is, 2.0, t);
    CHECK(cs.clusters[0].diameter == doctest::Approx(3.0));
    CHECK((cs.clusters[0].center == 1 || cs.clusters[0].center == 2));
}

TEST_CASE("cluster constants") {
    auto c = cluster_constants(1.0, 2, 1.0, 1.0);
    CHECK(c.L_delta == doctest::Approx(2.02));
    CHECK(c.eta_delta == doctest::Approx(0.0275).epsilon(1e-3));
    CHECK(cluster_constants(0.5, 2, 1.0, 1.0).L_delta == doctest::Approx(4 * 2.02));
}

TEST_CASE("cluster-property frequency falls with t") {
    auto spec = CovarianceSpec::make(1.0, 0.5, "poly3", 2);
    ClusterPropertyOptions opt;
    opt.region = Region::ball(HPoint::origin(2), 3.0);
    opt.spacing = 0.25;
    opt.delta = 1.0;
    opt.eta = 9.0;
    opt.L = 2;
    opt.n_reps = 40;
    double prev = 2.0;
    std::vector<double> fr;
    for (double t : {1.0, 2.0, 4.0}) {
        double f = cluster_property_frequency(spec, opt, t, 31);
        fr.push_back(f);
        MESSAGE("t=" << t << " frequency " << f);
        CHECK(f <= prev);
        prev = f;
    }
    CHECK(fr.front() > fr.back());
}

TEST_CASE("gradient maxima grow sub-linearly") {
    auto spec = unit_spec();
    std::vector<double> R{1.0, 1.5, 2.0, 2.5};
    auto rows = gradient_max_scan(spec, R, 0.25, 60, 17);
    std::vector<double> x, y;
    for (auto& r : rows) {
        x.push_back(std::log(r.R));
        y.push_back(std::log(r.mean_grad_max));
    }
    CHECK(linear_fit(x, y).slope <= 0.75);
}
