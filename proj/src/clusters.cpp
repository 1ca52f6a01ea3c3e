#include <algorithm>
#include <cmath>
#include <numeric>

#include "hypam/gaussfield.hpp"

namespace hypam {

namespace {

struct UnionFind {
    std::vector<int> parent, rank;
    explicit UnionFind(int n) : parent(n), rank(n, 0) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank[a] < rank[b]) std::swap(a, b);
        parent[b] = a;
        if (rank[a] == rank[b]) ++rank[a];
    }
};

// groups of a union-find, each sorted, ordered by smallest member
std::vector<std::vector<int>> groups(UnionFind& uf, const std::vector<int>& members) {
    std::vector<std::vector<int>> out;
    std::vector<int> slot(uf.parent.size(), -1);
    for (int m : members) {
        int r = uf.find(m);
        if (slot[r] < 0) {
            slot[r] = static_cast<int>(out.size());
            out.emplace_back();
        }
        out[slot[r]].push_back(m);
    }
    for (auto& g : out) std::sort(g.begin(), g.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

IslandSet detect_islands(const FieldRealization& field, double delta, double t, double h) {
    require(delta > 0.0 && t > 0.0 && h > 0.0, "detect_islands: delta, t, h must be positive");
    IslandSet is;
    is.threshold = delta * std::pow(t, 2.0 / 3.0);
    is.link_radius = 2.0 * h;
    const int n = static_cast<int>(field.sites.size());
    if (n == 0) return is;
    std::vector<int> up;
    for (int i = 0; i < n; ++i)
        if (field.values[i] > is.threshold) up.push_back(i);
    if (up.empty()) return is;
    PointIndex idx(field.sites[0].dim(), is.link_radius);
    for (int i : up) idx.add(field.sites[i]);
    UnionFind uf(n);
    std::vector<int> nb;
    for (std::size_t k = 0; k < up.size(); ++k) {
        idx.within(field.sites[up[k]], is.link_radius, nb);
        for (int j : nb) uf.unite(up[k], up[j]);
    }
    is.islands = groups(uf, up);
    return is;
}

ClusterSet build_clusters(const std::vector<HPoint>& sites, const IslandSet& islands, double eta, double t) {
    require(eta > 0.0 && t > 0.0, "build_clusters: eta, t must be positive");
    ClusterSet cs;
    cs.link = eta * std::pow(t, 4.0 / 3.0);
    const int m = static_cast<int>(islands.islands.size());
    if (m == 0) return cs;

    std::vector<int> owner(sites.size(), -1);
    PointIndex idx(sites[0].dim(), std::min(cs.link, 1.0));
    std::vector<int> idx_site;
    for (int i = 0; i < m; ++i)
        for (int s : islands.islands[i]) {
            owner[s] = i;
            idx.add(sites[s]);
            idx_site.push_back(s);
        }
    UnionFind uf(m);
    std::vector<int> nb;
    for (int i = 0; i < m; ++i)
        for (int s : islands.islands[i]) {
            idx.within(sites[s], cs.link, nb);
            for (int j : nb) uf.unite(i, owner[idx_site[j]]);
        }
    std::vector<int> all(m);
    std::iota(all.begin(), all.end(), 0);
    for (auto& g : groups(uf, all)) {
        Cluster c;
        c.islands = g;
        for (int i : g) c.sites.insert(c.sites.end(), islands.islands[i].begin(), islands.islands[i].end());
        std::sort(c.sites.begin(), c.sites.end());
        double best = INFINITY;
        for (int a : c.sites) {
            double far = 0.0;
            for (int b : c.sites) far = std::max(far, distance(sites[a], sites[b]));
            c.diameter = std::max(c.diameter, far);
            if (far < best) { best = far; c.center = a; }
        }
        cs.clusters.push_back(std::move(c));
    }
    return cs;
}

ClusterConstants cluster_constants(double delta, int d, double K0, double C_R0_hat) {
    require(delta > 0.0 && K0 > 0.0 && C_R0_hat > 0.0, "cluster_constants: arguments must be positive");
    require(d >= 2, "dimension must be >= 2");
    ClusterConstants c;
    c.L_delta = 1.01 * 2.0 * (d - 1) * K0 / (C_R0_hat * delta * delta);
    c.eta_delta = 0.99 * std::min(1.0 / (4.0 * c.L_delta * c.L_delta),
                                  C_R0_hat * C_R0_hat * std::pow(delta, 4) / (36.0 * (d - 1) * (d - 1)));
    return c;
}

double cluster_property_frequency(SpecPtr spec, const ClusterPropertyOptions& opt, double t, std::uint64_t seed) {
    require(opt.L >= 1 && opt.n_reps >= 1, "cluster_property_frequency: L, n_reps must be >= 1");
    auto sites = lattice_sites(opt.region, opt.spacing, seed);
    Mat L = cholesky_with_jitter(covariance_matrix(*spec, sites), spec->sigma2());
    const double thr = opt.delta * std::pow(t, 2.0 / 3.0);
    const double ball = std::sqrt(opt.eta) * std::pow(t, 4.0 / 3.0);
    const double sep = 9.0 * spec->R0();
    int hits = 0;
    for (int r = 0; r < opt.n_reps; ++r) {
        Stream rng(seed, tags::field, (1ull << 40) | static_cast<std::uint64_t>(r));
        Vec z(sites.size());
        for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
        Vec v = L.triangularView<Eigen::Lower>() * z;
        std::vector<int> up;
        for (int i = 0; i < v.size(); ++i)
            if (v[i] > thr) up.push_back(i);
        bool found = false;
        for (std::size_t a = 0; a < up.size() && !found; ++a) {
            // greedy 9R0-separated selection inside the ball around up[a]
            std::vector<int> chosen;
            for (int b : up) {
                if (distance(sites[up[a]], sites[b]) > ball) continue;
                bool ok = true;
                for (int c : chosen) ok = ok && distance(sites[b], sites[c]) >= sep;
                if (ok) chosen.push_back(b);
            }
            found = static_cast<int>(chosen.size()) >= opt.L;
        }
        hits += found;
    }
    return static_cast<double>(hits) / opt.n_reps;
}

}  // namespace hypam
