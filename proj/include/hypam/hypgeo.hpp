#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "hypam/common.hpp"
#include "hypam/rng.hpp"

namespace hypam {

// A point of H^d. Stored as geodesic polar coordinates about the base point o:
// radius r and a unit direction u in R^d, so that the hyperboloid coordinates are
// (cosh r, sinh r * u). Distances are computed from (r, u) with a formula that has
// no cancellation, which keeps small distances exact far from o.
class HPoint {
public:
    HPoint() = default;

    static HPoint origin(int d);
    static HPoint polar(double r, const Vec& dir);
    // Hyperboloid coordinates (x0, x1..xd); throws InvalidPoint off the hyperboloid.
    static HPoint from_coords(const Vec& x);

    int dim() const { return static_cast<int>(u_.size()); }
    double radius() const { return r_; }
    const Vec& direction() const { return u_; }

    Vec coords() const;
    Vec poincare() const;

private:
    double r_ = 0.0;
    Vec u_;
};

double minkowski(const Vec& x, const Vec& y);
// acosh(max(1, -<x,y>)) straight from hyperboloid coordinates; fine near o only.
double hyperboloid_distance(const Vec& x, const Vec& y);
double poincare_distance(const Vec& p, const Vec& q);

double distance(const HPoint& x, const HPoint& y);

// Tangent vectors at x are expressed in the polar frame of x: the component along
// x.direction() is radial (outward), the orthogonal complement is tangential.
// At o this is the standard identification T_o H^d = R^d.
HPoint exp_map(const HPoint& x, const Vec& v);
Vec log_map(const HPoint& x, const HPoint& y);

HPoint geodesic_point(const HPoint& x, const HPoint& y, double s);

struct GeodesicSegment {
    HPoint a, b;
    double length = 0.0;
    Vec velocity;  // log_map(a, b)

    GeodesicSegment(const HPoint& from, const HPoint& to);
    // unit-speed: point_at(0) = a, point_at(length) = b
    HPoint point_at(double s) const;
};

double sphere_area(int d);  // area of S^{d-1} in R^d
double ball_volume(double R, int d);

struct Region {
    HPoint center;
    double inner = 0.0;
    double outer = 0.0;

    static Region ball(const HPoint& c, double R) { return {c, 0.0, R}; }
    static Region annulus(const HPoint& c, double r_in, double r_out) { return {c, r_in, r_out}; }
    bool contains(const HPoint& p) const;
};

// Uniform (volume) sampling in a region.
HPoint sample_uniform(const Region& region, Stream& rng);
Vec random_direction(int d, Stream& rng);

struct Packing {
    Region region;
    double radius = 0.0;
    std::vector<HPoint> centers;
};

// Randomized greedy maximal packing: centers lie in the region, pairwise more than
// 2r apart, and every region point ends up within 2r of a center.
Packing greedy_packing(const Region& region, double r, std::uint64_t seed,
                       std::size_t max_centers = 0);

// Bucketed index for range queries. Buckets are radial shells of width `cell`
// crossed with cubes on the unit sphere whose size shrinks like 1/sinh(r).
class PointIndex {
public:
    PointIndex(int d, double cell);

    int add(const HPoint& p);
    std::size_t size() const { return points_.size(); }
    const HPoint& point(int i) const { return points_[i]; }

    // indices with distance(q, p) <= radius, unordered
    void within(const HPoint& q, double radius, std::vector<int>& out) const;
    bool any_within(const HPoint& q, double radius) const;
    // -1 if the index is empty
    int nearest(const HPoint& q, double* dist = nullptr) const;

private:
    double cube_size(int shell) const;
    std::uint64_t key(int shell, const Vec& u) const;
    template <class F> void visit(const HPoint& q, double radius, F&& f) const;

    int d_;
    double cell_;
    std::vector<HPoint> points_;
    std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
    std::vector<std::vector<int>> shells_;
};

}  // namespace hypam
