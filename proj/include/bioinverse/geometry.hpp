#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace bioinverse {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    Vec2 normalized() const;
};

using Point2 = Vec2;

// Open or closed polyline in mm. The biofilm lies on one side of the
// traversal direction; which side is stored explicitly.
struct InterfaceCurve {
    std::vector<Point2> vertices;
    bool closed = false;
    bool biofilm_on_right = true;

    std::size_t segment_count() const;
    std::pair<Point2, Point2> segment(std::size_t i) const;
    void validate() const;
};

double bbox_diagonal(const InterfaceCurve& curve);

// Bidirectional measurement line: point o + t*d for |t| <= max_length.
struct MeasurementRay {
    Point2 origin;
    Vec2 direction; // unit length
    double max_length = 0.0;

    void validate() const;
};

// Signed distances in mm, one per ray; positive means toward the biofilm
// side of the ray origin.
using ResidualVector = Eigen::VectorXd;

// All intersection parameters t with |t| <= max_length, in curve-traversal
// order. Hits at a shared vertex are counted once (dedupe within 1e-12 mm).
std::vector<double> intersect_ray_curve(const MeasurementRay& ray,
                                        const InterfaceCurve& curve);

// Minimal-|t| intersection; an exact magnitude tie resolves toward the
// negative value. Throws NoIntersection when the list is empty.
double signed_distance(const MeasurementRay& ray, const InterfaceCurve& curve);

// Signed distance per ray. NoIntersection carries the lowest failing ray
// index. measure() runs the rays in parallel; measure_serial() is the
// reference implementation, and both produce bit-identical results.
ResidualVector measure(std::span<const MeasurementRay> rays,
                       const InterfaceCurve& curve);
ResidualVector measure_serial(std::span<const MeasurementRay> rays,
                              const InterfaceCurve& curve);

// Averaged-adjacent-segment vertex normal, oriented toward the biofilm side
// when into_biofilm is set, away from it otherwise.
Vec2 vertex_normal(const InterfaceCurve& curve, std::size_t vertex_index,
                   bool into_biofilm);

// Rays anchored at the given curve vertices along their vertex normals.
std::vector<MeasurementRay> normal_rays(const InterfaceCurve& curve,
                                        std::span<const std::size_t> vertex_indices,
                                        bool into_biofilm,
                                        double max_length);

} // namespace bioinverse
