#include "bioinverse/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "bioinverse/errors.hpp"
#include "bioinverse/threads.hpp"

namespace bioinverse {

Vec2 Vec2::normalized() const {
    const double n = norm();
    return {x / n, y / n};
}

std::size_t InterfaceCurve::segment_count() const {
    const std::size_t n = vertices.size();
    if (n < 2) return 0;
    return closed ? n : n - 1;
}

std::pair<Point2, Point2> InterfaceCurve::segment(std::size_t i) const {
    const std::size_t n = vertices.size();
    return {vertices[i], vertices[(i + 1) % n]};
}

void InterfaceCurve::validate() const {
    if (vertices.size() < 2)
        throw ValidationError("interface curve needs at least 2 vertices");
    const std::size_t nseg = segment_count();
    for (std::size_t i = 0; i < nseg; ++i) {
        const auto [a, b] = segment(i);
        if ((b - a).norm() == 0.0)
            throw ValidationError("zero-length curve segment at index " +
                                  std::to_string(i));
    }
}

double bbox_diagonal(const InterfaceCurve& curve) {
    if (curve.vertices.empty()) return 0.0;
    double xmin = curve.vertices.front().x, xmax = xmin;
    double ymin = curve.vertices.front().y, ymax = ymin;
    for (const auto& v : curve.vertices) {
        xmin = std::min(xmin, v.x);
        xmax = std::max(xmax, v.x);
        ymin = std::min(ymin, v.y);
        ymax = std::max(ymax, v.y);
    }
    return std::hypot(xmax - xmin, ymax - ymin);
}

void MeasurementRay::validate() const {
    if (std::abs(direction.norm() - 1.0) > 1e-9)
        throw ValidationError("ray direction is not unit length");
    if (!(max_length > 0.0))
        throw ValidationError("ray max_length must be positive");
}

std::vector<double> intersect_ray_curve(const MeasurementRay& ray,
                                        const InterfaceCurve& curve) {
    const Vec2 o = ray.origin;
    const Vec2 d = ray.direction;
    std::vector<double> ts;
    auto push = [&](double t) {
        if (std::abs(t) > ray.max_length) return;
        for (double seen : ts)
            if (std::abs(seen - t) <= 1e-12) return;
        ts.push_back(t);
    };
    const std::size_t nseg = curve.segment_count();
    for (std::size_t s = 0; s < nseg; ++s) {
        const auto [a, b] = curve.segment(s);
        const double g0 = d.cross(a - o);
        const double g1 = d.cross(b - o);
        if (g0 == 0.0) push(d.dot(a - o));
        if ((g0 < 0.0 && g1 > 0.0) || (g0 > 0.0 && g1 < 0.0)) {
            const double sc = g0 / (g0 - g1);
            const Vec2 p = a + (b - a) * sc;
            push(d.dot(p - o));
        }
        if (g1 == 0.0) push(d.dot(b - o));
    }
    return ts;
}

namespace {

double signed_distance_at(const MeasurementRay& ray, const InterfaceCurve& curve,
                          std::size_t ray_index) {
    const auto ts = intersect_ray_curve(ray, curve);
    if (ts.empty()) throw NoIntersection(ray_index);
    double best = ts.front();
    for (double t : ts) {
        if (std::abs(t) < std::abs(best) ||
            (std::abs(t) == std::abs(best) && t < best)) {
            best = t;
        }
    }
    return best;
}

} // namespace

double signed_distance(const MeasurementRay& ray, const InterfaceCurve& curve) {
    return signed_distance_at(ray, curve, 0);
}

ResidualVector measure_serial(std::span<const MeasurementRay> rays,
                              const InterfaceCurve& curve) {
    ResidualVector out(static_cast<Eigen::Index>(rays.size()));
    for (std::size_t i = 0; i < rays.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = signed_distance_at(rays[i], curve, i);
    return out;
}

ResidualVector measure(std::span<const MeasurementRay> rays,
                       const InterfaceCurve& curve) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(rays.size());
    ResidualVector out(n);
    std::atomic<std::ptrdiff_t> first_fail{n};
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[i] = signed_distance_at(rays[static_cast<std::size_t>(i)], curve,
                                        static_cast<std::size_t>(i));
        } catch (const NoIntersection&) {
            std::ptrdiff_t cur = first_fail.load();
            while (i < cur && !first_fail.compare_exchange_weak(cur, i)) {
            }
        }
    }
    const std::ptrdiff_t fail = first_fail.load();
    if (fail < n) throw NoIntersection(static_cast<std::size_t>(fail));
    return out;
}

Vec2 vertex_normal(const InterfaceCurve& curve, std::size_t vertex_index,
                   bool into_biofilm) {
    const auto& v = curve.vertices;
    (void)v.at(vertex_index);
    const std::size_t n = v.size();
    Vec2 tangent_sum{0.0, 0.0};
    auto add = [&](const Point2& a, const Point2& b) {
        tangent_sum = tangent_sum + (b - a).normalized();
    };
    if (curve.closed) {
        add(v[(vertex_index + n - 1) % n], v[vertex_index]);
        add(v[vertex_index], v[(vertex_index + 1) % n]);
    } else {
        if (vertex_index > 0) add(v[vertex_index - 1], v[vertex_index]);
        if (vertex_index + 1 < n) add(v[vertex_index], v[vertex_index + 1]);
    }
    const double norm = tangent_sum.norm();
    if (norm < 1e-12) throw DegenerateNormal(vertex_index);
    const Vec2 t = tangent_sum * (1.0 / norm);
    const Vec2 right{t.y, -t.x};
    const bool want_right = (curve.biofilm_on_right == into_biofilm);
    return want_right ? right : Vec2{-right.x, -right.y};
}

std::vector<MeasurementRay> normal_rays(const InterfaceCurve& curve,
                                        std::span<const std::size_t> vertex_indices,
                                        bool into_biofilm, double max_length) {
    std::vector<MeasurementRay> rays;
    rays.reserve(vertex_indices.size());
    for (std::size_t idx : vertex_indices) {
        const Point2 origin = curve.vertices.at(idx);
        rays.push_back({origin, vertex_normal(curve, idx, into_biofilm), max_length});
    }
    return rays;
}

} // namespace bioinverse
