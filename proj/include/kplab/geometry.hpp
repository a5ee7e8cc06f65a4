#pragma once

#include "types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kplab {

// Radius of the circle through p, q, r. Collinear triples (normalized area below
// collinear_tol) have infinite radius.
template <typename Scalar>
Scalar circumradius(const Vec3<Scalar> &p, const Vec3<Scalar> &q, const Vec3<Scalar> &r,
                    Scalar collinear_tol = Scalar(1e-12)) {
    const Vec3<Scalar> a = q - p, b = r - p, c = r - q;
    const Scalar la = a.norm(), lb = b.norm(), lc = c.norm();
    const Scalar twice_area = a.cross(b).norm();
    const Scalar longest = std::max({la, lb, lc});
    if (longest == 0 || twice_area <= collinear_tol * longest * longest)
        return std::numeric_limits<Scalar>::infinity();
    return la * lb * lc / (2 * twice_area);
}

template <typename Scalar>
Scalar point_segment_distance(const Vec3<Scalar> &p, const Vec3<Scalar> &a, const Vec3<Scalar> &b) {
    const Vec3<Scalar> ab = b - a;
    const Scalar len2 = ab.squaredNorm();
    Scalar u = len2 > 0 ? (p - a).dot(ab) / len2 : Scalar(0);
    u = std::clamp(u, Scalar(0), Scalar(1));
    return (a + u * ab - p).norm();
}

// Closest distance between segments [p0, p1] and [q0, q1] (Ericson, RTCD 5.1.9).
template <typename Scalar>
Scalar segment_segment_distance(const Vec3<Scalar> &p0, const Vec3<Scalar> &p1, const Vec3<Scalar> &q0,
                                const Vec3<Scalar> &q1) {
    const Vec3<Scalar> d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
    const Scalar a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    Scalar s = 0, t = 0;
    if (a <= eps && e <= eps) return r.norm();
    if (a <= eps) {
        t = std::clamp(f / e, Scalar(0), Scalar(1));
    } else {
        const Scalar c = d1.dot(r);
        if (e <= eps) {
            s = std::clamp(-c / a, Scalar(0), Scalar(1));
        } else {
            const Scalar b = d1.dot(d2);
            const Scalar denom = a * e - b * b;
            s = denom > 0 ? std::clamp((b * f - c * e) / denom, Scalar(0), Scalar(1)) : Scalar(0);
            t = (b * s + f) / e;
            if (t < 0) {
                t = 0;
                s = std::clamp(-c / a, Scalar(0), Scalar(1));
            } else if (t > 1) {
                t = 1;
                s = std::clamp((b - c) / a, Scalar(0), Scalar(1));
            }
        }
    }
    return (p0 + s * d1 - (q0 + t * d2)).norm();
}

// Segment / triangle intersection (Moller-Trumbore with the segment parameter
// restricted to [0, 1]). Touching within a relative tolerance counts as a hit.
template <typename Scalar>
bool segment_intersects_triangle(const Vec3<Scalar> &p, const Vec3<Scalar> &q, const Vec3<Scalar> &a,
                                 const Vec3<Scalar> &b, const Vec3<Scalar> &c) {
    const Scalar tol = Scalar(1e-12);
    const Vec3<Scalar> dir = q - p;
    const Vec3<Scalar> e1 = b - a, e2 = c - a;
    const Vec3<Scalar> h = dir.cross(e2);
    const Scalar det = e1.dot(h);
    const Scalar scale = e1.norm() * e2.norm() * dir.norm();
    if (std::abs(det) <= tol * scale) return false; // parallel or degenerate
    const Scalar inv = 1 / det;
    const Vec3<Scalar> s = p - a;
    const Scalar u = inv * s.dot(h);
    if (u < -tol || u > 1 + tol) return false;
    const Vec3<Scalar> qv = s.cross(e1);
    const Scalar v = inv * dir.dot(qv);
    if (v < -tol || u + v > 1 + tol) return false;
    const Scalar t = inv * e2.dot(qv);
    return t >= -tol && t <= 1 + tol;
}

// Area vector of triangle (a, b, c): |result| is the area, the direction its unit normal.
template <typename Scalar>
Vec3<Scalar> area_vector(const Vec3<Scalar> &a, const Vec3<Scalar> &b, const Vec3<Scalar> &c) {
    return (b - a).cross(c - a) / 2;
}

template <typename Scalar>
Scalar triangle_min_angle(const Vec3<Scalar> &a, const Vec3<Scalar> &b, const Vec3<Scalar> &c) {
    auto angle = [](const Vec3<Scalar> &u, const Vec3<Scalar> &v) {
        return std::atan2(u.cross(v).norm(), u.dot(v));
    };
    return std::min({angle(b - a, c - a), angle(a - b, c - b), angle(a - c, b - c)});
}

} // namespace kplab
