#pragma once

// Rod cross sections A(s) in the (zeta1, zeta2) plane spanned by (d, t x d),
// together with quadrature rules over them.

#include "errors.hpp"
#include "types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace kplab {

template <typename Scalar>
struct Disk {
    Scalar radius = 1;
};

// Simple polygon, counter-clockwise.
template <typename Scalar>
struct Polygon {
    std::vector<Vec2<Scalar>> vertices;
};

template <typename Scalar>
using SectionShape = std::variant<Disk<Scalar>, Polygon<Scalar>>;

template <typename Scalar>
struct SectionQuadrature {
    std::vector<Vec2<Scalar>> points;
    std::vector<Scalar> weights;
};

// Gauss-Legendre nodes/weights on [-1, 1] (Golub-Welsch).
template <typename Scalar>
SectionQuadrature<Scalar> gauss_legendre(int n) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Mat J = Mat::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const Scalar b = Scalar(i) / std::sqrt(Scalar(4 * i * i - 1));
        J(i, i - 1) = J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(J);
    SectionQuadrature<Scalar> q;
    for (int i = 0; i < n; ++i) {
        const Scalar v0 = es.eigenvectors()(0, i);
        q.points.push_back(Vec2<Scalar>(es.eigenvalues()[i], 0));
        q.weights.push_back(2 * v0 * v0);
    }
    return q;
}

namespace detail {

template <typename Scalar>
Scalar polygon_signed_area(const Polygon<Scalar> &p) {
    Scalar a = 0;
    const std::size_t n = p.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto &u = p.vertices[i], &v = p.vertices[(i + 1) % n];
        a += u.x() * v.y() - v.x() * u.y();
    }
    return a / 2;
}

template <typename Scalar>
Scalar point_edge_distance(const Vec2<Scalar> &p, const Vec2<Scalar> &a, const Vec2<Scalar> &b) {
    const Vec2<Scalar> ab = b - a;
    const Scalar u = std::clamp((p - a).dot(ab) / ab.squaredNorm(), Scalar(0), Scalar(1));
    return (a + u * ab - p).norm();
}

template <typename Scalar>
bool polygon_contains(const Polygon<Scalar> &p, const Vec2<Scalar> &z) {
    bool inside = false;
    const std::size_t n = p.vertices.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto &a = p.vertices[i], &b = p.vertices[j];
        if ((a.y() > z.y()) != (b.y() > z.y()) &&
            z.x() < (b.x() - a.x()) * (z.y() - a.y()) / (b.y() - a.y()) + a.x())
            inside = !inside;
    }
    return inside;
}

} // namespace detail

template <typename Scalar>
Scalar section_area(const SectionShape<Scalar> &shape) {
    if (auto disk = std::get_if<Disk<Scalar>>(&shape)) return pi<Scalar> * disk->radius * disk->radius;
    return std::abs(detail::polygon_signed_area(std::get<Polygon<Scalar>>(shape)));
}

// Integral of zeta over the section.
template <typename Scalar>
Vec2<Scalar> section_first_moment(const SectionShape<Scalar> &shape) {
    if (std::holds_alternative<Disk<Scalar>>(shape)) return Vec2<Scalar>::Zero();
    const auto &p = std::get<Polygon<Scalar>>(shape);
    Vec2<Scalar> m = Vec2<Scalar>::Zero();
    const std::size_t n = p.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto &u = p.vertices[i], &v = p.vertices[(i + 1) % n];
        const Scalar cr = u.x() * v.y() - v.x() * u.y();
        m += cr * (u + v);
    }
    return m / 6;
}

template <typename Scalar>
bool section_contains(const SectionShape<Scalar> &shape, const Vec2<Scalar> &z) {
    if (auto disk = std::get_if<Disk<Scalar>>(&shape)) return z.norm() <= disk->radius;
    return detail::polygon_contains(std::get<Polygon<Scalar>>(shape), z);
}

// First boundary point hit by the ray from the origin at angle theta.
template <typename Scalar>
Vec2<Scalar> section_boundary_point(const SectionShape<Scalar> &shape, Scalar theta) {
    const Vec2<Scalar> dir(std::cos(theta), std::sin(theta));
    if (auto disk = std::get_if<Disk<Scalar>>(&shape)) return disk->radius * dir;
    const auto &p = std::get<Polygon<Scalar>>(shape);
    Scalar best = std::numeric_limits<Scalar>::infinity();
    const std::size_t n = p.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2<Scalar> a = p.vertices[i], e = p.vertices[(i + 1) % n] - a;
        const Scalar den = dir.x() * e.y() - dir.y() * e.x();
        if (std::abs(den) < std::numeric_limits<Scalar>::epsilon()) continue;
        const Scalar r = (a.x() * e.y() - a.y() * e.x()) / den;
        const Scalar u = (a.x() * dir.y() - a.y() * dir.x()) / den;
        if (r > 0 && u >= 0 && u <= 1) best = std::min(best, r);
    }
    return best * dir;
}

template <typename Scalar>
SectionQuadrature<Scalar> section_quadrature(const SectionShape<Scalar> &shape) {
    SectionQuadrature<Scalar> q;
    if (auto disk = std::get_if<Disk<Scalar>>(&shape)) {
        // Polar tensor rule: Gauss-Legendre in r (weight r), uniform in angle.
        constexpr int n_r = 4, n_theta = 12;
        const auto gl = gauss_legendre<Scalar>(n_r);
        const Scalar R = disk->radius;
        for (int i = 0; i < n_r; ++i) {
            const Scalar r = R * (1 + gl.points[std::size_t(i)].x()) / 2;
            const Scalar wr = gl.weights[std::size_t(i)] * R / 2 * r;
            for (int j = 0; j < n_theta; ++j) {
                const Scalar th = two_pi<Scalar> * Scalar(j) / n_theta;
                q.points.push_back(r * Vec2<Scalar>(std::cos(th), std::sin(th)));
                q.weights.push_back(wr * two_pi<Scalar> / n_theta);
            }
        }
        return q;
    }
    // Signed fan from the origin (valid for any simple polygon) with the
    // 7-point degree-5 triangle rule on each piece.
    const auto &p = std::get<Polygon<Scalar>>(shape);
    const Scalar a1 = Scalar(0.059715871789769820), b1 = Scalar(0.470142064105115090);
    const Scalar a2 = Scalar(0.797426985353087322), b2 = Scalar(0.101286507323456339);
    const Scalar w0 = Scalar(0.225), w1 = Scalar(0.132394152788506181), w2 = Scalar(0.125939180544827153);
    const Scalar bary[7][3] = {{Scalar(1) / 3, Scalar(1) / 3, Scalar(1) / 3},
                               {a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1},
                               {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2}};
    const Scalar wts[7] = {w0, w1, w1, w1, w2, w2, w2};
    const std::size_t n = p.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2<Scalar> u = p.vertices[i], v = p.vertices[(i + 1) % n];
        const Scalar signed_area = (u.x() * v.y() - v.x() * u.y()) / 2;
        if (signed_area == 0) continue;
        for (int k = 0; k < 7; ++k) {
            q.points.push_back(bary[k][1] * u + bary[k][2] * v);
            q.weights.push_back(wts[k] * signed_area);
        }
    }
    return q;
}

// A(s), piecewise constant along the rod, sandwiched as B_eta(0) in A(s) in B_nu(0).
template <typename Scalar>
class CrossSectionProfile {
public:
    using Shape = SectionShape<Scalar>;

    CrossSectionProfile() : CrossSectionProfile(Scalar(0.1), Scalar(0.1), Disk<Scalar>{Scalar(0.1)}) {}

    CrossSectionProfile(Scalar eta, Scalar nu, Shape shape)
        : CrossSectionProfile(eta, nu, {Scalar(0)}, {std::move(shape)}) {}

    // pieces[k] applies on [breaks[k], breaks[k + 1]).
    CrossSectionProfile(Scalar eta, Scalar nu, std::vector<Scalar> breaks, std::vector<Shape> pieces)
        : m_eta(eta), m_nu(nu), m_breaks(std::move(breaks)), m_pieces(std::move(pieces)) {
        validate();
        for (const auto &p : m_pieces) m_quadrature.push_back(section_quadrature(p));
    }

    static CrossSectionProfile disk(Scalar radius) { return {radius, radius, Disk<Scalar>{radius}}; }

    Scalar eta() const { return m_eta; }
    Scalar nu() const { return m_nu; }
    const std::vector<Scalar> &breaks() const { return m_breaks; }
    const std::vector<Shape> &pieces() const { return m_pieces; }

    std::size_t piece_index(Scalar s) const {
        std::size_t k = 0;
        while (k + 1 < m_breaks.size() && s >= m_breaks[k + 1]) ++k;
        return k;
    }

    const Shape &shape_at(Scalar s) const { return m_pieces[piece_index(s)]; }
    const SectionQuadrature<Scalar> &quadrature_at(Scalar s) const { return m_quadrature[piece_index(s)]; }
    Scalar area_at(Scalar s) const { return section_area(shape_at(s)); }
    Vec2<Scalar> first_moment_at(Scalar s) const { return section_first_moment(shape_at(s)); }

    void validate() const {
        if (!(m_eta > 0) || !(m_nu >= m_eta))
            throw Error(ErrorCode::InvalidArgument, "cross section needs 0 < eta <= nu");
        if (m_pieces.empty() || m_breaks.size() != m_pieces.size() || m_breaks.front() != 0)
            throw Error(ErrorCode::InvalidArgument, "cross section pieces/breaks mismatch");
        for (std::size_t k = 1; k < m_breaks.size(); ++k)
            if (!(m_breaks[k] > m_breaks[k - 1]))
                throw Error(ErrorCode::InvalidArgument, "cross section breaks must increase");
        const Scalar slack = Scalar(1e-12) * m_nu;
        for (const auto &piece : m_pieces) {
            if (auto disk = std::get_if<Disk<Scalar>>(&piece)) {
                if (disk->radius < m_eta - slack || disk->radius > m_nu + slack)
                    throw Error(ErrorCode::InvalidArgument, "disk radius outside [eta, nu]");
                continue;
            }
            const auto &p = std::get<Polygon<Scalar>>(piece);
            if (p.vertices.size() < 3) throw Error(ErrorCode::InvalidArgument, "polygon needs 3 vertices");
            if (!(detail::polygon_signed_area(p) > 0))
                throw Error(ErrorCode::InvalidArgument, "polygon must be counter-clockwise");
            if (!detail::polygon_contains(p, Vec2<Scalar>(Vec2<Scalar>::Zero())))
                throw Error(ErrorCode::InvalidArgument, "polygon must contain the centerline");
            for (std::size_t i = 0; i < p.vertices.size(); ++i) {
                const auto &a = p.vertices[i], &b = p.vertices[(i + 1) % p.vertices.size()];
                if (a.norm() > m_nu + slack)
                    throw Error(ErrorCode::InvalidArgument, "polygon vertex outside B_nu");
                if (detail::point_edge_distance<Scalar>(Vec2<Scalar>::Zero(), a, b) < m_eta - slack)
                    throw Error(ErrorCode::InvalidArgument, "polygon does not contain B_eta");
            }
        }
    }

private:
    Scalar m_eta, m_nu;
    std::vector<Scalar> m_breaks;
    std::vector<Shape> m_pieces;
    std::vector<SectionQuadrature<Scalar>> m_quadrature;
};

} // namespace kplab
