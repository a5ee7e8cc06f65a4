#pragma once

// Midline and director reconstruction from curvature data.
//
// The frame (t, d, t x d) is transported by
//     x' = t,  t' = k1 d + k2 (t x d),  d' = w (t x d) - k1 t,
// i.e. every director rotates with the Darboux vector  w t - k2 d + k1 (t x d).

#include "errors.hpp"
#include "types.hpp"

#include <cmath>
#include <string>

namespace kplab {

// Densities (kappa1, kappa2, omega) sampled at n+1 uniformly spaced nodes on [0, L].
// Between nodes the field is piecewise linear.
template <typename Scalar>
struct CurvatureField {
    using Samples = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

    Scalar length = 1;
    Scalar exponent = 2; // the p of the ambient L^p space
    Samples samples;     // row k = (kappa1, kappa2, omega) at s = k h

    Index intervals() const { return samples.rows() - 1; }
    Scalar spacing() const { return length / Scalar(intervals()); }

    Vec3<Scalar> at(Scalar s) const {
        const Index n = intervals();
        Scalar u = s / spacing();
        if (u <= 0) return samples.row(0).transpose();
        if (u >= Scalar(n)) return samples.row(n).transpose();
        Index k = static_cast<Index>(std::floor(u));
        if (k >= n) k = n - 1;
        const Scalar f = u - Scalar(k);
        return ((1 - f) * samples.row(k) + f * samples.row(k + 1)).transpose();
    }

    // Composite discrete L^p norm (sum of the component integrals of |.|^p, trapezoid rule).
    Scalar norm() const {
        const Index n = intervals();
        const Scalar h = spacing();
        Scalar acc = 0;
        for (Index k = 0; k <= n; ++k) {
            const Scalar w = (k == 0 || k == n) ? h / 2 : h;
            for (int c = 0; c < 3; ++c) acc += w * std::pow(std::abs(samples(k, c)), exponent);
        }
        return std::pow(acc, 1 / exponent);
    }

    void validate() const {
        if (!(length > 0) || !std::isfinite(double(length)))
            throw Error(ErrorCode::InvalidArgument, "curvature field length must be positive");
        if (!(exponent > 1))
            throw Error(ErrorCode::InvalidArgument, "curvature field exponent p must exceed 1");
        if (samples.rows() < 9)
            throw Error(ErrorCode::InvalidArgument, "curvature field needs n >= 8 intervals");
        if (!samples.allFinite())
            throw Error(ErrorCode::NonFiniteSample, "curvature field contains NaN or infinite samples");
    }

    static CurvatureField constant(Scalar L, Index n, Scalar k1, Scalar k2, Scalar omega) {
        CurvatureField w;
        w.length = L;
        w.samples.resize(n + 1, 3);
        w.samples.col(0).setConstant(k1);
        w.samples.col(1).setConstant(k2);
        w.samples.col(2).setConstant(omega);
        return w;
    }

    // f(s) -> Vec3 (kappa1, kappa2, omega)
    template <class Fn>
    static CurvatureField sample(Scalar L, Index n, Fn &&f) {
        CurvatureField w;
        w.length = L;
        w.samples.resize(n + 1, 3);
        for (Index k = 0; k <= n; ++k) w.samples.row(k) = f(L * Scalar(k) / Scalar(n)).transpose();
        return w;
    }
};

template <typename Scalar>
struct InitialFrame {
    Vec3<Scalar> origin = Vec3<Scalar>::Zero();
    Vec3<Scalar> tangent = Vec3<Scalar>::UnitX();
    Vec3<Scalar> director = Vec3<Scalar>::UnitY();

    void validate() const {
        const Scalar tol = Scalar(1e-12);
        if (!origin.allFinite() || !tangent.allFinite() || !director.allFinite())
            throw Error(ErrorCode::DegenerateFrame, "initial frame has non-finite entries");
        if (std::abs(tangent.norm() - 1) > tol || std::abs(director.norm() - 1) > tol)
            throw Error(ErrorCode::DegenerateFrame, "initial tangent and director must be unit vectors");
        if (std::abs(tangent.dot(director)) > tol)
            throw Error(ErrorCode::DegenerateFrame, "initial tangent and director must be orthogonal");
    }
};

// Discrete solution of the frame ODE. Column k of x/t/d is the node at param(k).
template <typename Scalar>
struct FramedCurve {
    Scalar length = 0; // L of the underlying rod (the parameter range may extend past it)
    VecX<Scalar> param;
    Nodes<Scalar> x, t, d;

    Index size() const { return x.cols(); }
    Vec3<Scalar> binormal(Index k) const { return t.col(k).cross(d.col(k)); }
};

template <typename Scalar>
struct ClosureDefects {
    Scalar position = 0;
    Scalar tangent = 0;
    Scalar director = 0;
};

// Absolute tolerances for (C1)/(C2); position tolerance is relative to L.
template <typename Scalar>
struct ClosureTolerance {
    Scalar position_rel = Scalar(1e-6);
    Scalar tangent = Scalar(1e-6);
};

template <typename Scalar>
struct ClosedUpCurve {
    FramedCurve<Scalar> base;
    Scalar tau = 0;
    Scalar phi = 0;
    VecX<Scalar> param; // [0, L + 1]
    Nodes<Scalar> nodes;
};

namespace detail {

template <typename Scalar>
struct FrameState {
    Vec3<Scalar> x, t, d;
};

template <typename Scalar>
inline FrameState<Scalar> frame_rate(const FrameState<Scalar> &y, const Vec3<Scalar> &w) {
    const Vec3<Scalar> b = y.t.cross(y.d);
    return {y.t, w[0] * y.d + w[1] * b, w[2] * b - w[0] * y.t};
}

template <typename Scalar>
inline FrameState<Scalar> axpy(const FrameState<Scalar> &y, Scalar a, const FrameState<Scalar> &k) {
    return {y.x + a * k.x, y.t + a * k.t, y.d + a * k.d};
}

template <typename Scalar>
inline void orthonormalize(Vec3<Scalar> &t, Vec3<Scalar> &d) {
    t.normalize();
    d -= d.dot(t) * t;
    d.normalize();
}

} // namespace detail

// Classical RK4 on (x, t, d) with re-orthonormalization after every step.
template <typename Scalar>
FramedCurve<Scalar> integrate_frame(const CurvatureField<Scalar> &w, const InitialFrame<Scalar> &f0) {
    w.validate();
    f0.validate();
    const Index n = w.intervals();
    const Scalar h = w.spacing();

    FramedCurve<Scalar> c;
    c.length = w.length;
    c.param.resize(n + 1);
    c.x.resize(3, n + 1);
    c.t.resize(3, n + 1);
    c.d.resize(3, n + 1);

    detail::FrameState<Scalar> y{f0.origin, f0.tangent, f0.director};
    c.param[0] = 0;
    c.x.col(0) = y.x;
    c.t.col(0) = y.t;
    c.d.col(0) = y.d;
    for (Index k = 0; k < n; ++k) {
        const Vec3<Scalar> w0 = w.samples.row(k).transpose();
        const Vec3<Scalar> w1 = w.samples.row(k + 1).transpose();
        const Vec3<Scalar> wm = (w0 + w1) / 2;
        const auto k1 = detail::frame_rate(y, w0);
        const auto k2 = detail::frame_rate(detail::axpy(y, h / 2, k1), wm);
        const auto k3 = detail::frame_rate(detail::axpy(y, h / 2, k2), wm);
        const auto k4 = detail::frame_rate(detail::axpy(y, h, k3), w1);
        y.x += h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
        y.t += h / 6 * (k1.t + 2 * k2.t + 2 * k3.t + k4.t);
        y.d += h / 6 * (k1.d + 2 * k2.d + 2 * k3.d + k4.d);
        detail::orthonormalize(y.t, y.d);
        c.param[k + 1] = h * Scalar(k + 1);
        c.x.col(k + 1) = y.x;
        c.t.col(k + 1) = y.t;
        c.d.col(k + 1) = y.d;
    }
    c.param[n] = w.length;
    return c;
}

// Gaps between the frame at s = L and at s = 0 (the parameter L is the last node within [0, L]).
template <typename Scalar>
ClosureDefects<Scalar> closure_defects(const FramedCurve<Scalar> &c) {
    Index last = 0;
    while (last + 1 < c.size() && c.param[last + 1] <= c.length) ++last;
    return {(c.x.col(last) - c.x.col(0)).norm(), (c.t.col(last) - c.t.col(0)).norm(),
            (c.d.col(last) - c.d.col(0)).norm()};
}

template <typename Scalar>
bool is_closed(const FramedCurve<Scalar> &c, const ClosureTolerance<Scalar> &tol = {}) {
    const auto g = closure_defects(c);
    return g.position <= tol.position_rel * c.length && g.tangent <= tol.tangent;
}

// Number of segments used on the unit parameter interval [L, L + 1] so that the
// spacing stays close to the curve's grid spacing h.
template <typename Scalar>
Index tail_intervals(Scalar h) {
    return std::max<Index>(1, static_cast<Index>(std::llround(double(1 / h))));
}

// The director rotation angle closing d(L) back onto d(0), in [0, 2 pi).
// Angles within snap_tol of 0 or of a full turn are reported as 0.
template <typename Scalar>
Scalar closing_angle(const Vec3<Scalar> &d0, const Vec3<Scalar> &tL, const Vec3<Scalar> &dL,
                     Scalar snap_tol = Scalar(1e-6)) {
    if ((dL + d0).norm() <= Scalar(1e-12))
        throw Error(ErrorCode::AmbiguousAngle, "d(L) = -d(0): closing angle sign rule degenerates");
    const Vec3<Scalar> bL = tL.cross(dL);
    Scalar phi = std::atan2(d0.dot(bL), d0.dot(dL));
    if (phi < 0) phi += two_pi<Scalar>;
    if (phi >= two_pi<Scalar> - snap_tol || phi < snap_tol) phi = 0;
    return phi;
}

// x + tau d on [0, L], closed by the arc of radius tau around x(L) on [L, L + 1].
template <typename Scalar>
ClosedUpCurve<Scalar> close_up_curve(const FramedCurve<Scalar> &c, Scalar tau,
                                     const ClosureTolerance<Scalar> &tol = {}) {
    if (!(tau > 0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
    const auto gaps = closure_defects(c);
    if (gaps.position > tol.position_rel * c.length || gaps.tangent > tol.tangent)
        throw Error(ErrorCode::NotClosed, "frame does not satisfy (C1)/(C2): position gap " +
                                              std::to_string(double(gaps.position)) + ", tangent gap " +
                                              std::to_string(double(gaps.tangent)));
    const Index n = c.size() - 1;
    const Vec3<Scalar> xL = c.x.col(n), tL = c.t.col(n), dL = c.d.col(n);
    const Vec3<Scalar> bL = tL.cross(dL);

    ClosedUpCurve<Scalar> out;
    out.base = c;
    out.tau = tau;
    out.phi = closing_angle<Scalar>(c.d.col(0), tL, dL);

    const Index m = tail_intervals(c.length / Scalar(n));
    out.param.resize(n + 1 + m);
    out.nodes.resize(3, n + 1 + m);
    for (Index k = 0; k <= n; ++k) {
        out.param[k] = c.param[k];
        out.nodes.col(k) = c.x.col(k) + tau * c.d.col(k);
    }
    for (Index j = 1; j <= m; ++j) {
        const Scalar u = Scalar(j) / Scalar(m);
        const Scalar a = out.phi * u;
        out.param[n + j] = c.length + u;
        out.nodes.col(n + j) = xL + tau * (std::cos(a) * dL + std::sin(a) * bL);
    }
    return out;
}

// Constant extension x(s) = x(L) on [L, L + 1]; the frame is frozen at its s = L value.
template <typename Scalar>
FramedCurve<Scalar> extend_constant(const FramedCurve<Scalar> &c) {
    const Index n = c.size() - 1;
    const Index m = tail_intervals(c.length / Scalar(n));
    FramedCurve<Scalar> e;
    e.length = c.length;
    e.param.resize(n + 1 + m);
    e.x.resize(3, n + 1 + m);
    e.t.resize(3, n + 1 + m);
    e.d.resize(3, n + 1 + m);
    e.param.head(n + 1) = c.param;
    e.x.leftCols(n + 1) = c.x;
    e.t.leftCols(n + 1) = c.t;
    e.d.leftCols(n + 1) = c.d;
    for (Index j = 1; j <= m; ++j) {
        e.param[n + j] = c.length + Scalar(j) / Scalar(m);
        e.x.col(n + j) = c.x.col(n);
        e.t.col(n + j) = c.t.col(n);
        e.d.col(n + j) = c.d.col(n);
    }
    return e;
}

// Linear interpolation of the midline at an arbitrary parameter in [0, L].
template <typename Scalar>
Vec3<Scalar> midline_at(const FramedCurve<Scalar> &c, Scalar s) {
    const Index n = c.size() - 1;
    const Scalar h = c.length / Scalar(n);
    Scalar u = std::clamp(s / h, Scalar(0), Scalar(n));
    Index k = std::min<Index>(static_cast<Index>(std::floor(u)), n - 1);
    const Scalar f = u - Scalar(k);
    return (1 - f) * c.x.col(k) + f * c.x.col(k + 1);
}

} // namespace kplab
