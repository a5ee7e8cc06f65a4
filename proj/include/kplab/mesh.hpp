#pragma once

// Triangulated spanning surfaces with boundary loops glued to attachment curves
// on the rods (either the midline or a curve on the tube boundary).

#include "errors.hpp"
#include "geometry.hpp"
#include "rod_system.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace kplab {

enum class AttachmentKind { midline, tube };

inline const char *to_string(AttachmentKind k) { return k == AttachmentKind::midline ? "midline" : "tube"; }

// s -> x(s) + eps (offset.x d(s) + offset.y (t x d)(s)), sampled on the rod grid
// and interpolated linearly; periodic in s with period L.
template <typename Scalar>
struct AttachmentCurve {
    int rod = 0;
    AttachmentKind kind = AttachmentKind::midline;
    Vec2<Scalar> offset = Vec2<Scalar>::Zero(); // section coordinates before scaling by epsilon
    Scalar epsilon = 1;
    Scalar length = 1;
    Nodes<Scalar> samples; // columns at s_k = k L / n, k = 0..n-1

    static AttachmentCurve from_rod(const Rod<Scalar> &r, int index, AttachmentKind kind, Scalar epsilon,
                                    Scalar theta = 0) {
        AttachmentCurve a;
        a.rod = index;
        a.kind = kind;
        a.epsilon = epsilon;
        a.length = r.length();
        if (kind == AttachmentKind::tube) a.offset = section_boundary_point(r.section.shape_at(0), theta);
        a.resample(r);
        return a;
    }

    void resample(const Rod<Scalar> &r) {
        const Index n = r.curve.size() - 1;
        samples.resize(3, n);
        for (Index k = 0; k < n; ++k) samples.col(k) = r.region_point(k, epsilon * offset);
    }

    Vec3<Scalar> at(Scalar s) const {
        const Index n = samples.cols();
        Scalar u = s / length * Scalar(n);
        u -= Scalar(n) * std::floor(u / Scalar(n));
        Index k = static_cast<Index>(std::floor(u));
        if (k >= n) k = 0;
        const Scalar f = u - Scalar(k);
        return (1 - f) * samples.col(k) + f * samples.col((k + 1) % n);
    }
};

template <typename Scalar>
struct BoundaryLoop {
    int curve = 0;                 // index into SpanningSurface::attachments
    std::vector<Index> vertices;   // cyclic order
    std::vector<Scalar> params;    // attachment parameter of each vertex
};

template <typename Scalar>
struct SpanningSurface {
    using Vertices = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;
    using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3>;

    Vertices V;
    Faces F;
    std::vector<AttachmentCurve<Scalar>> attachments;
    std::vector<BoundaryLoop<Scalar>> loops;

    Index vertex_count() const { return V.rows(); }
    Index face_count() const { return F.rows(); }
    Vec3<Scalar> vertex(Index i) const { return V.row(i).transpose(); }

    Vec3<Scalar> area_vector_of(Index f) const {
        return area_vector<Scalar>(vertex(F(f, 0)), vertex(F(f, 1)), vertex(F(f, 2)));
    }

    Vec3<Scalar> centroid_of(Index f) const { return (vertex(F(f, 0)) + vertex(F(f, 1)) + vertex(F(f, 2))) / 3; }

    Scalar scale() const {
        if (V.rows() == 0) return 0;
        return (V.colwise().maxCoeff() - V.colwise().minCoeff()).norm();
    }

    Scalar area() const {
        Scalar a = 0;
        for (Index f = 0; f < face_count(); ++f) a += area_vector_of(f).norm();
        return a;
    }

    Scalar max_edge() const {
        Scalar m = 0;
        for (Index f = 0; f < face_count(); ++f)
            for (int e = 0; e < 3; ++e) m = std::max(m, (vertex(F(f, e)) - vertex(F(f, (e + 1) % 3))).norm());
        return m;
    }

    std::vector<bool> boundary_mask() const {
        std::vector<bool> mask(std::size_t(vertex_count()), false);
        for (const auto &l : loops)
            for (Index v : l.vertices) mask[std::size_t(v)] = true;
        return mask;
    }

    // Moves every boundary vertex back onto its attachment curve.
    void snap_boundary() {
        for (const auto &l : loops)
            for (std::size_t i = 0; i < l.vertices.size(); ++i)
                V.row(l.vertices[i]) = attachments[std::size_t(l.curve)].at(l.params[i]).transpose();
    }

    // Re-samples attachments from the current rod frames and moves the boundary with them.
    void reattach(const RodSystem<Scalar> &sys) {
        for (auto &a : attachments) a.resample(sys.rods[std::size_t(a.rod)]);
        snap_boundary();
    }

    // Same surface with every triangle's orientation reversed.
    SpanningSurface flipped() const {
        SpanningSurface s = *this;
        s.F.col(1).swap(s.F.col(2));
        return s;
    }

    void validate() const {
        const Scalar sc = scale();
        for (Index f = 0; f < face_count(); ++f) {
            for (int e = 0; e < 3; ++e)
                if (F(f, e) < 0 || F(f, e) >= vertex_count())
                    throw Error(ErrorCode::InvalidArgument, "face index out of range");
            if (area_vector_of(f).norm() < Scalar(1e-14) * sc * sc)
                throw Error(ErrorCode::DegenerateTriangle, "triangle " + std::to_string(f) + " is degenerate");
        }
        for (const auto &l : loops)
            for (std::size_t i = 0; i < l.vertices.size(); ++i) {
                const Scalar off = (vertex(l.vertices[i]) - attachments[std::size_t(l.curve)].at(l.params[i])).norm();
                if (off > Scalar(1e-9) * std::max(sc, Scalar(1)))
                    throw Error(ErrorCode::InvalidArgument, "boundary vertex off its attachment curve");
            }
    }
};

} // namespace kplab
