#pragma once

// Linking numbers, minimal global radius of curvature and tube embeddedness for
// closed polylines.

#include "errors.hpp"
#include "geometry.hpp"
#include "parallel.hpp"
#include "types.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

namespace kplab {

// Closed polygon; the closing edge from the last node back to the first is implicit.
template <typename Scalar>
class ClosedPolyline {
public:
    static constexpr Index min_nodes = 8;

    explicit ClosedPolyline(Nodes<Scalar> nodes) : m_nodes(std::move(nodes)) {
        if (m_nodes.cols() < min_nodes)
            throw Error(ErrorCode::InvalidArgument, "closed polyline needs at least 8 nodes");
        if (!m_nodes.allFinite()) throw Error(ErrorCode::InvalidArgument, "closed polyline has non-finite nodes");
        for (Index i = 0; i < size(); ++i)
            if (edge(i).norm() <= Scalar(1e-12))
                throw Error(ErrorCode::InvalidArgument,
                            "closed polyline has coincident consecutive nodes at " + std::to_string(i));
    }

    // Builds a polyline from sampled points, dropping consecutive duplicates and a
    // trailing copy of the first point.
    static ClosedPolyline from_samples(const Nodes<Scalar> &pts, Scalar merge_tol = Scalar(1e-12)) {
        std::vector<Index> keep;
        for (Index k = 0; k < pts.cols(); ++k) {
            if (!keep.empty() && (pts.col(k) - pts.col(keep.back())).norm() <= merge_tol) continue;
            keep.push_back(k);
        }
        while (keep.size() > 1 && (pts.col(keep.back()) - pts.col(keep.front())).norm() <= merge_tol)
            keep.pop_back();
        Nodes<Scalar> out(3, Index(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i) out.col(Index(i)) = pts.col(keep[i]);
        return ClosedPolyline(std::move(out));
    }

    const Nodes<Scalar> &nodes() const { return m_nodes; }
    Index size() const { return m_nodes.cols(); }
    auto node(Index i) const { return m_nodes.col(i); }
    Vec3<Scalar> edge(Index i) const { return m_nodes.col((i + 1) % size()) - m_nodes.col(i); }
    Vec3<Scalar> midpoint(Index i) const { return (m_nodes.col((i + 1) % size()) + m_nodes.col(i)) / 2; }

    Scalar diameter() const {
        return (m_nodes.rowwise().maxCoeff() - m_nodes.rowwise().minCoeff()).norm();
    }

    Scalar max_edge() const {
        Scalar m = 0;
        for (Index i = 0; i < size(); ++i) m = std::max(m, edge(i).norm());
        return m;
    }

    // Splits every edge into `factor` equal pieces (same point set).
    ClosedPolyline subdivided(Index factor) const {
        Nodes<Scalar> out(3, size() * factor);
        for (Index i = 0; i < size(); ++i)
            for (Index j = 0; j < factor; ++j)
                out.col(i * factor + j) = m_nodes.col(i) + (Scalar(j) / Scalar(factor)) * edge(i);
        return ClosedPolyline(std::move(out));
    }

    // Splits edges so that none exceeds max_edge.
    ClosedPolyline refined(Scalar max_edge_length) const {
        std::vector<Vec3<Scalar>> pts;
        for (Index i = 0; i < size(); ++i) {
            const Vec3<Scalar> e = edge(i);
            const Index pieces = std::max<Index>(1, Index(std::ceil(double(e.norm() / max_edge_length))));
            for (Index j = 0; j < pieces; ++j) pts.push_back(m_nodes.col(i) + (Scalar(j) / Scalar(pieces)) * e);
        }
        Nodes<Scalar> out(3, Index(pts.size()));
        for (std::size_t i = 0; i < pts.size(); ++i) out.col(Index(i)) = pts[i];
        return ClosedPolyline(std::move(out));
    }

    // y = scale * R x + shift
    ClosedPolyline transformed(const Mat3<Scalar> &rotation, const Vec3<Scalar> &shift, Scalar scale = 1) const {
        Nodes<Scalar> out = (scale * rotation) * m_nodes;
        out.colwise() += shift;
        return ClosedPolyline(std::move(out));
    }

private:
    Nodes<Scalar> m_nodes;
};

template <typename Scalar>
struct LinkingResult {
    int value = 0;
    Scalar raw = 0; // discrete Gauss integral
    Scalar gap = 0; // |raw - value|
};

// Midpoint rule per edge pair of the Gauss double integral
//   (1/4 pi) sum_i sum_j (m_i - m_j) / |m_i - m_j|^3 . (e_i x e_j).
// Row sums are reduced in index order, so the result does not depend on threading.
template <typename Scalar>
Scalar gauss_integral(const ClosedPolyline<Scalar> &a, const ClosedPolyline<Scalar> &b) {
    const Index na = a.size(), nb = b.size();
    std::vector<Scalar> rows(static_cast<std::size_t>(na), Scalar(0));
    parallel::for_each_index(std::size_t(na), [&](std::size_t i) {
        const Vec3<Scalar> mi = a.midpoint(Index(i)), ei = a.edge(Index(i));
        Scalar acc = 0;
        for (Index j = 0; j < nb; ++j) {
            const Vec3<Scalar> r = mi - b.midpoint(j);
            const Scalar dist = r.norm();
            acc += r.dot(ei.cross(b.edge(j))) / (dist * dist * dist);
        }
        rows[i] = acc;
    });
    Scalar total = 0;
    for (Scalar r : rows) total += r;
    return total / (4 * pi<Scalar>);
}

template <typename Scalar>
Scalar min_distance(const ClosedPolyline<Scalar> &a, const ClosedPolyline<Scalar> &b) {
    std::vector<Scalar> rows(static_cast<std::size_t>(a.size()), std::numeric_limits<Scalar>::infinity());
    parallel::for_each_index(std::size_t(a.size()), [&](std::size_t i) {
        const Index ii = Index(i);
        const Vec3<Scalar> p0 = a.node(ii), p1 = a.node((ii + 1) % a.size());
        Scalar m = std::numeric_limits<Scalar>::infinity();
        for (Index j = 0; j < b.size(); ++j)
            m = std::min(m, segment_segment_distance<Scalar>(p0, p1, b.node(j), b.node((j + 1) % b.size())));
        rows[i] = m;
    });
    Scalar m = std::numeric_limits<Scalar>::infinity();
    for (Scalar r : rows) m = std::min(m, r);
    return m;
}

template <typename Scalar>
LinkingResult<Scalar> linking_number(const ClosedPolyline<Scalar> &a, const ClosedPolyline<Scalar> &b) {
    const Scalar floor = Scalar(1e-6) * std::max(a.diameter(), b.diameter());
    const Scalar sep = min_distance(a, b);
    if (!(sep >= floor))
        throw Error(ErrorCode::CurvesTooClose, "curve separation " + std::to_string(double(sep)) +
                                                   " below floor " + std::to_string(double(floor)));
    auto evaluate = [](Scalar raw) {
        LinkingResult<Scalar> r;
        r.raw = raw;
        r.value = static_cast<int>(std::lround(double(raw)));
        r.gap = std::abs(raw - Scalar(r.value));
        return r;
    };
    auto result = evaluate(gauss_integral(a, b));
    if (result.gap > Scalar(0.25)) {
        result = evaluate(gauss_integral(a.subdivided(2), b.subdivided(2)));
        if (result.gap > Scalar(0.25))
            throw Error(ErrorCode::NonConvergent,
                        "Gauss integral " + std::to_string(double(result.raw)) + " not near an integer after refinement");
    }
    return result;
}

// Minimum circumradius over all node triples. A triple can only improve the
// current best if all its pairwise half-distances are below it, which prunes
// most of the O(n^3) scan without changing the result.
template <typename Scalar>
Scalar global_radius(const Nodes<Scalar> &x, Scalar collinear_tol = Scalar(1e-12)) {
    const Index n = x.cols();
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index k = 0; k < n; ++k) {
        const Vec3<Scalar> a = x.col((k + n - 1) % n), b = x.col(k), c = x.col((k + 1) % n);
        best = std::min(best, circumradius<Scalar>(a, b, c, collinear_tol));
    }
    std::vector<Scalar> rows(static_cast<std::size_t>(n), std::numeric_limits<Scalar>::infinity());
    parallel::for_each_index(std::size_t(n), [&](std::size_t si) {
        const Index s = Index(si);
        Scalar local = best;
        for (Index sigma = s + 1; sigma < n; ++sigma) {
            if ((x.col(s) - x.col(sigma)).norm() >= 2 * local) continue;
            for (Index tau = sigma + 1; tau < n; ++tau) {
                if ((x.col(s) - x.col(tau)).norm() >= 2 * local ||
                    (x.col(sigma) - x.col(tau)).norm() >= 2 * local)
                    continue;
                local = std::min(local, circumradius<Scalar>(x.col(s), x.col(sigma), x.col(tau), collinear_tol));
            }
        }
        rows[si] = local;
    });
    for (Scalar r : rows) best = std::min(best, r);
    return best;
}

template <typename Scalar>
Scalar global_radius(const ClosedPolyline<Scalar> &c) {
    return global_radius(c.nodes());
}

// The r-tube around c is embedded iff Delta(c) >= r.
template <typename Scalar>
bool tube_is_embedded(const ClosedPolyline<Scalar> &c, Scalar r) {
    if (!(r > 0)) throw Error(ErrorCode::InvalidArgument, "tube radius must be positive");
    return global_radius(c) >= r;
}

using LinkingMatrix = Eigen::MatrixXi;

template <typename Scalar>
LinkingMatrix linking_matrix(const std::vector<ClosedPolyline<Scalar>> &curves) {
    const Index n = Index(curves.size());
    LinkingMatrix m = LinkingMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            try {
                m(i, j) = m(j, i) = linking_number(curves[std::size_t(i)], curves[std::size_t(j)]).value;
            } catch (const Error &e) {
                throw Error(e.code(), "pair (" + std::to_string(i) + ", " + std::to_string(j) + "): " + e.what());
            }
        }
    return m;
}

// Every rod is reachable from rod 0 through pairs with |Link| = 1.
inline bool chain_structure_holds(const LinkingMatrix &m) {
    const Index n = m.rows();
    if (n == 0) return false;
    std::vector<bool> seen(std::size_t(n), false);
    std::queue<Index> todo;
    todo.push(0);
    seen[0] = true;
    while (!todo.empty()) {
        const Index i = todo.front();
        todo.pop();
        for (Index j = 0; j < n; ++j)
            if (j != i && !seen[std::size_t(j)] && std::abs(m(i, j)) == 1) {
                seen[std::size_t(j)] = true;
                todo.push(j);
            }
    }
    for (bool s : seen)
        if (!s) return false;
    return true;
}

} // namespace kplab
