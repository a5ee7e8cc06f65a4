#pragma once

// Spanning surfaces: witness loops, tube meshes, seed fills, refinement.

#include "constraints.hpp"
#include "mesh.hpp"

#include <array>
#include <map>
#include <optional>
#include <sstream>
#include <utility>

namespace kplab {

// A test loop that must meet the surface; it links `target` once and every other rod zero times.
template <typename Scalar>
struct WitnessLoop {
    ClosedPolyline<Scalar> curve;
    int target = 0;
};

template <typename Scalar>
struct SpanningWitnessSet {
    std::vector<WitnessLoop<Scalar>> loops;
};

template <typename Scalar>
Scalar point_polyline_distance(const Vec3<Scalar> &p, const ClosedPolyline<Scalar> &c) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < c.size(); ++i)
        best = std::min(best, point_segment_distance<Scalar>(p, c.node(i), c.node((i + 1) % c.size())));
    return best;
}

// One meridian loop per rod around x(0) in the (d, t x d) plane. The radius sits halfway
// between the tube and the nearest obstruction (the global radius or another rod).
template <typename Scalar>
SpanningWitnessSet<Scalar> default_witnesses(const RodSystem<Scalar> &sys, Index nodes = 64) {
    SpanningWitnessSet<Scalar> ws;
    const auto mids = sys.midlines();
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const auto &rod = sys.rods[i];
        const Scalar inner = sys.epsilon * rod.section.nu();
        Scalar room = global_radius(mids[i]);
        const Vec3<Scalar> c = rod.curve.x.col(0);
        for (std::size_t j = 0; j < sys.size(); ++j)
            if (j != i)
                room = std::min(room, point_polyline_distance(c, mids[j]) - sys.epsilon * sys.rods[j].section.nu());
        if (!(room > inner))
            throw Error(ErrorCode::TubeNotEmbedded, "no room for a witness loop around rod " + std::to_string(i));
        const Scalar r = inner + (room - inner) / 2;
        const Vec3<Scalar> d = rod.curve.d.col(0), b = rod.curve.binormal(0);
        Nodes<Scalar> pts(3, nodes);
        for (Index k = 0; k < nodes; ++k) {
            const Scalar th = two_pi<Scalar> * (Scalar(k) + Scalar(0.5)) / Scalar(nodes);
            pts.col(k) = c + r * (std::cos(th) * d + std::sin(th) * b);
        }
        ws.loops.push_back({ClosedPolyline<Scalar>(std::move(pts)), int(i)});
    }
    return ws;
}

struct WitnessValidation {
    bool valid = true;
    std::string diagnostic;
};

// Recomputes every loop's linking pattern and tube clearance against the current midlines.
template <typename Scalar>
WitnessValidation validate_witnesses(const SpanningWitnessSet<Scalar> &ws, const RodSystem<Scalar> &sys) {
    WitnessValidation out;
    const auto mids = sys.midlines();
    std::ostringstream os;
    for (std::size_t l = 0; l < ws.loops.size(); ++l) {
        const auto &loop = ws.loops[l];
        if (loop.target < 0 || std::size_t(loop.target) >= sys.size()) {
            out.valid = false;
            os << "loop " << l << ": target out of range; ";
            continue;
        }
        for (std::size_t j = 0; j < sys.size(); ++j) {
            const Scalar clearance = min_distance(loop.curve, mids[j]) - sys.epsilon * sys.rods[j].section.nu();
            if (!(clearance > 0)) {
                out.valid = false;
                os << "loop " << l << " meets tube " << j << "; ";
                continue;
            }
            const int link = linking_number(loop.curve, mids[j]).value;
            const int want = std::size_t(loop.target) == j ? 1 : 0;
            if (std::abs(link) != want) {
                out.valid = false;
                os << "loop " << l << " links rod " << j << " " << link << " times; ";
            }
        }
    }
    out.diagnostic = os.str();
    return out;
}

struct SpanningReport {
    bool spans = true;
    std::vector<int> hits; // intersected loop edges per witness loop
};

template <typename Scalar>
SpanningReport check_spanning(const SpanningSurface<Scalar> &S, const SpanningWitnessSet<Scalar> &ws) {
    SpanningReport rep;
    rep.hits.assign(ws.loops.size(), 0);
    const Index nf = S.face_count();
    std::vector<Eigen::AlignedBox<Scalar, 3>> boxes(static_cast<std::size_t>(nf));
    for (Index f = 0; f < nf; ++f)
        for (int e = 0; e < 3; ++e) boxes[std::size_t(f)].extend(S.vertex(S.F(f, e)));
    for (std::size_t l = 0; l < ws.loops.size(); ++l) {
        const auto &c = ws.loops[l].curve;
        std::vector<int> edge_hit(std::size_t(c.size()), 0);
        parallel::for_each_index(std::size_t(c.size()), [&](std::size_t i) {
            const Vec3<Scalar> p = c.node(Index(i)), q = c.node((Index(i) + 1) % c.size());
            Eigen::AlignedBox<Scalar, 3> seg(p);
            seg.extend(q);
            for (Index f = 0; f < nf; ++f) {
                if (!boxes[std::size_t(f)].intersects(seg)) continue;
                if (segment_intersects_triangle<Scalar>(p, q, S.vertex(S.F(f, 0)), S.vertex(S.F(f, 1)),
                                                        S.vertex(S.F(f, 2)))) {
                    edge_hit[i] = 1;
                    break;
                }
            }
        });
        for (int h : edge_hit) rep.hits[l] += h;
        rep.spans = rep.spans && rep.hits[l] > 0;
    }
    return rep;
}

// Lateral boundary of each rod region, sampled at the rod nodes and `rings` section
// boundary points. Closed rods wrap around (matching the ring at s = L to the ring at
// s = 0 by nearest point); open rods are capped with a fan at each end.
template <typename Scalar>
std::vector<SpanningSurface<Scalar>> build_tube_mesh(const RodSystem<Scalar> &sys, Scalar eps, Index rings) {
    if (rings < 8) throw Error(ErrorCode::InvalidArgument, "tube mesh needs at least 8 rings");
    std::vector<SpanningSurface<Scalar>> out;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const auto &rod = sys.rods[i];
        const Scalar delta = global_radius(rod.midline());
        if (!(eps * rod.section.nu() < delta))
            throw Error(ErrorCode::TubeNotEmbedded, "rod " + std::to_string(i) + ": eps * nu = " +
                                                        std::to_string(double(eps * rod.section.nu())) +
                                                        " >= global radius " + std::to_string(double(delta)));
        const Index n = rod.curve.size() - 1;
        const bool closed = is_closed(rod.curve);
        const Index slices = closed ? n : n + 1;
        auto ring_point = [&](Index k, Index j) {
            const Scalar th = two_pi<Scalar> * Scalar(j) / Scalar(rings);
            return rod.region_point(k, eps * section_boundary_point(rod.section.shape_at(rod.curve.param[k]), th));
        };

        SpanningSurface<Scalar> m;
        const Index nv = slices * rings + (closed ? 0 : 2);
        m.V.resize(nv, 3);
        for (Index k = 0; k < slices; ++k)
            for (Index j = 0; j < rings; ++j) m.V.row(k * rings + j) = ring_point(k, j).transpose();

        Index shift = 0;
        if (closed) {
            const Vec3<Scalar> last = ring_point(n, 0);
            Scalar best = std::numeric_limits<Scalar>::infinity();
            for (Index j = 0; j < rings; ++j) {
                const Scalar dist = (m.vertex(j) - last).norm();
                if (dist < best) best = dist, shift = j;
            }
        }
        std::vector<std::array<int, 3>> tris;
        auto vid = [&](Index k, Index j) {
            if (k == slices) return int(((j + shift) % rings));
            return int(k * rings + (j % rings));
        };
        for (Index k = 0; k < n; ++k)
            for (Index j = 0; j < rings; ++j) {
                const int a = vid(k, j), b = vid(k, j + 1), c = vid(k + 1, j), d = vid(k + 1, j + 1);
                tris.push_back({a, c, d});
                tris.push_back({a, d, b});
            }
        if (!closed) {
            const int c0 = int(slices * rings), c1 = c0 + 1;
            m.V.row(c0) = rod.curve.x.col(0).transpose();
            m.V.row(c1) = rod.curve.x.col(n).transpose();
            for (Index j = 0; j < rings; ++j) {
                tris.push_back({c0, vid(0, j + 1), vid(0, j)});
                tris.push_back({c1, vid(n, j), vid(n, j + 1)});
            }
        }
        m.F.resize(Index(tris.size()), 3);
        for (std::size_t t = 0; t < tris.size(); ++t)
            for (int e = 0; e < 3; ++e) m.F(Index(t), e) = tris[t][std::size_t(e)];
        out.push_back(std::move(m));
    }
    return out;
}

namespace detail {

inline std::vector<std::array<int, 3>> faces_of(const Eigen::Matrix<int, Eigen::Dynamic, 3> &F) {
    std::vector<std::array<int, 3>> out(std::size_t(F.rows()));
    for (Index f = 0; f < F.rows(); ++f) out[std::size_t(f)] = {F(f, 0), F(f, 1), F(f, 2)};
    return out;
}

inline Eigen::Matrix<int, Eigen::Dynamic, 3> faces_to_matrix(const std::vector<std::array<int, 3>> &tris) {
    Eigen::Matrix<int, Eigen::Dynamic, 3> F(Index(tris.size()), 3);
    for (std::size_t t = 0; t < tris.size(); ++t)
        for (int e = 0; e < 3; ++e) F(Index(t), e) = tris[t][std::size_t(e)];
    return F;
}

// Zipper between two closed rings traversed in the same direction, both starting at parameter 0.
inline void zip_rings(const std::vector<int> &outer, const std::vector<int> &inner,
                      std::vector<std::array<int, 3>> &tris) {
    const std::size_t a = outer.size(), b = inner.size();
    std::size_t i = 0, j = 0;
    while (i < a || j < b) {
        const double next_outer = double(i + 1) / double(a), next_inner = double(j + 1) / double(b);
        if (j >= b || (i < a && next_outer <= next_inner)) {
            tris.push_back({outer[i % a], outer[(i + 1) % a], inner[j % b]});
            ++i;
        } else {
            tris.push_back({outer[i % a], inner[(j + 1) % b], inner[j % b]});
            ++j;
        }
    }
}

// Number of (edge, triangle) pairs that cross without sharing a vertex.
template <typename Scalar>
Index self_intersections(const Eigen::Matrix<Scalar, Eigen::Dynamic, 3> &V,
                         const Eigen::Matrix<int, Eigen::Dynamic, 3> &F) {
    auto vtx = [&](int i) -> Vec3<Scalar> { return V.row(i).transpose(); };
    std::vector<std::pair<int, int>> edges;
    for (Index f = 0; f < F.rows(); ++f)
        for (int e = 0; e < 3; ++e) {
            const int a = F(f, e), b = F(f, (e + 1) % 3);
            edges.emplace_back(std::min(a, b), std::max(a, b));
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    std::vector<Eigen::AlignedBox<Scalar, 3>> boxes(std::size_t(F.rows()));
    for (Index f = 0; f < F.rows(); ++f)
        for (int e = 0; e < 3; ++e) boxes[std::size_t(f)].extend(vtx(F(f, e)));
    std::vector<Index> counts(edges.size(), 0);
    parallel::for_each_index(edges.size(), [&](std::size_t k) {
        const auto [a, b] = edges[k];
        Eigen::AlignedBox<Scalar, 3> box(vtx(a));
        box.extend(vtx(b));
        for (Index f = 0; f < F.rows(); ++f) {
            const int x = F(f, 0), y = F(f, 1), z = F(f, 2);
            if (x == a || y == a || z == a || x == b || y == b || z == b) continue;
            if (!boxes[std::size_t(f)].intersects(box)) continue;
            if (segment_intersects_triangle<Scalar>(vtx(a), vtx(b), vtx(x), vtx(y), vtx(z))) ++counts[k];
        }
    });
    Index total = 0;
    for (Index c : counts) total += c;
    return total;
}

} // namespace detail

template <typename Scalar>
struct SeedOptions {
    AttachmentKind attachment = AttachmentKind::midline;
    Scalar theta = 0;     // section angle of the attachment curve on the tube
    Index rings = 0;      // interior rings; 0 picks a count matching the boundary spacing
    Scalar apex_lift = 0; // cone height as a fraction of the mean boundary radius
    std::optional<SpanningSurface<Scalar>> fallback; // used when the fill self-intersects
};

// One cone-like fill per rod: concentric rings shrinking towards the boundary centroid,
// optionally lifted along the boundary's mean normal into a cone.
template <typename Scalar>
SpanningSurface<Scalar> initial_spanning_surface(const RodSystem<Scalar> &sys, const SeedOptions<Scalar> &opt = {}) {
    SpanningSurface<Scalar> S;
    std::vector<Vec3<Scalar>> verts;
    std::vector<std::array<int, 3>> tris;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const auto &rod = sys.rods[i];
        const Scalar eps = opt.attachment == AttachmentKind::tube ? sys.epsilon : Scalar(0);
        auto att = AttachmentCurve<Scalar>::from_rod(rod, int(i), opt.attachment, eps, opt.theta);
        const Index m = att.samples.cols();
        const std::size_t first_tri = tris.size();

        Vec3<Scalar> centroid = att.samples.rowwise().mean();
        Vec3<Scalar> normal = Vec3<Scalar>::Zero();
        Scalar perimeter = 0, radius = 0;
        for (Index k = 0; k < m; ++k) {
            const Vec3<Scalar> p = att.samples.col(k), q = att.samples.col((k + 1) % m);
            normal += (p - centroid).cross(q - centroid) / 2;
            perimeter += (q - p).norm();
            radius += (p - centroid).norm() / Scalar(m);
        }
        normal = normal.norm() > 0 ? Vec3<Scalar>(normal.normalized()) : Vec3<Scalar>::UnitZ();
        const Index rings =
            opt.rings > 0 ? opt.rings : std::max<Index>(2, Index(std::llround(double(radius / (perimeter / Scalar(m))))));

        BoundaryLoop<Scalar> loop;
        loop.curve = int(S.attachments.size());
        std::vector<int> outer;
        for (Index k = 0; k < m; ++k) {
            outer.push_back(int(verts.size()));
            loop.vertices.push_back(Index(verts.size()));
            loop.params.push_back(att.length * Scalar(k) / Scalar(m));
            verts.push_back(att.samples.col(k));
        }
        auto boundary_at = [&](Scalar u) { return att.at(u * att.length); };
        for (Index r = 1; r < rings; ++r) {
            const Scalar f = Scalar(r) / Scalar(rings);
            const Index count = std::max<Index>(6, Index(std::llround(double(Scalar(m) * (1 - f)))));
            std::vector<int> inner;
            for (Index j = 0; j < count; ++j) {
                const Vec3<Scalar> b = boundary_at(Scalar(j) / Scalar(count));
                inner.push_back(int(verts.size()));
                verts.push_back(centroid + (1 - f) * (b - centroid) + f * opt.apex_lift * radius * normal);
            }
            detail::zip_rings(outer, inner, tris);
            outer = std::move(inner);
        }
        const int apex = int(verts.size());
        verts.push_back(centroid + opt.apex_lift * radius * normal);
        for (std::size_t j = 0; j < outer.size(); ++j) tris.push_back({outer[j], outer[(j + 1) % outer.size()], apex});

        // scan this fill on its own; separate fills may cross (linked rods)
        std::map<int, int> local;
        std::vector<std::array<int, 3>> part(tris.begin() + std::ptrdiff_t(first_tri), tris.end());
        for (auto &t : part)
            for (int &v : t) v = local.emplace(v, int(local.size())).first->second;
        Eigen::Matrix<Scalar, Eigen::Dynamic, 3> PV(Index(local.size()), 3);
        for (const auto &[g, l] : local) PV.row(l) = verts[std::size_t(g)].transpose();
        if (detail::self_intersections<Scalar>(PV, detail::faces_to_matrix(part)) > 0) {
            if (opt.fallback) return *opt.fallback;
            throw Error(ErrorCode::SeedFailed, "fill of rod " + std::to_string(i) + " self-intersects");
        }
        S.attachments.push_back(std::move(att));
        S.loops.push_back(std::move(loop));
    }
    S.V.resize(Index(verts.size()), 3);
    for (std::size_t v = 0; v < verts.size(); ++v) S.V.row(Index(v)) = verts[v].transpose();
    S.F = detail::faces_to_matrix(tris);
    S.validate();
    return S;
}

template <typename Scalar>
struct RefineOptions {
    Scalar target_edge = 0;                          // split until every edge is at most this long
    Scalar sliver_angle = Scalar(10) * pi<Scalar> / 180; // collapse/flip triangles below this angle
};

namespace detail {

using EdgeKey = std::pair<int, int>;
inline EdgeKey edge_key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

inline std::map<EdgeKey, std::vector<int>> edge_faces(const std::vector<std::array<int, 3>> &tris) {
    std::map<EdgeKey, std::vector<int>> out;
    for (std::size_t t = 0; t < tris.size(); ++t)
        for (int e = 0; e < 3; ++e) out[edge_key(tris[t][std::size_t(e)], tris[t][std::size_t((e + 1) % 3)])].push_back(int(t));
    return out;
}

// Position of b in the loop directly after a (cyclically), or -1.
template <typename Scalar>
int loop_successor(const BoundaryLoop<Scalar> &l, int a, int b) {
    const std::size_t n = l.vertices.size();
    for (std::size_t i = 0; i < n; ++i)
        if (l.vertices[i] == a && l.vertices[(i + 1) % n] == b) return int(i);
    return -1;
}

} // namespace detail

// Longest-edge bisection until max edge <= target, then sliver cleanup by interior edge
// collapse (needles) or edge flip (caps). Boundary vertices stay on their attachment
// curves. When witnesses are given and spanning is lost the input is returned unchanged
// via SpanningLost.
template <typename Scalar>
SpanningSurface<Scalar> refine_and_cleanup(const SpanningSurface<Scalar> &input, const RefineOptions<Scalar> &opt,
                                           const SpanningWitnessSet<Scalar> *witnesses = nullptr) {
    if (!(opt.target_edge > 0)) throw Error(ErrorCode::InvalidArgument, "target edge must be positive");
    SpanningSurface<Scalar> S = input;
    std::vector<Vec3<Scalar>> V;
    for (Index i = 0; i < S.vertex_count(); ++i) V.push_back(S.vertex(i));
    auto tris = detail::faces_of(S.F);
    auto len = [&](int a, int b) { return (V[std::size_t(a)] - V[std::size_t(b)]).norm(); };

    // bisection
    for (int pass = 0; pass < 64; ++pass) {
        std::vector<std::pair<Scalar, int>> order;
        for (std::size_t t = 0; t < tris.size(); ++t) {
            Scalar longest = 0;
            for (int e = 0; e < 3; ++e)
                longest = std::max(longest, len(tris[t][std::size_t(e)], tris[t][std::size_t((e + 1) % 3)]));
            if (longest > opt.target_edge) order.emplace_back(longest, int(t));
        }
        if (order.empty()) break;
        std::stable_sort(order.begin(), order.end(), [](const auto &x, const auto &y) { return x.first > y.first; });
        auto ef = detail::edge_faces(tris);
        std::vector<bool> touched(tris.size(), false);
        for (const auto &[l, t] : order) {
            if (touched[std::size_t(t)]) continue;
            const auto tri = tris[std::size_t(t)];
            int e = 0;
            for (int k = 1; k < 3; ++k)
                if (len(tri[std::size_t(k)], tri[std::size_t((k + 1) % 3)]) >
                    len(tri[std::size_t(e)], tri[std::size_t((e + 1) % 3)]))
                    e = k;
            const int a = tri[std::size_t(e)], b = tri[std::size_t((e + 1) % 3)];
            const auto &adj = ef[detail::edge_key(a, b)];
            bool free = true;
            for (int f : adj) free = free && !touched[std::size_t(f)];
            if (!free) continue;

            Vec3<Scalar> mid = (V[std::size_t(a)] + V[std::size_t(b)]) / 2;
            const int nv = int(V.size());
            if (adj.size() == 1) {
                for (auto &loop : S.loops) {
                    const std::size_t n = loop.vertices.size();
                    int pos = detail::loop_successor(loop, a, b);
                    if (pos < 0) pos = detail::loop_successor(loop, b, a);
                    if (pos < 0) continue;
                    const auto &att = S.attachments[std::size_t(loop.curve)];
                    Scalar s0 = loop.params[std::size_t(pos)], s1 = loop.params[(std::size_t(pos) + 1) % n];
                    if (s1 <= s0) s1 += att.length;
                    Scalar sm = (s0 + s1) / 2;
                    if (sm >= att.length) sm -= att.length;
                    mid = att.at(sm);
                    loop.vertices.insert(loop.vertices.begin() + pos + 1, nv);
                    loop.params.insert(loop.params.begin() + pos + 1, sm);
                    break;
                }
            }
            V.push_back(mid);
            for (int f : adj) {
                auto old = tris[std::size_t(f)];
                int k = 0;
                while (!((old[std::size_t(k)] == a && old[std::size_t((k + 1) % 3)] == b) ||
                         (old[std::size_t(k)] == b && old[std::size_t((k + 1) % 3)] == a)))
                    ++k;
                const int p = old[std::size_t(k)], q = old[std::size_t((k + 1) % 3)], r = old[std::size_t((k + 2) % 3)];
                tris[std::size_t(f)] = {p, nv, r};
                tris.push_back({nv, q, r});
                touched[std::size_t(f)] = true;
                touched.push_back(true);
            }
        }
    }

    // sliver cleanup
    std::vector<bool> boundary(V.size(), false);
    for (const auto &l : S.loops)
        for (Index v : l.vertices) boundary[std::size_t(v)] = true;
    auto min_angle = [&](const std::array<int, 3> &t) {
        return triangle_min_angle<Scalar>(V[std::size_t(t[0])], V[std::size_t(t[1])], V[std::size_t(t[2])]);
    };
    auto normal = [&](const std::array<int, 3> &t) {
        return area_vector<Scalar>(V[std::size_t(t[0])], V[std::size_t(t[1])], V[std::size_t(t[2])]);
    };
    std::vector<bool> dead(tris.size(), false);
    for (int pass = 0; pass < 8; ++pass) {
        bool changed = false;
        auto ef = detail::edge_faces(tris);
        for (std::size_t t = 0; t < tris.size(); ++t) {
            if (dead[t] || !(min_angle(tris[t]) < opt.sliver_angle)) continue;
            const auto tri = tris[t];
            int shortest = 0, longest = 0;
            for (int k = 1; k < 3; ++k) {
                const Scalar lk = len(tri[std::size_t(k)], tri[std::size_t((k + 1) % 3)]);
                if (lk < len(tri[std::size_t(shortest)], tri[std::size_t((shortest + 1) % 3)])) shortest = k;
                if (lk > len(tri[std::size_t(longest)], tri[std::size_t((longest + 1) % 3)])) longest = k;
            }
            const Scalar ls = len(tri[std::size_t(shortest)], tri[std::size_t((shortest + 1) % 3)]);
            const Scalar ll = len(tri[std::size_t(longest)], tri[std::size_t((longest + 1) % 3)]);
            if (ls < Scalar(0.25) * ll) {
                // needle: collapse the short edge onto a boundary endpoint if there is one
                int keep = tri[std::size_t(shortest)], gone = tri[std::size_t((shortest + 1) % 3)];
                if (boundary[std::size_t(gone)]) std::swap(keep, gone);
                if (boundary[std::size_t(gone)]) continue;
                const auto &adj = ef[detail::edge_key(keep, gone)];
                if (adj.size() != 2) continue;
                // link condition: common neighbours are exactly the two opposite vertices
                std::vector<int> nk, ng;
                for (std::size_t u = 0; u < tris.size(); ++u) {
                    if (dead[u]) continue;
                    for (int v : tris[u]) {
                        if (std::find(tris[u].begin(), tris[u].end(), keep) != tris[u].end()) nk.push_back(v);
                        if (std::find(tris[u].begin(), tris[u].end(), gone) != tris[u].end()) ng.push_back(v);
                    }
                }
                std::sort(nk.begin(), nk.end());
                nk.erase(std::unique(nk.begin(), nk.end()), nk.end());
                std::sort(ng.begin(), ng.end());
                ng.erase(std::unique(ng.begin(), ng.end()), ng.end());
                std::vector<int> common;
                std::set_intersection(nk.begin(), nk.end(), ng.begin(), ng.end(), std::back_inserter(common));
                if (common.size() != 4) continue; // keep, gone and the two opposite vertices
                bool ok = true;
                std::vector<std::pair<std::size_t, std::array<int, 3>>> updates;
                for (std::size_t u = 0; u < tris.size() && ok; ++u) {
                    if (dead[u] || std::find(tris[u].begin(), tris[u].end(), gone) == tris[u].end()) continue;
                    if (std::find(tris[u].begin(), tris[u].end(), keep) != tris[u].end()) continue;
                    auto nt = tris[u];
                    for (int &v : nt)
                        if (v == gone) v = keep;
                    const Vec3<Scalar> n0 = normal(tris[u]), n1 = normal(nt);
                    if (!(n0.dot(n1) > 0) || min_angle(nt) < min_angle(tris[u]) / 4) ok = false;
                    updates.emplace_back(u, nt);
                }
                if (!ok) continue;
                for (const auto &[u, nt] : updates) tris[u] = nt;
                for (int f : adj) dead[std::size_t(f)] = true;
                changed = true;
                break;
            }
            // cap: flip the longest edge when it is interior and the flip improves quality
            const int a = tri[std::size_t(longest)], b = tri[std::size_t((longest + 1) % 3)];
            const auto &adj = ef[detail::edge_key(a, b)];
            if (adj.size() != 2) continue;
            const std::size_t other = std::size_t(adj[0]) == t ? std::size_t(adj[1]) : std::size_t(adj[0]);
            if (dead[other]) continue;
            const int c = tri[std::size_t((longest + 2) % 3)];
            int d = -1;
            for (int v : tris[other])
                if (v != a && v != b) d = v;
            if (ef.count(detail::edge_key(c, d))) continue;
            const std::array<int, 3> t1{c, a, d}, t2{c, d, b};
            const Vec3<Scalar> n_old = normal(tri);
            if (!(normal(t1).dot(n_old) > 0 && normal(t2).dot(n_old) > 0)) continue;
            if (std::min(min_angle(t1), min_angle(t2)) <= std::min(min_angle(tri), min_angle(tris[other]))) continue;
            tris[t] = t1;
            tris[other] = t2;
            changed = true;
            break;
        }
        if (!changed) break;
    }

    // compact
    std::vector<std::array<int, 3>> live;
    for (std::size_t t = 0; t < tris.size(); ++t)
        if (!dead[t]) live.push_back(tris[t]);
    std::vector<int> remap(V.size(), -1);
    for (const auto &t : live)
        for (int v : t) remap[std::size_t(v)] = 0;
    int next = 0;
    for (int &r : remap)
        if (r == 0) r = next++;
    for (auto &t : live)
        for (int &v : t) v = remap[std::size_t(v)];
    S.V.resize(next, 3);
    for (std::size_t v = 0; v < V.size(); ++v)
        if (remap[v] >= 0) S.V.row(remap[v]) = V[v].transpose();
    S.F = detail::faces_to_matrix(live);
    for (auto &l : S.loops)
        for (auto &v : l.vertices) v = remap[std::size_t(v)];
    S.validate();

    if (witnesses && !check_spanning(S, *witnesses).spans)
        throw Error(ErrorCode::SpanningLost, "refinement broke a witness intersection; input kept");
    return S;
}

} // namespace kplab
