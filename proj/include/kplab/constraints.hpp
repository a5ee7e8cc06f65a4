#pragma once

// Membership in the admissible set: (C1)-(C6) for linked rods, (C1)-(C5) for the
// reduced single-rod problem.

#include "rod_system.hpp"

#include <cstdint>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace kplab {

enum class ProblemMode { linked, reduced };

inline const char *to_string(ProblemMode m) { return m == ProblemMode::linked ? "linked" : "reduced"; }

template <typename Scalar>
struct ConstraintTolerances {
    ClosureTolerance<Scalar> closure;
    Scalar volume_slack = Scalar(1e-3); // relative slack on the Ciarlet-Necas inequality
    Index volume_samples = 20000;
    std::uint64_t seed = 20240601;
};

struct ConstraintEntry {
    std::string id; // "C1".."C6"
    int rod = -1;   // -1 for system-level entries
    int other = -1; // second rod for pairwise entries
    bool pass = false;
    double measured = 0;
    double tolerance = 0;
    std::string detail;
};

struct FeasibilityReport {
    ProblemMode mode = ProblemMode::reduced;
    std::vector<ConstraintEntry> entries;
    bool admissible = false;
    std::uint64_t seed = 0;

    void add(ConstraintEntry e) {
        entries.push_back(std::move(e));
        admissible = true;
        for (const auto &x : entries) admissible = admissible && x.pass;
    }

    bool passes(const std::string &id) const {
        for (const auto &e : entries)
            if (e.id == id && !e.pass) return false;
        return true;
    }

    std::vector<std::string> failing() const {
        std::vector<std::string> out;
        for (const auto &e : entries)
            if (!e.pass) out.push_back(e.id);
        return out;
    }

    // One record per line: id rod= other= status= measured= tolerance= detail="..."
    std::string to_text() const {
        std::ostringstream os;
        os << std::setprecision(12);
        os << "mode " << to_string(mode) << "\n";
        for (const auto &e : entries) {
            os << e.id << " rod=" << e.rod << " other=" << e.other << " status=" << (e.pass ? "pass" : "FAIL")
               << " measured=" << e.measured << " tolerance=" << e.tolerance << " detail=\"" << e.detail << "\"\n";
        }
        os << "seed " << seed << "\n";
        os << "admissible " << (admissible ? "yes" : "no") << "\n";
        return os.str();
    }
};

template <typename Scalar>
struct LocalFrame {
    Vec3<Scalar> x, t, d;
    Vec3<Scalar> b() const { return t.cross(d); }
};

// Linearly interpolated, re-orthonormalized frame at parameter s in [0, L].
template <typename Scalar>
LocalFrame<Scalar> frame_at(const FramedCurve<Scalar> &c, Scalar s) {
    const Index n = c.size() - 1;
    const Scalar h = c.length / Scalar(n);
    const Scalar u = std::clamp(s / h, Scalar(0), Scalar(n));
    const Index k = std::min<Index>(static_cast<Index>(std::floor(u)), n - 1);
    const Scalar f = u - Scalar(k);
    LocalFrame<Scalar> out{(1 - f) * c.x.col(k) + f * c.x.col(k + 1), (1 - f) * c.t.col(k) + f * c.t.col(k + 1),
                           (1 - f) * c.d.col(k) + f * c.d.col(k + 1)};
    detail::orthonormalize(out.t, out.d);
    return out;
}

template <typename Scalar>
Scalar midline_global_radius(const Rod<Scalar> &rod) {
    return global_radius(rod.midline());
}

// tau = min(Delta / 10, eta / 2), with eta the inner radius of the scaled section.
template <typename Scalar>
Scalar default_tau(const Rod<Scalar> &rod, Scalar delta, Scalar epsilon = 1) {
    return std::min(delta / 10, epsilon * rod.section.eta() / 2);
}

// Link(x, x_tau) on polylines refined so that edges stay well below tau.
template <typename Scalar>
LinkingResult<Scalar> twist_linking(const Rod<Scalar> &rod, Scalar tau,
                                    const ClosureTolerance<Scalar> &tol = {}) {
    const auto up = close_up_curve(rod.curve, tau, tol);
    const auto mid = rod.midline().refined(tau / 2);
    const auto off = ClosedPolyline<Scalar>::from_samples(up.nodes).refined(tau / 2);
    return linking_number(mid, off);
}

// Number of parameters s' at which p lies in the normal plane of the midline
// with section coordinates inside eps * A(s'). Zero means p is outside the rod.
template <typename Scalar>
int region_preimages(const Rod<Scalar> &rod, Scalar epsilon, const Vec3<Scalar> &p) {
    const auto &c = rod.curve;
    const Index n = c.size() - 1;
    const Scalar h = rod.length() / Scalar(n);
    const Scalar reach = epsilon * rod.section.nu() + 2 * h;
    int count = 0;
    Scalar f0 = (p - c.x.col(0)).dot(c.t.col(0));
    for (Index k = 0; k < n; ++k) {
        const Scalar f1 = (p - c.x.col(k + 1)).dot(c.t.col(k + 1));
        const bool change = (f0 >= 0) != (f1 >= 0);
        if (change && (p - c.x.col(k)).norm() <= reach) {
            const Scalar u = f0 / (f0 - f1);
            const Scalar s = c.param[k] + u * h;
            const auto fr = frame_at(c, s);
            const Vec3<Scalar> r = p - fr.x;
            const Vec2<Scalar> zeta(r.dot(fr.d) / epsilon, r.dot(fr.b()) / epsilon);
            if (section_contains(rod.section.shape_at(s), zeta)) ++count;
        }
        f0 = f1;
    }
    return count;
}

template <typename Scalar>
struct VolumeComparison {
    Scalar lhs = 0;        // integral of the volume density over Omega
    Scalar rhs = 0;        // estimated |Lambda|
    Scalar half_width = 0; // 95% confidence half-width of rhs
    Index samples = 0;
    std::uint64_t seed = 0;
};

// lhs = int_Omega (1 - zeta1 k2 + zeta2 k1), with (k1, k2) the Darboux components
// along (d, t x d); for the frame ODE used here k1 = -kappa2 and k2 = kappa1.
// rhs estimates |Lambda| by sampling Omega and weighting the Jacobian by the
// inverse number of preimages, so overlapping parts are counted once.
template <typename Scalar>
VolumeComparison<Scalar> interpenetration_volume(const Rod<Scalar> &rod, Scalar epsilon = 1,
                                                 Index samples = 20000, std::uint64_t seed = 20240601) {
    const auto &w = rod.curvature;
    const Index n = w.intervals();
    const Scalar h = w.spacing(), L = w.length;
    const Scalar e2 = epsilon * epsilon, e3 = e2 * epsilon;

    VolumeComparison<Scalar> out;
    out.samples = samples;
    out.seed = seed;
    for (Index k = 0; k <= n; ++k) {
        const Scalar s = h * Scalar(k);
        const Scalar wt = (k == 0 || k == n) ? h / 2 : h;
        const Vec2<Scalar> m = rod.section.first_moment_at(s);
        const Scalar k1 = w.samples(k, 0), k2 = w.samples(k, 1);
        out.lhs += wt * (e2 * rod.section.area_at(s) - e3 * (m.x() * k1 + m.y() * k2));
    }

    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Scalar nu = rod.section.nu();
    Scalar sum = 0, sum_sq = 0;
    for (Index i = 0; i < samples; ++i) {
        const Scalar s = L * Scalar(unit(gen));
        const auto &shape = rod.section.shape_at(s);
        Vec2<Scalar> eta;
        do {
            eta = Vec2<Scalar>(Scalar(2 * unit(gen) - 1) * nu, Scalar(2 * unit(gen) - 1) * nu);
        } while (!section_contains(shape, eta));
        const Vec2<Scalar> zeta = epsilon * eta;
        const auto fr = frame_at(rod.curve, s);
        const Vec3<Scalar> p = fr.x + zeta.x() * fr.d + zeta.y() * fr.b();
        const Vec3<Scalar> ws = w.at(s);
        const Scalar jac = std::abs(1 - zeta.x() * ws[0] - zeta.y() * ws[1]);
        const int m = std::max(1, region_preimages(rod, epsilon, p));
        const Scalar y = L * e2 * section_area(shape) * jac / Scalar(m);
        sum += y;
        sum_sq += y * y;
    }
    const Scalar N = Scalar(samples);
    out.rhs = sum / N;
    const Scalar var = std::max(Scalar(0), sum_sq / N - out.rhs * out.rhs);
    out.half_width = Scalar(1.96) * std::sqrt(var / N);
    if (out.half_width > Scalar(0.01) * out.rhs)
        throw Error(ErrorCode::EstimatorVariance,
                    "volume estimate half-width " + std::to_string(double(out.half_width)) + " exceeds 1%");
    return out;
}

struct DisjointnessResult {
    bool disjoint = true;
    std::string diagnostic;
};

// Pairwise: midline distance beyond the summed outer radii, or else no surface
// sample of one rod falls inside the other.
template <typename Scalar>
DisjointnessResult rods_disjoint(const RodSystem<Scalar> &sys, Index ring = 16) {
    DisjointnessResult out;
    const auto mids = sys.midlines();
    const Scalar eps = sys.epsilon;
    for (std::size_t i = 0; i < sys.size(); ++i)
        for (std::size_t j = i + 1; j < sys.size(); ++j) {
            const Scalar dist = min_distance(mids[i], mids[j]);
            const Scalar reach = eps * (sys.rods[i].section.nu() + sys.rods[j].section.nu());
            if (dist > reach) continue;
            bool hit = false;
            auto probe = [&](const Rod<Scalar> &a, const Rod<Scalar> &b) {
                for (Index k = 0; k < a.curve.size() && !hit; ++k) {
                    const Scalar s = a.curve.param[k];
                    for (Index r = 0; r < ring && !hit; ++r) {
                        const Scalar th = two_pi<Scalar> * Scalar(r) / Scalar(ring);
                        const Vec2<Scalar> z = eps * section_boundary_point(a.section.shape_at(s), th);
                        // pull slightly inside so touching surfaces do not count
                        if (region_preimages(b, eps, a.region_point(k, Scalar(0.999) * z)) > 0) hit = true;
                    }
                }
            };
            probe(sys.rods[i], sys.rods[j]);
            probe(sys.rods[j], sys.rods[i]);
            std::ostringstream os;
            os << "rods " << i << "," << j << " midline distance " << double(dist) << " <= " << double(reach);
            if (hit) {
                out.disjoint = false;
                os << "; surface sample penetrates";
            } else {
                os << "; surface samples clear";
            }
            out.diagnostic += (out.diagnostic.empty() ? "" : "; ") + os.str();
        }
    return out;
}

template <typename Scalar>
FeasibilityReport check_admissible(const RodSystem<Scalar> &sys, ProblemMode mode,
                                   const ConstraintTolerances<Scalar> &tol = {}) {
    FeasibilityReport rep;
    rep.mode = mode;
    rep.seed = tol.seed;
    const Scalar eps = sys.epsilon;

    for (std::size_t i = 0; i < sys.size(); ++i) {
        const auto &rod = sys.rods[i];
        const int ri = int(i);
        const auto gaps = closure_defects(rod.curve);
        const Scalar pos_tol = tol.closure.position_rel * rod.length();
        rep.add({"C1", ri, -1, gaps.position <= pos_tol, double(gaps.position), double(pos_tol), "position gap"});
        rep.add({"C2", ri, -1, gaps.tangent <= tol.closure.tangent, double(gaps.tangent),
                 double(tol.closure.tangent), "tangent gap"});

        Scalar delta = 0;
        try {
            delta = midline_global_radius(rod);
        } catch (const Error &e) {
            rep.add({"C4", ri, -1, false, 0, 0, e.what()});
            continue;
        }

        if (gaps.position <= pos_tol && gaps.tangent <= tol.closure.tangent) {
            try {
                const Scalar tau = default_tau(rod, delta, eps);
                const auto link = twist_linking(rod, tau, tol.closure);
                std::ostringstream os;
                os << "Link(x, x_tau) raw " << double(link.raw) << " tau " << double(tau) << " prescribed "
                   << rod.twist;
                rep.add({"C3", ri, -1, link.value == rod.twist, double(link.value), double(rod.twist), os.str()});
            } catch (const Error &e) {
                rep.add({"C3", ri, -1, false, 0, double(rod.twist), e.what()});
            }
        } else {
            rep.add({"C3", ri, -1, false, 0, double(rod.twist), "frame not closed"});
        }

        const bool simple = delta > 0;
        rep.add({"C4", ri, -1, rod.isotopy_declared && simple, double(delta), 0,
                 std::string("declared isotopic to ") + rod.reference_name +
                     (rod.isotopy_declared ? "" : " (declaration missing or path guard violated)")});

        if (mode == ProblemMode::reduced) {
            rep.add({"C5", ri, -1, delta >= sys.delta0, double(delta), double(sys.delta0), "global radius"});
        } else {
            try {
                const auto vol = interpenetration_volume(rod, eps, tol.volume_samples, tol.seed + i);
                std::ostringstream os;
                os << "volume lhs " << double(vol.lhs) << " rhs " << double(vol.rhs) << " +- "
                   << double(vol.half_width);
                rep.add({"C5", ri, -1, vol.lhs <= vol.rhs * (1 + tol.volume_slack), double(vol.lhs),
                         double(vol.rhs * (1 + tol.volume_slack)), os.str()});
            } catch (const Error &e) {
                rep.add({"C5", ri, -1, false, 0, 0, e.what()});
            }
        }
    }

    if (mode == ProblemMode::linked) {
        const auto disj = rods_disjoint(sys);
        rep.add({"C5", -1, -1, disj.disjoint, disj.disjoint ? 1.0 : 0.0, 1.0,
                 disj.diagnostic.empty() ? "interiors disjoint" : disj.diagnostic});
        try {
            const LinkingMatrix m = linking_matrix(sys.midlines());
            const bool chain = chain_structure_holds(m);
            rep.add({"C6", -1, -1, chain, chain ? 1.0 : 0.0, 1.0, "chain structure through |Link| = 1"});
            const auto &p = sys.prescribed_linking;
            if (p.size() > 0) {
                for (Index a = 0; a < m.rows(); ++a)
                    for (Index b = a + 1; b < m.cols(); ++b)
                        rep.add({"C6", int(a), int(b), m(a, b) == p(a, b), double(m(a, b)), double(p(a, b)),
                                 "Link(x_a, x_b) against prescribed"});
            }
        } catch (const Error &e) {
            rep.add({"C6", -1, -1, false, 0, 0, e.what()});
        }
    }
    return rep;
}

} // namespace kplab
