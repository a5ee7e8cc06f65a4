#pragma once

#include "cross_section.hpp"
#include "rod_kinematics.hpp"
#include "topology.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kplab {

template <typename Scalar>
struct Rod {
    CurvatureField<Scalar> curvature;
    InitialFrame<Scalar> frame;
    CrossSectionProfile<Scalar> section;
    FramedCurve<Scalar> curve;
    int twist = 0; // prescribed l in Link(x, x_tau) = l
    // Knot-type reference loop; the caller declares the initial midline isotopic to it.
    std::optional<ClosedPolyline<Scalar>> reference;
    std::string reference_name = "unknot";
    bool isotopy_declared = true;

    void refresh() { curve = integrate_frame(curvature, frame); }

    Scalar length() const { return curvature.length; }

    // Point x(s_k) + zeta1 d(s_k) + zeta2 (t x d)(s_k) of the rod region at node k.
    Vec3<Scalar> region_point(Index k, const Vec2<Scalar> &zeta) const {
        return curve.x.col(k) + zeta.x() * curve.d.col(k) + zeta.y() * curve.binormal(k);
    }

    // Closed midline polyline on the nodes s_0 .. s_{n-1}; x(L) only approximates x(0).
    ClosedPolyline<Scalar> midline() const {
        return ClosedPolyline<Scalar>::from_samples(curve.x.leftCols(curve.size() - 1));
    }
};

template <typename Scalar>
Rod<Scalar> make_rod(CurvatureField<Scalar> w, InitialFrame<Scalar> f0, CrossSectionProfile<Scalar> section,
                     int twist = 0) {
    Rod<Scalar> rod{std::move(w), std::move(f0), std::move(section), {}, twist, std::nullopt, "unknot", true};
    rod.refresh();
    return rod;
}

// N rods realizing Lambda[w] (epsilon = 1) or the single-rod Lambda_eps[w].
template <typename Scalar>
struct RodSystem {
    std::vector<Rod<Scalar>> rods;
    LinkingMatrix prescribed_linking; // N x N signed; empty when unconstrained
    Scalar epsilon = 1;
    Scalar delta0 = 0; // global-radius floor for the reduced problem

    std::size_t size() const { return rods.size(); }

    void refresh() {
        for (auto &r : rods) r.refresh();
    }

    std::vector<ClosedPolyline<Scalar>> midlines() const {
        std::vector<ClosedPolyline<Scalar>> out;
        for (const auto &r : rods) out.push_back(r.midline());
        return out;
    }
};

} // namespace kplab
