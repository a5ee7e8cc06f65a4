#pragma once

// Elastic, gravitational and surface energies, their sums and the thin-rod limit.

#include "integrand.hpp"
#include "surface.hpp"

#include <functional>
#include <optional>

namespace kplab {

// Quadratic Kirchhoff density c1 (k1 - k1^)^2 + c2 (k2 - k2^)^2 + c3 (w - w^)^2, or a
// user density f(s, (k1, k2, w)) integrated by the trapezoid rule on the sample grid.
template <typename Scalar>
struct ElasticModel {
    using Density = std::function<Scalar(Scalar, const Vec3<Scalar> &)>;

    Vec3<Scalar> stiffness = Vec3<Scalar>::Ones();
    Vec3<Scalar> intrinsic = Vec3<Scalar>::Zero();
    Density custom;

    void validate() const {
        if (!custom && !(stiffness.minCoeff() > 0))
            throw Error(ErrorCode::InvalidArgument, "elastic stiffnesses must be positive");
        if (!intrinsic.allFinite()) throw Error(ErrorCode::InvalidArgument, "intrinsic curvature must be finite");
    }
};

// rho(s, zeta) = rho_s(s) rho_perp(zeta); the constant kind has rho_s = rho and rho_perp = 1.
template <typename Scalar>
struct MassModel {
    using AxialDensity = std::function<Scalar(Scalar)>;
    using SectionDensity = std::function<Scalar(const Vec2<Scalar> &)>;

    Scalar rho = 1;
    AxialDensity axial;   // empty for the constant kind
    SectionDensity cross; // empty for the constant kind
    Vec3<Scalar> gravity = Vec3<Scalar>(0, 0, Scalar(-9.81));

    static MassModel constant(Scalar rho, const Vec3<Scalar> &g) { return {rho, {}, {}, g}; }
    static MassModel separable(AxialDensity a, SectionDensity c, const Vec3<Scalar> &g) {
        return {1, std::move(a), std::move(c), g};
    }

    bool is_constant() const { return !axial && !cross; }

    Scalar density(Scalar s, const Vec2<Scalar> &zeta) const {
        if (is_constant()) return rho;
        return (axial ? axial(s) : rho) * (cross ? cross(zeta) : Scalar(1));
    }

    // rho_0(s), the value on the centerline.
    Scalar limit_density(Scalar s) const { return density(s, Vec2<Scalar>::Zero()); }

    void validate() const {
        if (is_constant() && !(rho >= 0)) throw Error(ErrorCode::InvalidArgument, "density must be nonnegative");
        if (!gravity.allFinite()) throw Error(ErrorCode::InvalidArgument, "gravity must be finite");
    }
};

template <typename Scalar>
struct EnergyModels {
    std::vector<ElasticModel<Scalar>> elastic; // one per rod, or a single model shared by all
    MassModel<Scalar> mass;
    AnisotropicIntegrand<Scalar> integrand = AnisotropicIntegrand<Scalar>::constant(1);

    const ElasticModel<Scalar> &elastic_for(std::size_t rod) const {
        static const ElasticModel<Scalar> fallback{};
        if (elastic.empty()) return fallback;
        return elastic[std::min(rod, elastic.size() - 1)];
    }
};

template <typename Scalar>
Scalar elastic_energy(const ElasticModel<Scalar> &model, const CurvatureField<Scalar> &w) {
    const Index n = w.intervals();
    const Scalar h = w.spacing();
    Scalar e = 0;
    if (model.custom) {
        for (Index k = 0; k <= n; ++k) {
            const Scalar wt = (k == 0 || k == n) ? h / 2 : h;
            e += wt * model.custom(h * Scalar(k), w.samples.row(k).transpose());
        }
        return e;
    }
    // exact integral of the quadratic density of a piecewise linear field
    for (Index k = 0; k < n; ++k)
        for (int c = 0; c < 3; ++c) {
            const Scalar a = w.samples(k, c) - model.intrinsic[c], b = w.samples(k + 1, c) - model.intrinsic[c];
            e += model.stiffness[c] * h / 3 * (a * a + a * b + b * b);
        }
    return e;
}

template <typename Scalar>
Scalar elastic_energy(const EnergyModels<Scalar> &models, const RodSystem<Scalar> &sys) {
    Scalar e = 0;
    for (std::size_t i = 0; i < sys.size(); ++i) e += elastic_energy(models.elastic_for(i), sys.rods[i].curvature);
    return e;
}

// int_0^L int_{A(s)} rho(s, eps eta) g.(x + eps eta1 d + eps eta2 t x d) d eta ds, i.e. the
// weight of Lambda_eps divided by eps^2 (trapezoid in s, section quadrature in eta).
template <typename Scalar>
Scalar scaled_rod_weight(const MassModel<Scalar> &mass, const Rod<Scalar> &rod, Scalar eps) {
    const auto &c = rod.curve;
    const Index n = rod.curvature.intervals();
    const Scalar h = rod.curvature.spacing();
    Scalar total = 0;
    for (Index k = 0; k <= n; ++k) {
        const Scalar s = c.param[k];
        const Scalar wt = (k == 0 || k == n) ? h / 2 : h;
        const auto &q = rod.section.quadrature_at(s);
        const Scalar gx = mass.gravity.dot(c.x.col(k)), gd = mass.gravity.dot(c.d.col(k)),
                     gb = mass.gravity.dot(c.binormal(k));
        Scalar inner = 0;
        for (std::size_t j = 0; j < q.weights.size(); ++j) {
            const Vec2<Scalar> &eta = q.points[j];
            inner += q.weights[j] * mass.density(s, eps * eta) * (gx + eps * (eta.x() * gd + eta.y() * gb));
        }
        total += wt * inner;
    }
    return total;
}

template <typename Scalar>
Scalar gravitational_energy(const MassModel<Scalar> &mass, const RodSystem<Scalar> &sys) {
    Scalar e = 0;
    for (const auto &r : sys.rods) e += scaled_rod_weight(mass, r, Scalar(1));
    return e;
}

// (1 / eps^2) times the weight of Lambda_eps, via zeta = eps eta.
template <typename Scalar>
Scalar scaled_gravitational_energy(const MassModel<Scalar> &mass, const RodSystem<Scalar> &sys, Scalar eps) {
    if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
    Scalar e = 0;
    for (const auto &r : sys.rods) e += scaled_rod_weight(mass, r, eps);
    return e;
}

// int_0^L |A(s)| rho_0(s) g.x(s) ds
template <typename Scalar>
Scalar limit_weight(const MassModel<Scalar> &mass, const RodSystem<Scalar> &sys) {
    Scalar e = 0;
    for (const auto &rod : sys.rods) {
        const Index n = rod.curvature.intervals();
        const Scalar h = rod.curvature.spacing();
        for (Index k = 0; k <= n; ++k) {
            const Scalar s = rod.curve.param[k];
            const Scalar wt = (k == 0 || k == n) ? h / 2 : h;
            e += wt * rod.section.area_at(s) * mass.limit_density(s) * mass.gravity.dot(rod.curve.x.col(k));
        }
    }
    return e;
}

// Sum over triangles of area * F(centroid, normal); chunks are reduced in index order.
template <typename Scalar>
Scalar surface_energy(const AnisotropicIntegrand<Scalar> &F, const SpanningSurface<Scalar> &S) {
    const Index nf = S.face_count();
    const Scalar sc = S.scale();
    const Scalar floor = Scalar(1e-14) * sc * sc;
    constexpr Index chunk = 1024;
    const std::size_t chunks = std::size_t((nf + chunk - 1) / chunk);
    std::vector<Scalar> partial(chunks, 0);
    std::vector<Index> bad(chunks, -1);
    parallel::for_each_index(chunks, [&](std::size_t c) {
        Scalar acc = 0;
        for (Index f = Index(c) * chunk; f < std::min(nf, Index(c + 1) * chunk); ++f) {
            const Vec3<Scalar> a = S.area_vector_of(f);
            const Scalar area = a.norm();
            if (!(area >= floor) || area == 0) {
                if (bad[c] < 0) bad[c] = f;
                continue;
            }
            acc += area * F(S.centroid_of(f), a / area);
        }
        partial[c] = acc;
    });
    Scalar total = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
        if (bad[c] >= 0)
            throw Error(ErrorCode::DegenerateTriangle, "triangle " + std::to_string(bad[c]) + " has area below " +
                                                           std::to_string(double(floor)));
        total += partial[c];
    }
    return total;
}

template <typename Scalar>
std::pair<Scalar, Scalar> bounds_check(const AnisotropicIntegrand<Scalar> &F, const SpanningSurface<Scalar> &S) {
    const Scalar area = S.area();
    return {F.lower_bound() * area, F.upper_bound() * area};
}

template <typename Scalar>
struct EnergyComponents {
    Scalar elastic = 0;
    Scalar gravity = 0;
    Scalar film = 0; // upper bound for the soap-film infimum
    Scalar total() const { return elastic + gravity + film; }
};

namespace detail {

template <typename Scalar>
void require_spanning(const SpanningSurface<Scalar> &S, const SpanningWitnessSet<Scalar> &ws) {
    const auto rep = check_spanning(S, ws);
    if (!rep.spans) {
        std::string which;
        for (std::size_t l = 0; l < rep.hits.size(); ++l)
            if (rep.hits[l] == 0) which += (which.empty() ? "" : ",") + std::to_string(l);
        throw Error(ErrorCode::NotSpanning, "witness loops not met by the surface: " + which);
    }
}

} // namespace detail

// E = E_el + E_g + F(S)
template <typename Scalar>
EnergyComponents<Scalar> total_energy(const RodSystem<Scalar> &sys, const EnergyModels<Scalar> &models,
                                      const SpanningSurface<Scalar> &S, const SpanningWitnessSet<Scalar> &ws) {
    detail::require_spanning(S, ws);
    return {elastic_energy(models, sys), gravitational_energy(models.mass, sys), surface_energy(models.integrand, S)};
}

// E_eps = E_el + E^g_eps + F(S), with S spanning the eps-tube.
template <typename Scalar>
EnergyComponents<Scalar> total_energy_eps(const RodSystem<Scalar> &sys, const EnergyModels<Scalar> &models,
                                          const SpanningSurface<Scalar> &S, Scalar eps,
                                          const SpanningWitnessSet<Scalar> &ws) {
    detail::require_spanning(S, ws);
    return {elastic_energy(models, sys), scaled_gravitational_energy(models.mass, sys, eps),
            surface_energy(models.integrand, S)};
}

// E_0 = E_el + int |A| rho_0 g.x + F(S), with S spanning the bare midline.
template <typename Scalar>
EnergyComponents<Scalar> limit_energy(const RodSystem<Scalar> &sys, const EnergyModels<Scalar> &models,
                                      const SpanningSurface<Scalar> &S, const SpanningWitnessSet<Scalar> &ws) {
    if (sys.size() != 1) throw Error(ErrorCode::InvalidArgument, "limit energy is defined for a single rod");
    detail::require_spanning(S, ws);
    return {elastic_energy(models, sys), limit_weight(models.mass, sys), surface_energy(models.integrand, S)};
}

} // namespace kplab
