#include "oracles.hpp"

#include <doctest.h>

using namespace kplab;
using oracle::Vec3d;

namespace {

RodSystem<double> single(Rod<double> rod) {
    RodSystem<double> sys;
    sys.rods.push_back(std::move(rod));
    return sys;
}

// Off-centre hexagon: nonzero first moment.
CrossSectionProfile<double> hexagon_section() {
    std::vector<Vec2<double>> v;
    for (int k = 0; k < 6; ++k) {
        const double a = pi<double> / 3 * k;
        v.emplace_back(0.2 * std::cos(a), 0.05 + 0.2 * std::sin(a));
    }
    return {0.1, 0.25, Polygon<double>{v}};
}

Rod<double> circle_with(const CrossSectionProfile<double> &section, Index n = 256) {
    auto rod = oracle::circle_rod(1, n);
    rod.section = section;
    return rod;
}

SpanningSurface<double> jiggle(SpanningSurface<double> S, std::mt19937_64 &gen, double amount) {
    std::uniform_real_distribution<double> u(-amount, amount);
    for (Index i = 0; i < S.vertex_count(); ++i)
        for (int c = 0; c < 3; ++c) S.V(i, c) += u(gen);
    return S;
}

} // namespace

TEST_CASE("elastic energy") {
    const double L = 3;
    SUBCASE("rest state") {
        ElasticModel<double> m;
        m.intrinsic = Vec3d(0.4, -0.2, 1.5);
        m.stiffness = Vec3d(1, 2, 3);
        CHECK(elastic_energy(m, CurvatureField<double>::constant(L, 64, 0.4, -0.2, 1.5)) == 0);
    }
    SUBCASE("constant bending") {
        CHECK(elastic_energy(ElasticModel<double>{}, CurvatureField<double>::constant(L, 64, two_pi<double> / L, 0, 0)) ==
              doctest::Approx(4 * pi<double> * pi<double> / L).epsilon(1e-14));
    }
    SUBCASE("random field against fine-grid Simpson") {
        std::mt19937_64 gen(3);
        std::normal_distribution<double> g(0, 1);
        const auto w = CurvatureField<double>::sample(L, 100, [&](double) { return Vec3d(g(gen), g(gen), g(gen)); });
        ElasticModel<double> m;
        m.stiffness = Vec3d(1.5, 0.7, 2.2);
        m.intrinsic = Vec3d(0.1, 0.2, -0.3);
        auto density = [&](double s) {
            const Vec3d e = w.at(s) - m.intrinsic;
            return m.stiffness.dot(e.cwiseProduct(e));
        };
        const int fine = 100 * 64;
        const double h = L / fine;
        double ref = 0;
        for (int i = 0; i < fine; ++i)
            ref += h / 6 * (density(i * h) + 4 * density((i + 0.5) * h) + density(std::min(L, (i + 1) * h)));
        CHECK(elastic_energy(m, w) == doctest::Approx(ref).epsilon(1e-8));
    }
    SUBCASE("pluggable density on a smooth field") {
        const auto w = CurvatureField<double>::sample(L, 400, [](double s) { return Vec3d(std::sin(s), 1 + s, std::cos(2 * s)); });
        ElasticModel<double> quadratic, custom;
        custom.custom = [](double, const Vec3d &k) { return k.squaredNorm(); };
        CHECK(elastic_energy(custom, w) == doctest::Approx(elastic_energy(quadratic, w)).epsilon(1e-4));
    }
}

TEST_CASE("gravity on straight rods") {
    const double rho = 2.5, g0 = 9.81, a = 0.1, L = 3, z0 = 1.7;
    const auto mass = MassModel<double>::constant(rho, Vec3d(0, 0, -g0));
    const auto flat = single(oracle::straight_rod(L, 64, a, Vec3d(0, 0, z0)));
    CHECK(gravitational_energy(mass, flat) == doctest::Approx(-rho * g0 * z0 * pi<double> * a * a * L).epsilon(1e-12));

    const double H = 2;
    const Vec3d t = Vec3d(std::sqrt(L * L - H * H), 0, H) / L;
    const auto rising = single(oracle::straight_rod(L, 64, a, Vec3d::Zero(), t, Vec3d::UnitY()));
    CHECK(gravitational_energy(mass, rising) == doctest::Approx(-rho * g0 * H / 2 * pi<double> * a * a * L).epsilon(1e-12));
}

TEST_CASE("gravity with separable density against Monte Carlo") {
    const double a = 0.1;
    const Vec3d grav(1, -2, -9.81);
    const auto mass = MassModel<double>::separable([](double s) { return 1 + 0.3 * s; },
                                                   [](const Vec2<double> &z) { return 1 + 5 * z.x() + 2 * z.y(); }, grav);
    const auto sys = single(oracle::circle_rod(1, 1024, a));
    const double computed = gravitational_energy(mass, sys);

    // analytic circle frame: x = (cos, sin, 0), d = -x, t x d = e3
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(0, 1);
    const double L = two_pi<double>;
    const int N = 400000;
    double sum = 0, sum_sq = 0;
    for (int i = 0; i < N; ++i) {
        const double s = L * u(gen);
        const double r = a * std::sqrt(u(gen)), th = two_pi<double> * u(gen);
        const Vec2<double> z(r * std::cos(th), r * std::sin(th));
        const Vec3d x(std::cos(s), std::sin(s), 0);
        const Vec3d p = x - z.x() * x + z.y() * Vec3d::UnitZ();
        const double y = L * pi<double> * a * a * (1 + 0.3 * s) * (1 + 5 * z.x() + 2 * z.y()) * grav.dot(p);
        sum += y;
        sum_sq += y * y;
    }
    const double mean = sum / N, sigma = std::sqrt((sum_sq / N - mean * mean) / N);
    INFO("computed " << computed << " mc " << mean << " sigma " << sigma);
    CHECK(std::abs(computed - mean) <= 3 * sigma);
}

TEST_CASE("scaled gravity") {
    const auto mass = MassModel<double>::constant(0.7, Vec3d(0.3, 0.5, -9.81));
    const auto sys = single(circle_with(hexagon_section()));
    CHECK(scaled_gravitational_energy(mass, sys, 1.0) == gravitational_energy(mass, sys));
    CHECK_THROWS_AS(scaled_gravitational_energy(mass, sys, 0.0), Error);

    // constant density: E_eps - E_0 = eps rho int (g.d m1 + g.(t x d) m2) ds exactly
    const auto &rod = sys.rods[0];
    const Vec2<double> m = rod.section.first_moment_at(0);
    const Index n = rod.curvature.intervals();
    const double h = rod.curvature.spacing();
    double first = 0;
    for (Index k = 0; k <= n; ++k) {
        const double wt = (k == 0 || k == n) ? h / 2 : h;
        first += wt * mass.rho * (mass.gravity.dot(rod.curve.d.col(k)) * m.x() + mass.gravity.dot(rod.curve.binormal(k)) * m.y());
    }
    REQUIRE(std::abs(first) > 1e-3);
    const double limit = limit_weight(mass, sys);
    for (double eps : {0.5, 0.1, 0.01})
        CHECK(scaled_gravitational_energy(mass, sys, eps) - limit == doctest::Approx(eps * first).epsilon(1e-9));

    // halving eps halves the gap
    double prev = std::abs(scaled_gravitational_energy(mass, sys, 0.2) - limit);
    for (double eps : {0.1, 0.05, 0.025}) {
        const double gap = std::abs(scaled_gravitational_energy(mass, sys, eps) - limit);
        CHECK(gap / prev >= 0.3);
        CHECK(gap / prev <= 0.7);
        prev = gap;
    }

    // constant density on a centred disk: no eps dependence at all
    const auto disk = single(oracle::circle_rod(1, 256, 0.1));
    for (double eps : {0.5, 0.1}) CHECK(scaled_gravitational_energy(mass, disk, eps) == doctest::Approx(limit_weight(mass, disk)).epsilon(1e-12));
}

TEST_CASE("surface energy of flat disks") {
    const auto disk = oracle::flat_disk(20, 6);
    REQUIRE(disk.face_count() >= 2048);
    CHECK(surface_energy(AnisotropicIntegrand<double>::constant(1), disk) == doctest::Approx(pi<double>).epsilon(5e-3));
    const auto F = AnisotropicIntegrand<double>::matrix_norm(Vec3d(1, 1, 4).asDiagonal());
    CHECK(surface_energy(F, disk) == doctest::Approx(2 * pi<double>).epsilon(5e-3));
    const auto upright = oracle::flat_disk(20, 6, Vec3d::UnitX(), Vec3d::UnitZ());
    CHECK(surface_energy(F, upright) == doctest::Approx(pi<double>).epsilon(5e-3));
    const auto [lo, hi] = bounds_check(AnisotropicIntegrand<double>::constant(1), disk);
    CHECK(lo == doctest::Approx(disk.area()));
    CHECK(hi == doctest::Approx(disk.area()));
}

TEST_CASE("bounds sandwich on random meshes") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.5, 3);
    std::vector<double> values(9 * 16);
    for (double &v : values) v = u(gen);
    const auto table = AnisotropicIntegrand<double>::table(9, 16, values);
    CHECK(table.lower_bound() >= 0.5);
    CHECK(table.upper_bound() <= 3);
    CHECK_FALSE(table.ellipticity_verified());
    const auto diag = AnisotropicIntegrand<double>::matrix_norm(Vec3d(1, 1, 4).asDiagonal());
    CHECK(diag.lower_bound() == doctest::Approx(1));
    CHECK(diag.upper_bound() == doctest::Approx(2));
    for (int trial = 0; trial < 100; ++trial) {
        const auto S = jiggle(oracle::flat_disk(4 + trial % 5, 6), gen, 0.05);
        for (const auto *F : {&table, &diag}) {
            const double e = surface_energy(*F, S);
            const auto [lo, hi] = bounds_check(*F, S);
            CHECK(lo <= e * (1 + 1e-12));
            CHECK(e <= hi * (1 + 1e-12));
        }
    }
}

TEST_CASE("flip invariance and degenerate triangles") {
    std::mt19937_64 gen(5);
    const auto S = jiggle(oracle::flat_disk(6, 6), gen, 0.1);
    std::vector<double> values(5 * 8);
    std::uniform_real_distribution<double> u(0.5, 3);
    for (double &v : values) v = u(gen);
    for (const auto &F : {AnisotropicIntegrand<double>::constant(1.3),
                          AnisotropicIntegrand<double>::matrix_norm(Mat3<double>(Vec3d(1, 2, 5).asDiagonal())),
                          AnisotropicIntegrand<double>::table(5, 8, values)})
        CHECK(surface_energy(F, S) == surface_energy(F, S.flipped()));

    auto bad = S;
    bad.V.row(bad.F(3, 1)) = bad.V.row(bad.F(3, 0));
    try {
        surface_energy(AnisotropicIntegrand<double>::constant(1), bad);
        FAIL("expected DegenerateTriangle");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::DegenerateTriangle);
    }
}

TEST_CASE("surface energy converges under refinement") {
    double prev_err = 0, prev_h = 0;
    for (int rings : {4, 8, 16, 32}) {
        const auto S = oracle::flat_disk(rings, 6);
        const double err = std::abs(surface_energy(AnisotropicIntegrand<double>::constant(1), S) - pi<double>);
        const double h = S.max_edge();
        if (prev_err > 0) {
            const double order = std::log(prev_err / err) / std::log(prev_h / h);
            CHECK(order >= 1);
        }
        prev_err = err;
        prev_h = h;
    }
}

TEST_CASE("totals") {
    auto sys = single(oracle::circle_rod(1, 256, 0.1));
    EnergyModels<double> models;
    models.mass = MassModel<double>::constant(0.1, Vec3d(0, 0, -9.81));
    const auto ws = default_witnesses(sys);
    const auto disk = oracle::flat_disk(24, 6);
    const auto E = total_energy(sys, models, disk, ws);
    CHECK(E.elastic == doctest::Approx(elastic_energy(models.elastic_for(0), sys.rods[0].curvature)));
    CHECK(E.gravity == doctest::Approx(gravitational_energy(models.mass, sys)));
    CHECK(E.film == doctest::Approx(pi<double>).epsilon(5e-3));
    CHECK(std::abs(E.total() - (E.elastic + E.gravity + E.film)) <= 1e-12 * std::abs(E.total()));
    CHECK(EnergyComponents<double>{1.0, -0.5, 3.0}.total() == 3.5);

    const auto Eeps = total_energy_eps(sys, models, disk, 1.0, ws);
    CHECK(Eeps.total() == E.total());

    const auto E0 = limit_energy(sys, models, disk, ws);
    CHECK(E0.elastic == E.elastic);
    CHECK(E0.film == E.film);
    CHECK(E0.gravity == doctest::Approx(scaled_gravitational_energy(models.mass, sys, 1e-6)).epsilon(1e-9));

    auto lifted = disk;
    lifted.V.col(2).array() += 1;
    try {
        total_energy(sys, models, lifted, ws);
        FAIL("expected NotSpanning");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::NotSpanning);
    }
    sys.rods.push_back(sys.rods[0]);
    CHECK_THROWS_AS(limit_energy(sys, models, disk, ws), Error);
}
