#include "oracles.hpp"

#include "kplab/constraints.hpp"

#include <boost/numeric/odeint.hpp>
#include <doctest.h>

using namespace kplab;
using oracle::Vec3d;

namespace {

using State = std::array<double, 9>;

// x(L) for constant (k1, k2, w) by adaptive Dormand-Prince at tight tolerance.
Vec3d odeint_endpoint(double L, double k1, double k2, double om, const InitialFrame<double> &f0) {
    namespace ode = boost::numeric::odeint;
    State y{};
    for (int i = 0; i < 3; ++i) {
        y[std::size_t(i)] = f0.origin[i];
        y[std::size_t(3 + i)] = f0.tangent[i];
        y[std::size_t(6 + i)] = f0.director[i];
    }
    auto rhs = [&](const State &s, State &ds, double) {
        const Vec3d t(s[3], s[4], s[5]), d(s[6], s[7], s[8]);
        const Vec3d b = t.cross(d);
        const Vec3d dt = k1 * d + k2 * b, dd = om * b - k1 * t;
        for (int i = 0; i < 3; ++i) {
            ds[std::size_t(i)] = t[i];
            ds[std::size_t(3 + i)] = dt[i];
            ds[std::size_t(6 + i)] = dd[i];
        }
    };
    ode::integrate_adaptive(ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>()), rhs, y, 0.0, L, 1e-3);
    return {y[0], y[1], y[2]};
}

double orthonormality_drift(const FramedCurve<double> &c) {
    double worst = 0;
    for (Index k = 0; k < c.size(); ++k) {
        worst = std::max({worst, std::abs(c.t.col(k).dot(c.d.col(k))), std::abs(c.t.col(k).norm() - 1),
                          std::abs(c.d.col(k).norm() - 1)});
    }
    return worst;
}

} // namespace

TEST_CASE("zero curvature gives a straight segment") {
    const auto c = integrate_frame(CurvatureField<double>::constant(3, 64, 0, 0, 0),
                                   InitialFrame<double>{Vec3d::Zero(), Vec3d::UnitX(), Vec3d::UnitY()});
    for (Index k = 0; k < c.size(); ++k) {
        CHECK((c.x.col(k) - c.param[k] * Vec3d::UnitX()).norm() < 1e-14);
        CHECK((c.t.col(k) - Vec3d::UnitX()).norm() < 1e-14);
        CHECK((c.d.col(k) - Vec3d::UnitY()).norm() < 1e-14);
    }
    CHECK(closure_defects(c).position == doctest::Approx(3).epsilon(1e-14));
}

TEST_CASE("constant curvature circle closes at n = 1024") {
    const double L = 5;
    const auto c = integrate_frame(CurvatureField<double>::constant(L, 1024, two_pi<double> / L, 0, 0),
                                   InitialFrame<double>{Vec3d::Zero(), Vec3d::UnitX(), Vec3d::UnitY()});
    const auto g = closure_defects(c);
    CHECK(g.position <= 1e-6 * L);
    CHECK(g.tangent <= 1e-6);
    CHECK(g.director <= 1e-6);
    CHECK(orthonormality_drift(c) <= 1e-8);
    // every node lies on the circle of radius L / 2 pi centred at d0 L / 2 pi
    const Vec3d centre = Vec3d::UnitY() * L / two_pi<double>;
    for (Index k = 0; k < c.size(); ++k) CHECK((c.x.col(k) - centre).norm() == doctest::Approx(L / two_pi<double>).epsilon(1e-9));
}

TEST_CASE("helix endpoint matches adaptive Dormand-Prince and the closed form") {
    const double a = 1.3, b = 0.7, L = 4.0;
    const auto f0 = oracle::helix_frame(a, b);
    const auto c = integrate_frame(CurvatureField<double>::constant(L, 1024, a, 0, b), f0);
    const Vec3d xL = c.x.col(c.size() - 1);
    CHECK((xL - odeint_endpoint(L, a, 0, b, f0)).norm() <= 1e-7 * L);
    for (Index k = 0; k < c.size(); k += 97) CHECK((c.x.col(k) - oracle::helix_point(a, b, c.param[k])).norm() <= 1e-7 * L);
}

TEST_CASE("generic constant field against odeint") {
    const double L = 3.0;
    const InitialFrame<double> f0{Vec3d(0.2, -0.1, 0.4), Vec3d(0, 0, 1), Vec3d(1, 0, 0)};
    const auto c = integrate_frame(CurvatureField<double>::constant(L, 1024, 0.8, -1.1, 2.3), f0);
    CHECK((c.x.col(c.size() - 1) - odeint_endpoint(L, 0.8, -1.1, 2.3, f0)).norm() <= 1e-7 * L);
}

TEST_CASE("orthonormality survives a rough field") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-5, 5);
    const auto w = CurvatureField<double>::sample(6.0, 1024, [&](double) { return Vec3d(u(gen), u(gen), u(gen)); });
    const auto c = integrate_frame(w, InitialFrame<double>{});
    CHECK(orthonormality_drift(c) <= 1e-8);
}

TEST_CASE("convergence order is at least two under n -> 2n -> 4n") {
    const double L = 2.5;
    auto field = [&](Index n) {
        return CurvatureField<double>::sample(L, n, [](double s) {
            return Vec3d(1 + 0.5 * std::sin(s), 0.3 * std::cos(2 * s), 0.8 + 0.2 * s);
        });
    };
    const InitialFrame<double> f0{};
    // the field itself is piecewise linear on each grid, so the oracle integrates the
    // smooth field on a grid 256 times finer
    const Vec3d ref = integrate_frame(field(65536), f0).x.rightCols(1);
    double err[3];
    Index n = 64;
    for (double &e : err) {
        e = (integrate_frame(field(n), f0).x.rightCols<1>() - ref).norm();
        n *= 2;
    }
    const double p1 = std::log2(err[0] / err[1]), p2 = std::log2(err[1] / err[2]);
    INFO("errors " << err[0] << " " << err[1] << " " << err[2]);
    CHECK(p1 >= 2.0 - 0.1);
    CHECK(p2 >= 2.0 - 0.1);
}

TEST_CASE("rotating the initial frame rotates the solution") {
    const auto w = CurvatureField<double>::sample(4.0, 512, [](double s) { return Vec3d(1 + s, -0.5, std::cos(s)); });
    const InitialFrame<double> f0{Vec3d(1, 2, 3), Vec3d::UnitZ(), Vec3d::UnitX()};
    const Mat3<double> R = oracle::generic_rotation();
    const InitialFrame<double> g0{R * f0.origin, R * f0.tangent, R * f0.director};
    const auto a = integrate_frame(w, f0), b = integrate_frame(w, g0);
    CHECK(((R * a.x) - b.x).colwise().norm().maxCoeff() <= 1e-9);
}

TEST_CASE("perturbed circle gap matches the chord of the open arc") {
    const double L = 2 * two_pi<double>, delta = 1e-3;
    const double k = two_pi<double> / L * (1 + delta);
    const auto c = integrate_frame(CurvatureField<double>::constant(L, 2048, k, 0, 0), InitialFrame<double>{});
    const double R = 1 / k;
    const double chord = 2 * R * std::abs(std::sin(k * L / 2));
    CHECK(closure_defects(c).position == doctest::Approx(chord).epsilon(1e-5));
}

TEST_CASE("input validation") {
    auto w = CurvatureField<double>::constant(1, 16, 1, 0, 0);
    w.samples(3, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(w.validate(), Error);
    try {
        w.validate();
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::NonFiniteSample);
    }
    InitialFrame<double> bad{Vec3d::Zero(), Vec3d::UnitX(), Vec3d(1, 1, 0).normalized()};
    try {
        bad.validate();
        FAIL("expected DegenerateFrame");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::DegenerateFrame);
    }
}

TEST_CASE("close-up of an untwisted circle") {
    const auto rod = oracle::circle_rod(1.0, 512);
    const double tau = 0.05;
    const auto up = close_up_curve(rod.curve, tau);
    CHECK(up.phi == 0);
    const Index n = rod.curve.size() - 1;
    // offset circle of radius R - tau (director points inwards)
    for (Index k = 0; k <= n; ++k) CHECK(up.nodes.col(k).norm() == doctest::Approx(1 - tau).epsilon(1e-9));
    CHECK((up.nodes.col(0) - up.nodes.rightCols<1>()).norm() <= 1e-9 + 1e-6);
    CHECK(twist_linking(rod, tau).value == 0);
}

TEST_CASE("one full director turn links the offset curve once") {
    int values[2];
    for (int side = 0; side < 2; ++side) {
        RodSystem<double> sys;
        sys.rods.push_back(oracle::circle_rod(1.0, 512, 0.1, side == 0 ? 1 : -1));
        REQUIRE(close_rods(sys));
        const auto &rod = sys.rods[0];
        const double tau = 0.05;
        const auto lk = twist_linking(rod, tau);
        CHECK(std::abs(lk.value) == 1);
        // crossing-count oracle on the same pair
        const auto up = close_up_curve(rod.curve, tau);
        const Index n = rod.curve.size() - 1;
        CHECK(oracle::crossing_linking(rod.curve.x.leftCols(n), up.nodes.leftCols(up.nodes.cols() - 1)) == lk.value);
        values[side] = lk.value;
    }
    CHECK(values[0] == -values[1]);
}

TEST_CASE("twist integer is stable under grid doubling") {
    for (Index n : {256, 512, 1024}) {
        RodSystem<double> sys;
        sys.rods.push_back(oracle::circle_rod(1.0, n, 0.1, 2));
        REQUIRE(close_rods(sys));
        const auto lk = twist_linking(sys.rods[0], 0.05);
        CHECK(std::abs(lk.value) == 2);
        CHECK(lk.gap < 0.5);
    }
}

TEST_CASE("offset nodes converge to the midline as tau shrinks") {
    const auto rod = oracle::circle_rod(1.0, 256);
    for (double tau : {1e-1, 1e-2, 1e-3}) {
        const auto up = close_up_curve(rod.curve, tau);
        double worst = 0;
        for (Index k = 0; k < rod.curve.size(); ++k) worst = std::max(worst, (up.nodes.col(k) - rod.curve.x.col(k)).norm());
        CHECK(worst <= tau * (1 + 1e-12));
    }
}

TEST_CASE("closing angle errors") {
    CHECK_THROWS_AS(close_up_curve(oracle::straight_rod(1, 32, 0.1).curve, 0.01), Error);
    try {
        closing_angle<double>(Vec3d::UnitY(), Vec3d::UnitX(), -Vec3d::UnitY());
        FAIL("expected AmbiguousAngle");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::AmbiguousAngle);
    }
    // quarter turn about t: d(L) = b(0) rotated back by +pi/2
    CHECK(closing_angle<double>(Vec3d::UnitY(), Vec3d::UnitX(), -Vec3d::UnitZ()) ==
          doctest::Approx(pi<double> / 2));
}

TEST_CASE("constant extension") {
    const auto rod = oracle::circle_rod(1.0, 128);
    const auto e = extend_constant(rod.curve);
    const Index n = rod.curve.size();
    CHECK(e.x.leftCols(n) == rod.curve.x);
    CHECK(e.t.leftCols(n) == rod.curve.t);
    CHECK(e.param.head(n) == rod.curve.param);
    CHECK(e.param[e.size() - 1] == doctest::Approx(rod.length() + 1));
    for (Index k = n; k < e.size(); ++k) CHECK(e.x.col(k) == rod.curve.x.col(n - 1));
}
