#include "oracles.hpp"

#include <doctest.h>

using namespace kplab;
using oracle::Vec3d;

namespace {

ClosedPolyline<double> poly(const oracle::Nodes3 &x) { return ClosedPolyline<double>(x); }

oracle::Nodes3 hopf_a(Index n) { return oracle::circle(Vec3d::Zero(), Vec3d::UnitX(), Vec3d::UnitY(), 1, n); }
oracle::Nodes3 hopf_b(Index n) { return oracle::circle(Vec3d(1, 0, 0), Vec3d::UnitX(), Vec3d::UnitZ(), 1, n, 0.1); }

} // namespace

TEST_CASE("Hopf pair links once") {
    const auto a = hopf_a(512), b = hopf_b(512);
    const auto lk = linking_number(poly(a), poly(b));
    CHECK(std::abs(lk.value) == 1);
    CHECK(lk.gap < 1e-2);
    // the b circle crosses the disk of a once, downwards against its normal e3
    CHECK(lk.value == -1);
    CHECK(oracle::crossing_linking(a, b) == lk.value);
}

TEST_CASE("split pair does not link") {
    const auto a = oracle::circle(Vec3d::Zero(), Vec3d::UnitX(), Vec3d::UnitY(), 1, 128);
    const auto b = oracle::circle(Vec3d(10, 0, 0), Vec3d::UnitX(), Vec3d::UnitY(), 1, 128);
    const auto lk = linking_number(poly(a), poly(b));
    CHECK(lk.value == 0);
    CHECK(lk.gap < 1e-2);
}

TEST_CASE("(2,4) torus link has linking number 2") {
    const auto a = oracle::torus_link_component(2, 0, 2, 0.5, 512), b = oracle::torus_link_component(2, 1, 2, 0.5, 512);
    const auto lk = linking_number(poly(a), poly(b));
    CHECK(std::abs(lk.value) == 2);
    CHECK(lk.gap < 1e-2);
    CHECK(oracle::crossing_linking(a, b) == lk.value);
    CHECK(oracle::crossing_linking(a, b, Mat3<double>(Eigen::AngleAxisd(1.1, Vec3d(1, 2, 3).normalized()))) ==
          lk.value);
}

TEST_CASE("linking is symmetric and stable under grid doubling") {
    for (int m : {1, 2, 3}) {
        const auto a1 = oracle::torus_link_component(m, 0, 2, 0.5, 256), b1 = oracle::torus_link_component(m, 1, 2, 0.5, 256);
        const auto a2 = oracle::torus_link_component(m, 0, 2, 0.5, 512), b2 = oracle::torus_link_component(m, 1, 2, 0.5, 512);
        const auto l1 = linking_number(poly(a1), poly(b1)), l2 = linking_number(poly(a2), poly(b2));
        const auto r1 = linking_number(poly(b1), poly(a1));
        CHECK(l1.value == r1.value);
        CHECK(l1.raw == doctest::Approx(r1.raw).epsilon(1e-9));
        CHECK(l1.value == l2.value);
        CHECK(std::abs(l1.raw - l2.raw) < 1e-2);
        CHECK(std::abs(l1.value) == m);
    }
}

TEST_CASE("rigid motions and scaling leave the linking number and scale the global radius") {
    const auto a = poly(hopf_a(256)), b = poly(hopf_b(256));
    const int base = linking_number(a, b).value;
    const double delta = global_radius(a);
    const Mat3<double> R = oracle::generic_rotation();
    for (double scale : {0.5, 1.0, 3.0}) {
        const Vec3d shift(0.3, -2, 5);
        const auto ta = a.transformed(R, shift, scale), tb = b.transformed(R, shift, scale);
        CHECK(linking_number(ta, tb).value == base);
        CHECK(global_radius(ta) == doctest::Approx(scale * delta).epsilon(1e-9));
    }
}

TEST_CASE("curves too close") {
    const auto a = hopf_a(64);
    oracle::Nodes3 b = a;
    b.row(2).array() += 1e-9;
    try {
        linking_number(poly(a), poly(b));
        FAIL("expected CurvesTooClose");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::CurvesTooClose);
    }
}

TEST_CASE("global radius of a circle") {
    for (double R : {0.5, 1.0, 4.0}) {
        const auto c = poly(oracle::circle(Vec3d(1, 2, 3), Vec3d::UnitX(), Vec3d::UnitZ(), R, 256));
        CHECK(global_radius(c) == doctest::Approx(R).epsilon(1e-3));
        CHECK(tube_is_embedded(c, R / 2));
        CHECK_FALSE(tube_is_embedded(c, 2 * R));
        CHECK(tube_is_embedded(c, global_radius(c)));
    }
}

TEST_CASE("stadium global radius equals the cap radius") {
    const double r = 0.5, straight = 2;
    std::vector<Vec3d> pts;
    const int cap = 48, side = 40;
    for (int k = 0; k < cap; ++k) {
        const double a = -pi<double> / 2 + pi<double> * k / cap;
        pts.emplace_back(straight / 2 + r * std::cos(a), r * std::sin(a), 0);
    }
    for (int k = 0; k < side; ++k) pts.emplace_back(straight / 2 - straight * k / side, r, 0);
    for (int k = 0; k < cap; ++k) {
        const double a = pi<double> / 2 + pi<double> * k / cap;
        pts.emplace_back(-straight / 2 + r * std::cos(a), r * std::sin(a), 0);
    }
    for (int k = 0; k < side; ++k) pts.emplace_back(-straight / 2 + straight * k / side, -r, 0);
    oracle::Nodes3 x(3, Index(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) x.col(Index(i)) = pts[i];
    const double delta = global_radius(poly(x));
    CHECK(delta == doctest::Approx(r).epsilon(1e-2));
    CHECK(delta == doctest::Approx(oracle::global_radius_brute(x)).epsilon(1e-12));
}

TEST_CASE("pruned scan agrees with brute force on random curves") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto x = oracle::random_curve(gen, 200);
        CHECK(global_radius(poly(x)) == doctest::Approx(oracle::global_radius_brute(x)).epsilon(1e-12));
    }
}

TEST_CASE("tube embedding agrees with the global radius on 50 random curves") {
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const auto c = poly(oracle::random_curve(gen, 128));
        const double delta = global_radius(c);
        REQUIRE(delta > 0);
        CHECK(tube_is_embedded(c, delta));
        CHECK(tube_is_embedded(c, delta * (1 - 1e-9)));
        CHECK_FALSE(tube_is_embedded(c, delta * (1 + 1e-9)));
        CHECK(delta == doctest::Approx(oracle::global_radius_brute(c.nodes())).epsilon(1e-12));
    }
}

TEST_CASE("linking matrix of chains and necklaces") {
    // three-ring chain along the x axis, alternating planes
    std::vector<ClosedPolyline<double>> chain;
    for (int i = 0; i < 3; ++i) {
        const Vec3d e2 = i % 2 == 0 ? Vec3d::UnitY() : Vec3d::UnitZ();
        chain.push_back(poly(oracle::circle(Vec3d(1.5 * i, 0, 0), Vec3d::UnitX(), e2, 1, 256)));
    }
    const auto m = linking_matrix(chain);
    CHECK(m == m.transpose());
    CHECK(std::abs(m(0, 1)) == 1);
    CHECK(std::abs(m(1, 2)) == 1);
    CHECK(m(0, 2) == 0);
    CHECK(chain_structure_holds(m));

    std::vector<ClosedPolyline<double>> split;
    for (int i = 0; i < 4; ++i)
        split.push_back(poly(oracle::circle(Vec3d(5.0 * i, 0, 0), Vec3d::UnitX(), Vec3d::UnitY(), 1, 64)));
    CHECK(linking_matrix(split).isZero());
    CHECK_FALSE(chain_structure_holds(LinkingMatrix(LinkingMatrix::Zero(2, 2))));

    // necklace of six rings centred on a circle of radius 2: even rings lie in the
    // horizontal plane, odd rings in the vertical plane tangent to the circle
    std::vector<oracle::Nodes3> beads;
    for (int i = 0; i < 6; ++i) {
        const double a = pi<double> / 3 * i;
        const Vec3d radial(std::cos(a), std::sin(a), 0), tangent(-std::sin(a), std::cos(a), 0);
        beads.push_back(oracle::circle(2 * radial, tangent, i % 2 == 0 ? radial : Vec3d::UnitZ(), 1.5, 256));
    }
    std::vector<ClosedPolyline<double>> necklace;
    for (const auto &b : beads) necklace.push_back(poly(b));
    const auto nm = linking_matrix(necklace);
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j) {
            const bool adjacent = (j - i) == 1 || (j - i) == 5;
            CHECK(std::abs(nm(i, j)) == (adjacent ? 1 : 0));
            CHECK(oracle::crossing_linking(beads[std::size_t(i)], beads[std::size_t(j)]) == nm(i, j));
        }
    CHECK(chain_structure_holds(nm));
    CHECK(chain_structure_holds(LinkingMatrix(LinkingMatrix::Zero(1, 1))));
}
