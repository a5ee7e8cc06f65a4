#include "oracles.hpp"

#include "kplab/config.hpp"

#include <doctest.h>

using namespace kplab;
using oracle::Vec3d;

namespace {

RodSystem<double> single(Rod<double> rod) {
    RodSystem<double> sys;
    sys.rods.push_back(std::move(rod));
    return sys;
}

double lateral_area(const SpanningSurface<double> &S, Index cap_faces) {
    double a = 0;
    for (Index f = 0; f < S.face_count() - cap_faces; ++f) a += S.area_vector_of(f).norm();
    return a;
}

double min_angle(const SpanningSurface<double> &S) {
    double m = pi<double>;
    for (Index f = 0; f < S.face_count(); ++f)
        m = std::min(m, triangle_min_angle<double>(S.vertex(S.F(f, 0)), S.vertex(S.F(f, 1)), S.vertex(S.F(f, 2))));
    return m;
}

} // namespace

TEST_CASE("tube mesh around a straight rod is a cylinder") {
    const double L = 2, a = 0.1;
    const Index rings = 64;
    const auto mesh = build_tube_mesh(single(oracle::straight_rod(L, 200, a)), 1.0, rings);
    REQUIRE(mesh.size() == 1);
    CHECK(lateral_area(mesh[0], 2 * rings) == doctest::Approx(two_pi<double> * a * L).epsilon(5e-3));

    double prev = 0;
    for (Index r : {8, 16, 32, 64}) {
        const auto m = build_tube_mesh(single(oracle::straight_rod(L, 50, a)), 1.0, r);
        const double err = std::abs(lateral_area(m[0], 2 * r) - two_pi<double> * a * L);
        if (prev > 0) CHECK(err <= prev / 2 * 1.05);
        prev = err;
    }
}

TEST_CASE("tube mesh around a circle is a torus") {
    const double R = 1, a = 0.1;
    const auto sys = single(oracle::circle_rod(R, 256, a));
    const auto mesh = build_tube_mesh(sys, 1.0, 64);
    CHECK(mesh[0].area() == doctest::Approx(two_pi<double> * a * two_pi<double> * R).epsilon(1e-2));
    CHECK(mesh[0].face_count() == 2 * 256 * 64);
    mesh[0].validate();

    // eps scales the tube
    const auto thin = build_tube_mesh(sys, 0.5, 64);
    CHECK(thin[0].area() == doctest::Approx(mesh[0].area() / 2).epsilon(1e-3));

    try {
        build_tube_mesh(sys, 20.0, 16);
        FAIL("expected TubeNotEmbedded");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::TubeNotEmbedded);
    }
    CHECK_THROWS_AS(build_tube_mesh(sys, 1.0, 4), Error);
}

TEST_CASE("twisting the frame does not move a disk tube") {
    auto twisted = single(oracle::circle_rod(1, 256, 0.1, 1));
    REQUIRE(close_rods(twisted));
    const auto plain = single(oracle::circle_rod(1, 256, 0.1));
    const auto A = build_tube_mesh(twisted, 1.0, 32), B = build_tube_mesh(plain, 1.0, 32);
    const double resolution = std::max(A[0].max_edge(), B[0].max_edge());
    CHECK(oracle::hausdorff(A[0].V, B[0].V) <= resolution);
}

TEST_CASE("seed for a circle rod") {
    const auto sys = single(oracle::circle_rod(1, 128, 0.1));
    const auto S = initial_spanning_surface(sys);
    S.validate();
    CHECK(check_spanning(S, default_witnesses(sys)).spans);
    CHECK(S.area() == doctest::Approx(pi<double>).epsilon(1e-2));
    // flat: every vertex in the plane of the rod
    CHECK(S.V.col(2).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE(S.loops.size() == 1);
    CHECK(S.loops[0].vertices.size() == 128);

    SeedOptions<double> cone;
    cone.apex_lift = 0.5;
    const auto C = initial_spanning_surface(sys, cone);
    CHECK(C.area() > S.area());
    CHECK(check_spanning(C, default_witnesses(sys)).spans);

    SeedOptions<double> tube;
    tube.attachment = AttachmentKind::tube;
    const auto T = initial_spanning_surface(sys, tube);
    T.validate();
    CHECK(T.attachments[0].kind == AttachmentKind::tube);
    // boundary on the tube: distance to the midline equals the section radius
    for (Index v : T.loops[0].vertices)
        CHECK(point_polyline_distance<double>(T.vertex(v), sys.rods[0].midline()) == doctest::Approx(0.1).epsilon(1e-2));
}

TEST_CASE("Hopf seed has two fills each pierced once") {
    const auto prob = build_problem(parse_config(R"({"problem": {"preset": "hopf-pair"}})"));
    const auto S = initial_spanning_surface(prob.system, prob.seed);
    CHECK(S.loops.size() == 2);
    const auto ws = default_witnesses(prob.system);
    CHECK(validate_witnesses(ws, prob.system).valid);
    const auto rep = check_spanning(S, ws);
    CHECK(rep.spans);
    // each midline crosses the other rod's fill
    const auto mids = prob.system.midlines();
    for (int i = 0; i < 2; ++i) {
        SpanningWitnessSet<double> through;
        through.loops.push_back({mids[std::size_t(1 - i)], i});
        CHECK(check_spanning(S, through).hits[0] >= 1);
    }
}

TEST_CASE("trefoil fill self-intersects and falls back") {
    ExperimentConfig cfg = parse_config(R"({"problem": {"preset": "trefoil-sample"}})");
    auto prob = build_problem(cfg);
    prob.seed.fallback.reset();
    try {
        initial_spanning_surface(prob.system, prob.seed);
        FAIL("expected SeedFailed");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::SeedFailed);
    }
    const auto fallback = oracle::flat_disk(4, 6);
    prob.seed.fallback = fallback;
    const auto S = initial_spanning_surface(prob.system, prob.seed);
    CHECK(S.V == fallback.V);
    CHECK(S.F == fallback.F);
}

TEST_CASE("check_spanning") {
    const auto sys = single(oracle::circle_rod(1, 128, 0.1));
    const auto ws = default_witnesses(sys);
    auto disk = oracle::flat_disk(12, 6);
    CHECK(check_spanning(disk, ws).spans);
    auto far = disk;
    far.V.col(0).array() += 10;
    const auto rep = check_spanning(far, ws);
    CHECK_FALSE(rep.spans);
    CHECK(rep.hits == std::vector<int>{0});

    // small perturbations of the witness loop keep the answer
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    int agree = 0;
    for (int seed = 0; seed < 100; ++seed) {
        gen.seed(std::uint64_t(seed));
        auto pts = ws.loops[0].curve.nodes();
        for (Index k = 0; k < pts.cols(); ++k) pts.col(k) += Vec3d(u(gen), u(gen), u(gen));
        SpanningWitnessSet<double> moved;
        moved.loops.push_back({ClosedPolyline<double>(pts), 0});
        REQUIRE(validate_witnesses(moved, sys).valid);
        agree += check_spanning(disk, moved).spans && !check_spanning(far, moved).spans;
    }
    CHECK(agree == 100);
}

TEST_CASE("witness validation recomputes the linking pattern") {
    const auto sys = single(oracle::circle_rod(1, 128, 0.1));
    SpanningWitnessSet<double> ws;
    ws.loops.push_back({ClosedPolyline<double>(oracle::circle(Vec3d(5, 0, 0), Vec3d::UnitX(), Vec3d::UnitZ(), 0.5, 32)), 0});
    CHECK_FALSE(validate_witnesses(ws, sys).valid);
    ws.loops[0].curve = ClosedPolyline<double>(oracle::circle(Vec3d(1, 0, 0), Vec3d::UnitX(), Vec3d::UnitZ(), 0.05, 32));
    CHECK_FALSE(validate_witnesses(ws, sys).valid);
}

TEST_CASE("refine_and_cleanup") {
    const auto sys = single(oracle::circle_rod(1, 128, 0.1));
    const auto ws = default_witnesses(sys);
    const auto S = initial_spanning_surface(sys);

    SUBCASE("refinement to pi/64") {
        RefineOptions<double> opt;
        opt.target_edge = pi<double> / 64;
        const auto R = refine_and_cleanup(S, opt, &ws);
        CHECK(R.max_edge() <= opt.target_edge * (1 + 1e-12));
        CHECK(R.area() == doctest::Approx(S.area()).epsilon(1e-3));
        CHECK(R.face_count() > S.face_count());
        CHECK(check_spanning(R, ws).spans);
        R.validate();
    }
    SUBCASE("fine mesh is left alone") {
        RefineOptions<double> opt;
        opt.target_edge = 2 * S.max_edge();
        opt.sliver_angle = 0.5 * min_angle(S);
        const auto R = refine_and_cleanup(S, opt, &ws);
        CHECK(R.V == S.V);
        CHECK(R.F == S.F);
    }
    SUBCASE("a sliver is removed") {
        auto D = oracle::flat_disk(4, 6);
        // push an interior vertex of ring 2 almost onto a neighbouring ring-1 vertex
        const Index v = 1 + 6; // first vertex of ring 2
        const Vec3d target = D.vertex(1);
        D.V.row(v) = (target + 0.03 * (D.vertex(v) - target)).transpose();
        const double before = min_angle(D);
        RefineOptions<double> opt;
        opt.target_edge = 10;
        const auto R = refine_and_cleanup(D, opt);
        CHECK(min_angle(R) > before);
        CHECK(R.area() == doctest::Approx(D.area()).epsilon(1e-9));
    }
    SUBCASE("lost spanning is reported") {
        SpanningWitnessSet<double> elsewhere;
        elsewhere.loops.push_back(
            {ClosedPolyline<double>(oracle::circle(Vec3d(5, 0, 0), Vec3d::UnitX(), Vec3d::UnitZ(), 0.5, 32)), 0});
        RefineOptions<double> opt;
        opt.target_edge = 0.1;
        try {
            refine_and_cleanup(S, opt, &elsewhere);
            FAIL("expected SpanningLost");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::SpanningLost);
        }
    }
}
