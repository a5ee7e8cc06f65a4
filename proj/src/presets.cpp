#include "kplab/config.hpp"

#include <map>
#include <mutex>

namespace kplab {

namespace {

int measured_twist(const Rod<double> &rod) {
    return int(twist_linking(rod, default_tau(rod, midline_global_radius(rod))).value);
}

std::vector<Vec3d> curvature_rows(const CurvatureField<double> &w) {
    std::vector<Vec3d> rows;
    for (Index k = 0; k <= w.intervals(); ++k) rows.push_back(w.samples.row(k).transpose());
    return rows;
}

ProblemSpec circle() {
    ProblemSpec p;
    p.name = "circle";
    p.mode = ProblemMode::reduced;
    RodSpec r;
    r.length = two_pi<double>;
    r.intervals = 128;
    r.curvature.value = Vec3d(1, 0, 0);
    r.origin = Vec3d(1, 0, 0);
    r.tangent = Vec3d(0, 1, 0);
    r.director = Vec3d(-1, 0, 0);
    SectionPieceSpec hex;
    hex.polygon = true;
    for (int k = 0; k < 6; ++k)
        hex.vertices.emplace_back(0.2 * std::cos(k * pi<double> / 3), 0.05 + 0.2 * std::sin(k * pi<double> / 3));
    r.section = {0.1, 0.25, {hex}};
    r.twist = measured_twist(build_rod(r));
    p.rods = {r};
    p.mass.rho = 0.1;
    p.delta0 = 0.5;
    p.epsilon = 0.1;
    p.film.attachment = AttachmentKind::midline;
    p.film.apex_lift = 0.5;
    return p;
}

ProblemSpec hopf_pair() {
    ProblemSpec p;
    p.name = "hopf-pair";
    p.mode = ProblemMode::linked;
    RodSpec a;
    a.length = two_pi<double>;
    a.intervals = 128;
    a.curvature.value = Vec3d(1, 0, 0);
    a.section = {0.1, 0.1, {SectionPieceSpec{0, false, 0.1, {}}}};
    RodSpec b = a;
    a.origin = Vec3d(-1, 0, 0);
    a.tangent = Vec3d(0, -1, 0);
    a.director = Vec3d(1, 0, 0);
    b.origin = Vec3d(2, 0, 0);
    b.tangent = Vec3d(0, 0, 1);
    b.director = Vec3d(-1, 0, 0);
    const Rod<double> ra = build_rod(a), rb = build_rod(b);
    a.twist = measured_twist(ra);
    b.twist = measured_twist(rb);
    p.rods = {a, b};
    const auto lk = linking_matrix(std::vector<ClosedPolyline<double>>{ra.midline(), rb.midline()});
    p.linking = {{lk(0, 0), lk(0, 1)}, {lk(1, 0), lk(1, 1)}};
    p.mass.rho = 0.1;
    p.epsilon = 1;
    p.film.attachment = AttachmentKind::tube;
    return p;
}

// (2 + cos 3u)(cos 2u, sin 2u) + sin 3u e3 and its first three u-derivatives.
std::array<Vec3d, 4> trefoil_jet(double u) {
    const double c2 = std::cos(2 * u), s2 = std::sin(2 * u), c3 = std::cos(3 * u), s3 = std::sin(3 * u);
    const double r = 2 + c3, r1 = -3 * s3, r2 = -9 * c3, r3 = 27 * s3;
    return {Vec3d(r * c2, r * s2, s3),
            Vec3d(r1 * c2 - 2 * r * s2, r1 * s2 + 2 * r * c2, 3 * c3),
            Vec3d(r2 * c2 - 4 * r1 * s2 - 4 * r * c2, r2 * s2 + 4 * r1 * c2 - 4 * r * s2, -9 * s3),
            Vec3d(r3 * c2 - 6 * r2 * s2 - 12 * r1 * c2 + 8 * r * s2, r3 * s2 + 6 * r2 * c2 - 12 * r1 * s2 - 8 * r * c2,
                  -27 * c3)};
}

ProblemSpec trefoil_sample() {
    constexpr int n = 256, fine = 20000;
    // arclength table of the parametrization (trapezoid on a fine grid)
    std::vector<double> u(fine + 1), s(fine + 1, 0.0);
    for (int k = 0; k <= fine; ++k) u[std::size_t(k)] = two_pi<double> * k / fine;
    for (int k = 1; k <= fine; ++k) {
        const double a = trefoil_jet(u[std::size_t(k - 1)])[1].norm(), b = trefoil_jet(u[std::size_t(k)])[1].norm();
        s[std::size_t(k)] = s[std::size_t(k - 1)] + (u[std::size_t(k)] - u[std::size_t(k - 1)]) * (a + b) / 2;
    }
    const double L = s.back();
    auto u_of = [&](double sk) {
        const auto it = std::lower_bound(s.begin(), s.end(), sk);
        const std::size_t k = std::clamp<std::size_t>(std::size_t(it - s.begin()), 1, s.size() - 1);
        const double f = (sk - s[k - 1]) / (s[k] - s[k - 1]);
        return u[k - 1] + f * (u[k] - u[k - 1]);
    };

    RodSpec r;
    r.length = L;
    r.intervals = n;
    r.curvature.table = true;
    for (int k = 0; k <= n; ++k) {
        const auto j = trefoil_jet(u_of(L * k / n));
        const Vec3d c = j[1].cross(j[2]);
        const double speed = j[1].norm();
        r.curvature.samples.emplace_back(c.norm() / (speed * speed * speed), 0.0, c.dot(j[3]) / c.squaredNorm());
    }
    const auto j0 = trefoil_jet(0);
    r.origin = j0[0];
    r.tangent = j0[1].normalized();
    r.director = (j0[2] - j0[2].dot(r.tangent) * r.tangent).normalized();
    r.section = {0.1, 0.1, {SectionPieceSpec{0, false, 0.1, {}}}};
    r.reference = "trefoil";
    for (int k = 0; k < n; ++k) r.reference_points.push_back(trefoil_jet(two_pi<double> * k / n)[0]);

    RodSystem<double> sys;
    sys.rods.push_back(build_rod(r));
    if (!close_rods(sys)) throw Error(ErrorCode::NotClosed, "trefoil preset did not close");
    Rod<double> &rod = sys.rods[0];
    r.curvature.samples = curvature_rows(rod.curvature);

    const double radius = std::min(0.1, midline_global_radius(rod) / 4);
    r.section = {radius, radius, {SectionPieceSpec{0, false, radius, {}}}};
    r.twist = measured_twist(build_rod(r));

    ProblemSpec p;
    p.name = "trefoil-sample";
    p.mode = ProblemMode::reduced;
    p.rods = {r};
    p.mass.rho = 0.1;
    p.epsilon = 1;
    p.film.attachment = AttachmentKind::midline;
    return p;
}

} // namespace

std::vector<std::string> preset_names() { return {"circle", "trefoil-sample", "hopf-pair"}; }

ProblemSpec preset_problem(const std::string &name) {
    static std::mutex lock;
    static std::map<std::string, ProblemSpec> cache;
    const std::lock_guard guard(lock);
    if (auto it = cache.find(name); it != cache.end()) return it->second;
    ProblemSpec p;
    if (name == "circle") p = circle();
    else if (name == "trefoil-sample") p = trefoil_sample();
    else if (name == "hopf-pair") p = hopf_pair();
    else throw Error(ErrorCode::ConfigError, "unknown preset \"" + name + "\"");
    cache.emplace(name, p);
    return p;
}

} // namespace kplab
