#pragma once

// Film descent, constrained rod descent, the alternating outer loop and the thin-rod sweep.

#include "energy.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cstdio>
#include <sstream>

namespace kplab {

template <typename Scalar>
struct SolveConfig {
    int max_outer_iters = 20;
    int film_max_iters = 100;
    int rod_max_iters = 5;
    Scalar film_step = Scalar(0.25); // largest vertex move of the first trial film step
    Scalar rod_step = Scalar(0.5);   // largest curvature-sample change of the first trial rod step
    Scalar backtracking = Scalar(0.5);
    Scalar energy_tolerance = Scalar(1e-6); // relative decrease over one outer iteration
    Scalar armijo = Scalar(1e-4);
    Scalar fd_relative = Scalar(1e-6);
    ProblemMode mode = ProblemMode::linked;
    ConstraintTolerances<Scalar> tolerances;
    std::vector<Scalar> eps_sweep;
    std::uint64_t seed = 20240601;

    ConstraintTolerances<Scalar> seeded_tolerances() const {
        auto t = tolerances;
        t.seed = seed;
        return t;
    }

    void validate() const {
        auto fail = [](const std::string &m) { throw Error(ErrorCode::InvalidArgument, m); };
        if (max_outer_iters < 1 || film_max_iters < 1 || rod_max_iters < 0) fail("iteration counts must be positive");
        if (!(film_step > 0) || !(rod_step > 0)) fail("steps must be positive");
        if (!(backtracking > 0 && backtracking < 1)) fail("backtracking factor must lie in (0, 1)");
        if (!(energy_tolerance > 0) || !(armijo > 0) || !(fd_relative > 0)) fail("tolerances must be positive");
        if (!(tolerances.closure.position_rel > 0) || !(tolerances.closure.tangent > 0) ||
            !(tolerances.volume_slack > 0) || tolerances.volume_samples < 1)
            fail("constraint tolerances must be positive");
        for (std::size_t i = 0; i < eps_sweep.size(); ++i) {
            if (!(eps_sweep[i] > 0)) fail("eps_sweep entries must be positive");
            if (i > 0 && !(eps_sweep[i] < eps_sweep[i - 1])) fail("eps_sweep must be strictly decreasing");
        }
    }
};

template <typename Scalar>
struct TraceRecord {
    int iteration = 0;
    std::string phase; // initial | film | rod
    Scalar elastic = 0, gravity = 0, film = 0, total = 0;
    Scalar violation = 0; // largest closure defect (position / L, tangent)
    bool accepted = true;
    std::string integers; // Link integers at this state
};

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename Scalar>
struct SolveTrace {
    std::vector<TraceRecord<Scalar>> records;

    std::string to_csv() const {
        std::string out = "iteration,phase,E_el,E_g,film_upper_bound,total,max_violation,accepted,integers\n";
        for (const auto &r : records) {
            out += std::to_string(r.iteration) + "," + r.phase + "," + format_number(double(r.elastic)) + "," +
                   format_number(double(r.gravity)) + "," + format_number(double(r.film)) + "," +
                   format_number(double(r.total)) + "," + format_number(double(r.violation)) + "," +
                   (r.accepted ? "1" : "0") + "," + r.integers + "\n";
        }
        return out;
    }

    // Totals of accepted records never increase.
    bool monotone() const {
        const TraceRecord<Scalar> *prev = nullptr;
        for (const auto &r : records) {
            if (!r.accepted) continue;
            if (prev && r.total > prev->total) return false;
            prev = &r;
        }
        return true;
    }

    // Integer columns of accepted records are all equal.
    bool integers_constant() const {
        const std::string *first = nullptr;
        for (const auto &r : records) {
            if (!r.accepted) continue;
            if (first && r.integers != *first) return false;
            if (!first) first = &r.integers;
        }
        return true;
    }
};

// ---------------------------------------------------------------- film

// Gradient of sum area * F with respect to every vertex (rows).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 3> film_gradient(const AnisotropicIntegrand<Scalar> &F,
                                                      const SpanningSurface<Scalar> &S) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 3> G = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>::Zero(S.vertex_count(), 3);
    for (Index f = 0; f < S.face_count(); ++f) {
        const int i0 = S.F(f, 0), i1 = S.F(f, 1), i2 = S.F(f, 2);
        const Vec3<Scalar> p0 = S.vertex(i0), p1 = S.vertex(i1), p2 = S.vertex(i2);
        const Vec3<Scalar> a = area_vector<Scalar>(p0, p1, p2);
        const Vec3<Scalar> c = (p0 + p1 + p2) / 3;
        const Vec3<Scalar> g = F.homogeneous_gradient(c, a);
        G.row(i0) += (g.cross(p2 - p1) / 2).transpose();
        G.row(i1) += (g.cross(p0 - p2) / 2).transpose();
        G.row(i2) += (g.cross(p1 - p0) / 2).transpose();
        if (F.depends_on_position()) {
            const Scalar area = a.norm();
            const Vec3<Scalar> gx = area * F.position_gradient(c, a / area) / 3;
            G.row(i0) += gx.transpose();
            G.row(i1) += gx.transpose();
            G.row(i2) += gx.transpose();
        }
    }
    return G;
}

// Cotangent Laplacian with weights clamped to [1e-3, 1e3].
template <typename Scalar>
Eigen::SparseMatrix<Scalar> cotan_laplacian(const SpanningSurface<Scalar> &S) {
    std::map<detail::EdgeKey, Scalar> w;
    for (Index f = 0; f < S.face_count(); ++f)
        for (int k = 0; k < 3; ++k) {
            const int o = S.F(f, k), i = S.F(f, (k + 1) % 3), j = S.F(f, (k + 2) % 3);
            const Vec3<Scalar> u = S.vertex(i) - S.vertex(o), v = S.vertex(j) - S.vertex(o);
            const Scalar cr = u.cross(v).norm();
            w[detail::edge_key(i, j)] += cr > 0 ? u.dot(v) / cr / 2 : Scalar(0);
        }
    std::vector<Eigen::Triplet<Scalar>> trip;
    for (const auto &[e, val] : w) {
        const Scalar c = std::clamp(val, Scalar(1e-3), Scalar(1e3));
        trip.emplace_back(e.first, e.second, -c);
        trip.emplace_back(e.second, e.first, -c);
        trip.emplace_back(e.first, e.first, c);
        trip.emplace_back(e.second, e.second, c);
    }
    Eigen::SparseMatrix<Scalar> L(S.vertex_count(), S.vertex_count());
    L.setFromTriplets(trip.begin(), trip.end());
    return L;
}

template <typename Scalar>
struct FilmResult {
    SpanningSurface<Scalar> surface;
    Scalar energy = 0;
    int iterations = 0;
    int rollbacks = 0;
    bool converged = false;
};

// Preconditioned descent on the free vertices: the direction solves L_ff delta = -grad_f
// with the cotangent Laplacian L, then an Armijo backtracking search. Accepted steps must
// keep every witness loop intersected; failing steps are rolled back and shortened.
template <typename Scalar>
FilmResult<Scalar> film_descend(const SpanningSurface<Scalar> &S0, const AnisotropicIntegrand<Scalar> &F,
                                const SolveConfig<Scalar> &cfg, const SpanningWitnessSet<Scalar> *ws = nullptr) {
    constexpr int rollback_budget = 20;
    FilmResult<Scalar> res;
    res.surface = S0;
    auto &S = res.surface;
    Scalar E = surface_energy(F, S);
    const Scalar scale = std::max(S.scale(), std::numeric_limits<Scalar>::min());

    const auto boundary = S.boundary_mask();
    std::vector<Index> free_index(boundary.size(), -1);
    Index nfree = 0;
    for (std::size_t v = 0; v < boundary.size(); ++v)
        if (!boundary[v]) free_index[v] = nfree++;
    if (nfree == 0) {
        res.energy = E;
        res.converged = true;
        return res;
    }

    for (int it = 0; it < cfg.film_max_iters; ++it) {
        const auto G = film_gradient(F, S);
        Eigen::Matrix<Scalar, Eigen::Dynamic, 3> g(nfree, 3);
        for (std::size_t v = 0; v < boundary.size(); ++v)
            if (free_index[v] >= 0) g.row(free_index[v]) = G.row(Index(v));
        if (g.rowwise().norm().maxCoeff() <= Scalar(1e-10) * (E / scale)) {
            res.converged = true;
            break;
        }

        const auto L = cotan_laplacian(S);
        std::vector<Eigen::Triplet<Scalar>> trip;
        for (Index k = 0; k < L.outerSize(); ++k)
            for (typename Eigen::SparseMatrix<Scalar>::InnerIterator itL(L, k); itL; ++itL) {
                const Index r = free_index[std::size_t(itL.row())], c = free_index[std::size_t(itL.col())];
                if (r >= 0 && c >= 0) trip.emplace_back(r, c, itL.value());
            }
        Eigen::SparseMatrix<Scalar> Lff(nfree, nfree);
        Lff.setFromTriplets(trip.begin(), trip.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> solver(Lff);
        Eigen::Matrix<Scalar, Eigen::Dynamic, 3> delta(nfree, 3);
        bool ok = solver.info() == Eigen::Success;
        if (ok) {
            delta = -solver.solve(g);
            ok = solver.info() == Eigen::Success && delta.allFinite();
        }
        Scalar slope = ok ? (g.array() * delta.array()).sum() : Scalar(0);
        if (!ok || !(slope < 0)) {
            delta = -g;
            slope = -g.squaredNorm();
        }
        const Scalar max_move = delta.rowwise().norm().maxCoeff();
        Scalar alpha = std::min(Scalar(1), cfg.film_step / max_move);

        bool accepted = false;
        int rollbacks = 0;
        while (alpha * max_move > Scalar(1e-12) * scale) {
            SpanningSurface<Scalar> trial = S;
            for (std::size_t v = 0; v < boundary.size(); ++v)
                if (free_index[v] >= 0) trial.V.row(Index(v)) += alpha * delta.row(free_index[v]);
            Scalar Et;
            try {
                Et = surface_energy(F, trial);
            } catch (const Error &e) {
                if (e.code() != ErrorCode::DegenerateTriangle) throw;
                alpha *= cfg.backtracking;
                continue;
            }
            if (!(Et <= E + cfg.armijo * alpha * slope)) {
                alpha *= cfg.backtracking;
                continue;
            }
            if (ws && !check_spanning(trial, *ws).spans) {
                ++res.rollbacks;
                if (++rollbacks > rollback_budget)
                    throw Error(ErrorCode::SpanningLost, "film step keeps breaking a witness intersection");
                alpha *= cfg.backtracking;
                continue;
            }
            const Scalar decrease = E - Et;
            S = std::move(trial);
            E = Et;
            accepted = true;
            ++res.iterations;
            if (decrease <= Scalar(1e-12) * std::abs(E)) res.converged = true;
            break;
        }
        if (!accepted) {
            if (res.iterations == 0 && -slope > Scalar(1e-12) * std::abs(E))
                throw Error(ErrorCode::LineSearchStalled,
                            "no film step satisfies the decrease condition (slope " + format_number(double(slope)) + ")");
            res.converged = true;
        }
        if (res.converged) break;
    }
    res.energy = E;
    return res;
}

// ---------------------------------------------------------------- rods

template <typename Scalar>
VecX<Scalar> pack_curvature(const RodSystem<Scalar> &sys) {
    Index total = 0;
    for (const auto &r : sys.rods) total += r.curvature.samples.size();
    VecX<Scalar> z(total);
    Index o = 0;
    for (const auto &r : sys.rods)
        for (Index k = 0; k < r.curvature.samples.rows(); ++k)
            for (int c = 0; c < 3; ++c) z[o++] = r.curvature.samples(k, c);
    return z;
}

template <typename Scalar>
void unpack_curvature(RodSystem<Scalar> &sys, const VecX<Scalar> &z) {
    Index o = 0;
    for (auto &r : sys.rods)
        for (Index k = 0; k < r.curvature.samples.rows(); ++k)
            for (int c = 0; c < 3; ++c) r.curvature.samples(k, c) = z[o++];
}

// Rod index and (sample, component) of each packed variable.
template <typename Scalar>
std::vector<std::size_t> variable_owner(const RodSystem<Scalar> &sys) {
    std::vector<std::size_t> owner;
    for (std::size_t i = 0; i < sys.size(); ++i)
        for (Index k = 0; k < sys.rods[i].curvature.samples.size(); ++k) owner.push_back(i);
    return owner;
}

// Trapezoid weights: the L^2 inner product of curvature fields in packed coordinates.
template <typename Scalar>
VecX<Scalar> curvature_metric(const RodSystem<Scalar> &sys) {
    VecX<Scalar> m(pack_curvature(sys).size());
    Index o = 0;
    for (const auto &r : sys.rods) {
        const Index n = r.curvature.intervals();
        const Scalar h = r.curvature.spacing();
        for (Index k = 0; k <= n; ++k)
            for (int c = 0; c < 3; ++c) m[o++] = (k == 0 || k == n) ? h / 2 : h;
    }
    return m;
}

// Closure residuals per rod: x(L) - x(0) and the components of t(L) along d(0), t(0) x d(0).
// A pinned rod adds d(0).(t x d)(L), which fixes the closing angle near its current value.
template <typename Scalar>
VecX<Scalar> closure_residual(const Rod<Scalar> &rod, bool pinned = false) {
    const auto &c = rod.curve;
    const Index n = c.size() - 1;
    VecX<Scalar> r(pinned ? 6 : 5);
    r.head(3) = c.x.col(n) - c.x.col(0);
    r[3] = c.t.col(n).dot(c.d.col(0));
    r[4] = c.t.col(n).dot(c.binormal(0));
    if (pinned) r[5] = c.d.col(0).dot(c.binormal(n));
    return r;
}

// E_el + E^g_eps (eps = sys.epsilon) + F(S) with the film boundary dragged to the current frames.
template <typename Scalar>
EnergyComponents<Scalar> rod_objective(const RodSystem<Scalar> &sys, const EnergyModels<Scalar> &models,
                                       SpanningSurface<Scalar> &S) {
    S.reattach(sys);
    EnergyComponents<Scalar> e;
    e.elastic = elastic_energy(models, sys);
    e.gravity = scaled_gravitational_energy(models.mass, sys, sys.epsilon);
    e.film = S.face_count() > 0 ? surface_energy(models.integrand, S) : Scalar(0);
    return e;
}

template <typename Scalar>
std::string integer_signature(const RodSystem<Scalar> &sys, const FeasibilityReport &rep) {
    std::ostringstream os;
    for (const auto &e : rep.entries)
        if (e.id == "C3") os << "C3[" << e.rod << "]=" << int(e.measured) << ";";
    if (sys.size() > 1) {
        const auto m = linking_matrix(sys.midlines());
        for (Index a = 0; a < m.rows(); ++a)
            for (Index b = a + 1; b < m.cols(); ++b) os << "L[" << a << "," << b << "]=" << m(a, b) << ";";
    }
    return os.str();
}

template <typename Scalar>
Scalar max_violation(const RodSystem<Scalar> &sys) {
    Scalar v = 0;
    for (const auto &r : sys.rods) {
        const auto g = closure_defects(r.curve);
        v = std::max({v, g.position / r.length(), g.tangent});
    }
    return v;
}

template <typename Scalar>
struct RodStepResult {
    bool accepted = false;
    bool stationary = false;
    EnergyComponents<Scalar> before, after;
    std::string reason; // why the last trial was rejected
};

namespace detail {

template <typename Scalar>
struct ConstraintLayout {
    std::vector<bool> pinned;
    std::vector<Index> offset; // first row of each rod
    VecX<Scalar> target;       // pinned closing-angle values; zero rows otherwise
    Index rows = 0;

    ConstraintLayout(const RodSystem<Scalar> &sys, std::vector<bool> pin) : pinned(std::move(pin)) {
        for (std::size_t i = 0; i < sys.size(); ++i) {
            offset.push_back(rows);
            rows += pinned[i] ? 6 : 5;
        }
        target = VecX<Scalar>::Zero(rows);
        for (std::size_t i = 0; i < sys.size(); ++i)
            if (pinned[i]) target[offset[i] + 5] = closure_residual(sys.rods[i], true)[5];
    }

    Index size(std::size_t i) const { return pinned[i] ? 6 : 5; }

    VecX<Scalar> residual(const RodSystem<Scalar> &sys) const {
        VecX<Scalar> r(rows);
        for (std::size_t i = 0; i < sys.size(); ++i) r.segment(offset[i], size(i)) = closure_residual(sys.rods[i], pinned[i]);
        return r - target;
    }
};

template <typename Scalar>
struct RodProblem {
    const EnergyModels<Scalar> &models;
    const SolveConfig<Scalar> &cfg;
    LinkingMatrix reference_links; // linking matrix the descent must preserve
};

// Gauss-Newton restoration of the closure constraints along M^-1 C^T with the base Jacobian.
template <typename Scalar>
bool restore_closure(RodSystem<Scalar> &sys, VecX<Scalar> &z, const ConstraintLayout<Scalar> &layout,
                     const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> &C, const VecX<Scalar> &minv,
                     const Eigen::LDLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> &A,
                     const ClosureTolerance<Scalar> &tol) {
    for (int it = 0; it < 12; ++it) {
        unpack_curvature(sys, z);
        sys.refresh();
        const VecX<Scalar> r = layout.residual(sys);
        bool done = true;
        for (std::size_t i = 0; i < sys.size(); ++i) {
            const auto ri = r.segment(layout.offset[i], layout.size(i));
            done = done && ri.head(3).norm() <= Scalar(1e-3) * tol.position_rel * sys.rods[i].length() &&
                   ri.segment(3, 2).norm() <= Scalar(1e-3) * tol.tangent &&
                   (!layout.pinned[i] || std::abs(ri[5]) <= Scalar(1e-3) * tol.tangent);
        }
        if (done) return true;
        const VecX<Scalar> lambda = A.solve(r);
        z -= minv.cwiseProduct(C.transpose() * lambda);
    }
    return false;
}

// Runs the acceptance tests on a trial state. Returns an empty string on success.
template <typename Scalar>
std::string vet_trial(const RodSystem<Scalar> &base, const RodSystem<Scalar> &trial, const RodProblem<Scalar> &prob,
                      FeasibilityReport &rep) {
    for (std::size_t i = 0; i < base.size(); ++i) {
        const Scalar cap = global_radius(base.rods[i].midline()) / 8;
        const Scalar move = (trial.rods[i].curve.x - base.rods[i].curve.x).colwise().norm().maxCoeff();
        if (move > cap)
            return "rod " + std::to_string(i) + " moves " + format_number(double(move)) + " > Delta/8 = " +
                   format_number(double(cap));
    }
    rep = check_admissible(trial, prob.cfg.mode, prob.cfg.seeded_tolerances());
    if (!rep.admissible) {
        std::string ids;
        for (const auto &f : rep.failing()) ids += (ids.empty() ? "" : ",") + f;
        return "constraints " + ids + " fail";
    }
    if (trial.size() > 1 && linking_matrix(trial.midlines()) != prob.reference_links)
        return "linking matrix changed";
    return {};
}

} // namespace detail

// Gauss-Newton on the closure residuals (finite-difference Jacobian, minimum-norm
// corrections in the L^2 metric). Returns true once every rod meets 1e-3 of the tolerances.
template <typename Scalar>
bool close_rods(RodSystem<Scalar> &sys, const ClosureTolerance<Scalar> &tol = {}, int max_iters = 20,
                Scalar fd_relative = Scalar(1e-6)) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const detail::ConstraintLayout<Scalar> layout(sys, std::vector<bool>(sys.size(), false));
    const auto owner = variable_owner(sys);
    const VecX<Scalar> minv = curvature_metric(sys).cwiseInverse();
    for (int it = 0; it < max_iters; ++it) {
        VecX<Scalar> z = pack_curvature(sys);
        const Scalar h = fd_relative * std::max(Scalar(1), z.cwiseAbs().maxCoeff());
        Mat C = Mat::Zero(layout.rows, z.size());
        RodSystem<Scalar> probe = sys;
        for (Index j = 0; j < z.size(); ++j) {
            const std::size_t i = owner[std::size_t(j)];
            VecX<Scalar> res[2];
            for (int side = 0; side < 2; ++side) {
                VecX<Scalar> zp = z;
                zp[j] += side == 0 ? h : -h;
                unpack_curvature(probe, zp);
                probe.rods[i].refresh();
                res[side] = closure_residual(probe.rods[i]);
            }
            C.block(layout.offset[i], j, 5, 1) = (res[0] - res[1]) / (2 * h);
            probe.rods[i] = sys.rods[i];
        }
        const Eigen::LDLT<Mat> A(C * minv.asDiagonal() * C.transpose());
        if (detail::restore_closure(sys, z, layout, C, minv, A, tol)) return true;
    }
    return false;
}

// Applies a given curvature perturbation (restored onto the closure constraints) and
// accepts it only if the energy does not increase and every constraint still holds.
template <typename Scalar>
RodStepResult<Scalar> try_rod_step(RodSystem<Scalar> &sys, const EnergyModels<Scalar> &models,
                                   SpanningSurface<Scalar> &S, const SolveConfig<Scalar> &cfg, const VecX<Scalar> &dz) {
    RodStepResult<Scalar> res;
    res.before = rod_objective(sys, models, S);
    RodSystem<Scalar> trial = sys;
    VecX<Scalar> z = pack_curvature(sys) + dz;
    unpack_curvature(trial, z);
    trial.refresh();
    const LinkingMatrix links = sys.size() > 1 ? linking_matrix(sys.midlines()) : LinkingMatrix();
    detail::RodProblem<Scalar> prob{models, cfg, links};
    FeasibilityReport rep;
    res.reason = detail::vet_trial(sys, trial, prob, rep);
    SpanningSurface<Scalar> St = S;
    res.after = rod_objective(trial, models, St);
    if (res.reason.empty() && res.after.total() > res.before.total()) res.reason = "energy increases";
    if (!res.reason.empty()) {
        S.reattach(sys);
        return res;
    }
    sys = std::move(trial);
    S = std::move(St);
    res.accepted = true;
    return res;
}

template <typename Scalar>
struct RodDescentResult {
    int accepted_steps = 0;
    bool stationary = false;
    std::vector<RodStepResult<Scalar>> rejected; // trials rejected for constraint reasons
};

// Projected gradient descent on the curvature samples in the L^2 metric. Gradients and
// constraint Jacobians are central differences; each trial is restored onto the closure
// constraints, capped to Delta/8 midline displacement and re-checked for admissibility.
// The twist integer jumps when the closing angle crosses zero, so a rod whose trial fails
// (C3) gets its closing angle pinned and the step is recomputed.
template <typename Scalar>
RodDescentResult<Scalar> rod_descend(RodSystem<Scalar> &sys, const EnergyModels<Scalar> &models,
                                     SpanningSurface<Scalar> &S, const SolveConfig<Scalar> &cfg, int max_steps = -1) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    RodDescentResult<Scalar> out;
    const int steps = max_steps >= 0 ? max_steps : cfg.rod_max_iters;
    const LinkingMatrix links = sys.size() > 1 ? linking_matrix(sys.midlines()) : LinkingMatrix();
    detail::RodProblem<Scalar> prob{models, cfg, links};
    const auto owner = variable_owner(sys);
    const VecX<Scalar> metric = curvature_metric(sys);
    const VecX<Scalar> minv = metric.cwiseInverse();

    std::vector<bool> pinned(sys.size(), false);
    for (int step = 0; step < steps; ++step) {
        const detail::ConstraintLayout<Scalar> layout(sys, pinned);
        const VecX<Scalar> z0 = pack_curvature(sys);
        const Index P = z0.size(), m = layout.rows;
        const Scalar h = cfg.fd_relative * std::max(Scalar(1), z0.cwiseAbs().maxCoeff());
        const EnergyComponents<Scalar> E0 = rod_objective(sys, models, S);

        VecX<Scalar> g(P);
        Mat C = Mat::Zero(m, P);
        RodSystem<Scalar> probe = sys;
        SpanningSurface<Scalar> Sp = S;
        for (Index j = 0; j < P; ++j) {
            const std::size_t i = owner[std::size_t(j)];
            Scalar vals[2];
            VecX<Scalar> res[2];
            for (int side = 0; side < 2; ++side) {
                VecX<Scalar> z = z0;
                z[j] += side == 0 ? h : -h;
                unpack_curvature(probe, z);
                probe.rods[i].refresh();
                vals[side] = rod_objective(probe, models, Sp).total();
                res[side] = closure_residual(probe.rods[i], pinned[i]);
            }
            g[j] = (vals[0] - vals[1]) / (2 * h);
            C.block(layout.offset[i], j, layout.size(i), 1) = (res[0] - res[1]) / (2 * h);
            probe.rods[i] = sys.rods[i];
        }
        S.reattach(sys);

        const Mat A = C * minv.asDiagonal() * C.transpose();
        const Eigen::LDLT<Mat> Aldlt(A);
        const VecX<Scalar> mg = minv.cwiseProduct(g);
        VecX<Scalar> delta = -mg + minv.cwiseProduct(C.transpose() * Aldlt.solve(C * mg));
        const Scalar pred = -g.dot(delta);
        const Scalar total0 = E0.total();
        if (!(pred > Scalar(1e-12) * (1 + std::abs(total0))) || delta.cwiseAbs().maxCoeff() == 0) {
            out.stationary = true;
            break;
        }
        const Scalar alpha0 = cfg.rod_step / delta.cwiseAbs().maxCoeff();
        Scalar alpha = alpha0;
        bool accepted = false, repin = false;
        RodStepResult<Scalar> last;
        while (alpha >= Scalar(1e-12) * alpha0) {
            RodSystem<Scalar> trial = sys;
            VecX<Scalar> z = z0 + alpha * delta;
            if (!detail::restore_closure(trial, z, layout, C, minv, Aldlt, cfg.tolerances.closure)) {
                alpha *= cfg.backtracking;
                continue;
            }
            SpanningSurface<Scalar> St = S;
            const auto Et = rod_objective(trial, models, St);
            if (!(Et.total() <= total0 - cfg.armijo * alpha * pred)) {
                alpha *= cfg.backtracking;
                continue;
            }
            FeasibilityReport rep;
            const std::string why = detail::vet_trial(sys, trial, prob, rep);
            if (!why.empty()) {
                last.before = E0;
                last.after = Et;
                last.reason = why;
                out.rejected.push_back(last);
                for (const auto &e : rep.entries)
                    if (e.id == "C3" && !e.pass && e.rod >= 0 && !pinned[std::size_t(e.rod)])
                        pinned[std::size_t(e.rod)] = repin = true;
                if (repin) break;
                alpha *= cfg.backtracking;
                continue;
            }
            sys = std::move(trial);
            S = std::move(St);
            accepted = true;
            ++out.accepted_steps;
            break;
        }
        if (repin) {
            S.reattach(sys);
            --step;
            continue;
        }
        if (!accepted) {
            S.reattach(sys);
            if (pred <= Scalar(1e-9) * (1 + std::abs(total0))) {
                out.stationary = true;
                break;
            }
            throw Error(ErrorCode::NoFeasibleStep, "rod step underflowed below 1e-12 of its initial length" +
                                                       (last.reason.empty() ? std::string() : " (" + last.reason + ")"));
        }
        if (total0 - rod_objective(sys, models, S).total() <= cfg.energy_tolerance * Scalar(1e-3) * std::abs(total0)) {
            out.stationary = true;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------- outer loop

template <typename Scalar>
struct MinimizeResult {
    RodSystem<Scalar> system;
    SpanningSurface<Scalar> surface;
    SolveTrace<Scalar> trace;
    int outer_iterations = 0;
};

namespace detail {

template <typename Scalar>
TraceRecord<Scalar> make_record(int it, const std::string &phase, const EnergyComponents<Scalar> &e,
                                const RodSystem<Scalar> &sys, const FeasibilityReport &rep, bool accepted) {
    return {it, phase, e.elastic, e.gravity, e.film, e.total(), max_violation(sys), accepted, integer_signature(sys, rep)};
}

} // namespace detail

// Alternates film and rod descent until an outer iteration lowers the total by less than
// energy_tolerance (relative).
template <typename Scalar>
MinimizeResult<Scalar> alternate_minimize(RodSystem<Scalar> sys, const EnergyModels<Scalar> &models,
                                          SpanningSurface<Scalar> S, const SpanningWitnessSet<Scalar> &ws,
                                          const SolveConfig<Scalar> &cfg) {
    cfg.validate();
    const auto tol = cfg.seeded_tolerances();
    auto rep = check_admissible(sys, cfg.mode, tol);
    if (!rep.admissible) throw Error(ErrorCode::NoFeasibleStep, "seed is not admissible:\n" + rep.to_text());
    detail::require_spanning(S, ws);

    MinimizeResult<Scalar> out;
    auto E = rod_objective(sys, models, S);
    out.trace.records.push_back(detail::make_record(0, "initial", E, sys, rep, true));

    for (int it = 1; it <= cfg.max_outer_iters; ++it) {
        out.outer_iterations = it;
        const Scalar start = E.total();
        std::string phase = "film";
        try {
            const auto film = film_descend(S, models.integrand, cfg, &ws);
            S = film.surface;
            E = rod_objective(sys, models, S);
            out.trace.records.push_back(detail::make_record(it, "film", E, sys, rep, true));

            phase = "rod";
            const auto rod = rod_descend(sys, models, S, cfg);
            for (const auto &r : rod.rejected) {
                auto rec = detail::make_record(it, "rod", r.after, sys, rep, false);
                out.trace.records.push_back(rec);
            }
            if (rod.accepted_steps > 0) rep = check_admissible(sys, cfg.mode, tol);
            E = rod_objective(sys, models, S);
            out.trace.records.push_back(detail::make_record(it, "rod", E, sys, rep, true));
        } catch (const Error &e) {
            throw Error(e.code(), "outer iteration " + std::to_string(it) + " (" + phase + "): " + e.message());
        }
        if (start - E.total() <= cfg.energy_tolerance * std::max(std::abs(start), Scalar(1e-300))) break;
    }
    out.system = std::move(sys);
    out.surface = std::move(S);
    return out;
}

// ---------------------------------------------------------------- thin-rod sweep

template <typename Scalar>
struct SweepRow {
    Scalar eps = 0;
    bool flagged = false;
    std::string status = "ok";
    EnergyComponents<Scalar> energy;
    Scalar gravity_gap = 0; // E^g_eps - int |A| rho_0 g.x
    Scalar gap = 0;         // E_eps - E_0
};

template <typename Scalar>
struct SweepReport {
    std::vector<SweepRow<Scalar>> rows;
    EnergyComponents<Scalar> limit;
    Scalar rate = 0; // fitted slope of log |gap| against log eps

    std::string to_csv() const {
        std::string out = "eps,E_el,E_g_eps,film_upper_bound,total,gap_to_E0,gravity_gap,status\n";
        for (const auto &r : rows)
            out += format_number(double(r.eps)) + "," + format_number(double(r.energy.elastic)) + "," +
                   format_number(double(r.energy.gravity)) + "," + format_number(double(r.energy.film)) + "," +
                   format_number(double(r.energy.total())) + "," + format_number(double(r.gap)) + "," +
                   format_number(double(r.gravity_gap)) + "," + r.status + "\n";
        return out;
    }
};

template <typename Scalar>
Scalar fit_log_rate(const std::vector<Scalar> &x, const std::vector<Scalar> &y) {
    const std::size_t n = x.size();
    if (n < 2) return 0;
    Scalar mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) mx += std::log(x[i]) / Scalar(n), my += std::log(y[i]) / Scalar(n);
    Scalar sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Scalar dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxx > 0 ? sxy / sxx : Scalar(0);
}

// For each eps: film on the eps-tube (tube attachment), E_eps(w) and its gap to E_0(w)
// (film on the bare midline). Rows failing embedding or admissibility are flagged and skipped.
template <typename Scalar>
SweepReport<Scalar> dimred_sweep(const RodSystem<Scalar> &sys, const EnergyModels<Scalar> &models,
                                 const SolveConfig<Scalar> &cfg, const SeedOptions<Scalar> &seed = {}) {
    cfg.validate();
    if (sys.size() != 1) throw Error(ErrorCode::InvalidArgument, "the thin-rod sweep needs a single rod");
    if (cfg.eps_sweep.empty()) throw Error(ErrorCode::InvalidArgument, "eps_sweep is empty");
    SweepReport<Scalar> rep;

    RodSystem<Scalar> bare = sys;
    bare.epsilon = cfg.eps_sweep.back();
    {
        SeedOptions<Scalar> opt = seed;
        opt.attachment = AttachmentKind::midline;
        const auto ws = default_witnesses(bare);
        const auto film = film_descend(initial_spanning_surface(bare, opt), models.integrand, cfg, &ws);
        rep.limit = limit_energy(bare, models, film.surface, ws);
    }
    const Scalar limit_g = rep.limit.gravity;
    const Scalar delta = global_radius(sys.rods[0].midline());

    std::vector<Scalar> xs, ys;
    for (const Scalar eps : cfg.eps_sweep) {
        SweepRow<Scalar> row;
        row.eps = eps;
        RodSystem<Scalar> s = sys;
        s.epsilon = eps;
        try {
            if (!(eps * sys.rods[0].section.nu() < delta))
                throw Error(ErrorCode::TubeNotEmbedded, "eps * nu = " + format_number(double(eps * sys.rods[0].section.nu())) +
                                                            " >= Delta = " + format_number(double(delta)));
            const auto adm = check_admissible(s, ProblemMode::reduced, cfg.seeded_tolerances());
            if (!adm.admissible) throw Error(ErrorCode::NoFeasibleStep, "not admissible at this eps");
            SeedOptions<Scalar> opt = seed;
            opt.attachment = AttachmentKind::tube;
            const auto ws = default_witnesses(s);
            const auto film = film_descend(initial_spanning_surface(s, opt), models.integrand, cfg, &ws);
            row.energy = total_energy_eps(s, models, film.surface, eps, ws);
            row.gravity_gap = row.energy.gravity - limit_g;
            row.gap = row.energy.total() - rep.limit.total();
            if (row.gap != 0) {
                xs.push_back(eps);
                ys.push_back(std::abs(row.gap));
            }
        } catch (const Error &e) {
            row.flagged = true;
            row.status = to_string(e.code());
        }
        rep.rows.push_back(row);
    }
    rep.rate = fit_log_rate(xs, ys);
    return rep;
}

} // namespace kplab
