#include "kplab/commands.hpp"

#include "kplab/io.hpp"

#include <fstream>
#include <ostream>

namespace kplab {

namespace {

namespace fs = std::filesystem;

// Creates the directory and proves it accepts files.
bool prepare_output_dir(const fs::path &dir, std::ostream &log) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        log << "error: cannot create output directory " << dir.string() << ": " << ec.message() << "\n";
        return false;
    }
    const fs::path probe = dir / ".kplab-write-probe";
    {
        std::ofstream f(probe);
        if (!f || !(f << "x")) {
            log << "error: output directory " << dir.string() << " is not writable\n";
            return false;
        }
    }
    fs::remove(probe, ec);
    return true;
}

std::string energy_lines(const EnergyComponents<double> &e, const std::string &gravity_label = "E_g") {
    return "E_el " + format_number(e.elastic) + "\n" + gravity_label + " " + format_number(e.gravity) + "\n" +
           "film_upper_bound " + format_number(e.film) + "  (upper bound for the film infimum)\n" + "total " +
           format_number(e.total()) + "\n";
}

template <class Body>
int guarded(std::ostream &log, Body &&body) {
    try {
        return body();
    } catch (const Error &e) {
        log << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError ? exit_config : exit_solver;
    } catch (const fs::filesystem_error &e) {
        log << "error: " << e.what() << "\n";
        return exit_config;
    }
}

template <class Cmd>
int from_path(const fs::path &config, const RunOverrides &ov, std::ostream &log, Cmd &&cmd) {
    ExperimentConfig cfg;
    try {
        cfg = load_with_overrides(config, ov);
    } catch (const Error &e) {
        log << "error: " << e.what() << "\n";
        return exit_config;
    }
    return cmd(cfg, log);
}

} // namespace

ExperimentConfig load_with_overrides(const fs::path &config, const RunOverrides &ov) {
    ExperimentConfig cfg = load_config(config);
    if (ov.out) cfg.output.dir = ov.out->string();
    if (ov.seed) cfg.solver.seed = *ov.seed;
    return cfg;
}

int cmd_check(const ExperimentConfig &cfg, std::ostream &log) {
    return guarded(log, [&] {
        Problem prob = build_problem(cfg);
        const auto rep = check_admissible(prob.system, cfg.problem.mode, cfg.solver.seeded_tolerances());
        std::string text = "problem " + cfg.problem.name + "\n" + rep.to_text();
        const auto wv = validate_witnesses(prob.witnesses, prob.system);
        text += "witnesses " + std::string(wv.valid ? "valid" : "invalid") +
                (wv.diagnostic.empty() ? "" : " (" + wv.diagnostic + ")") + "\n";
        log << text;
        const fs::path dir = cfg.output.dir;
        if (!prepare_output_dir(dir, log)) return int(exit_config);
        write_text(dir / cfg.output.report, text);
        return int(rep.admissible ? exit_ok : exit_infeasible);
    });
}

int cmd_minimize(const ExperimentConfig &cfg, std::ostream &log) {
    const fs::path dir = cfg.output.dir;
    if (!prepare_output_dir(dir, log)) return exit_config;
    return guarded(log, [&] {
        Problem prob = build_problem(cfg);
        const auto tol = cfg.solver.seeded_tolerances();
        const auto rep = check_admissible(prob.system, cfg.problem.mode, tol);
        if (!rep.admissible) {
            log << "seed configuration is not admissible\n" << rep.to_text();
            write_text(dir / cfg.output.report, rep.to_text());
            return int(exit_infeasible);
        }
        const auto seed = initial_spanning_surface(prob.system, prob.seed);
        log << "seed film: " << seed.vertex_count() << " vertices, " << seed.face_count() << " triangles\n";
        const auto res = alternate_minimize(prob.system, prob.models, seed, prob.witnesses, cfg.solver);

        write_text(dir / cfg.output.trace, res.trace.to_csv());
        write_mesh(dir / cfg.output.mesh, res.surface);
        for (std::size_t i = 0; i < res.system.size(); ++i)
            write_text(dir / ("rod" + std::to_string(i) + ".csv"), framed_curve_csv(res.system.rods[i].curve));

        const auto final_rep = check_admissible(res.system, cfg.problem.mode, tol);
        SpanningSurface<double> film = res.surface;
        const auto E = rod_objective(res.system, prob.models, film);
        std::string text = "problem " + cfg.problem.name + "\n" + "mode " + to_string(cfg.problem.mode) + "\n" +
                           "outer_iterations " + std::to_string(res.outer_iterations) + "\n" + energy_lines(E) +
                           "trace_monotone " + (res.trace.monotone() ? "yes" : "no") + "\n" + "integers_constant " +
                           (res.trace.integers_constant() ? "yes" : "no") + "\n" + "constraints " +
                           (final_rep.admissible ? "admissible" : "violated") + "\n" + final_rep.to_text();
        write_text(dir / cfg.output.summary, text);
        log << text;
        return int(final_rep.admissible ? exit_ok : exit_infeasible);
    });
}

int cmd_dimred(const ExperimentConfig &cfg, std::ostream &log) {
    if (cfg.problem.rods.size() != 1) {
        log << "error: dimred needs exactly one rod, got " << cfg.problem.rods.size() << "\n";
        return exit_config;
    }
    if (cfg.solver.eps_sweep.empty()) {
        log << "error: solver.eps_sweep is empty\n";
        return exit_config;
    }
    const fs::path dir = cfg.output.dir;
    if (!prepare_output_dir(dir, log)) return exit_config;
    return guarded(log, [&] {
        Problem prob = build_problem(cfg);
        const auto rep = dimred_sweep(prob.system, prob.models, cfg.solver, prob.seed);
        write_text(dir / cfg.output.sweep, rep.to_csv());
        std::string text = "problem " + cfg.problem.name + "\n" + "limit (eps -> 0)\n" +
                           energy_lines(rep.limit, "E_g_limit");
        int flagged = 0;
        for (const auto &r : rep.rows) flagged += r.flagged;
        text += "rows " + std::to_string(rep.rows.size()) + " flagged " + std::to_string(flagged) + "\n";
        text += "observed_rate " + format_number(rep.rate) + "  (slope of log|E_eps - E_0| against log eps)\n";
        write_text(dir / cfg.output.summary, text);
        log << rep.to_csv() << text;
        return int(exit_ok);
    });
}

int cmd_link(const std::vector<fs::path> &curves, std::ostream &out, std::ostream &log) {
    if (curves.empty()) {
        log << "error: no curves given\n";
        return exit_config;
    }
    std::vector<ClosedPolyline<double>> polys;
    for (const auto &p : curves) {
        try {
            polys.push_back(ClosedPolyline<double>::from_samples(parse_curve_csv(read_text(p))));
        } catch (const Error &e) {
            log << "error: " << p.string() << ": " << e.message() << "\n";
            return exit_config;
        }
    }
    return guarded(log, [&] {
        std::string text = "curve,global_radius\n";
        for (std::size_t i = 0; i < polys.size(); ++i)
            text += std::to_string(i) + "," + format_number(global_radius(polys[i])) + "\n";
        text += "i,j,link,gauss_integral\n";
        for (std::size_t i = 0; i < polys.size(); ++i)
            for (std::size_t j = i + 1; j < polys.size(); ++j) {
                const auto lk = linking_number(polys[i], polys[j]);
                text += std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(lk.value) + "," +
                        format_number(lk.raw) + "\n";
            }
        out << text;
        return int(exit_ok);
    });
}

int run_check(const fs::path &config, const RunOverrides &ov, std::ostream &log) {
    return from_path(config, ov, log, cmd_check);
}

int run_minimize(const fs::path &config, const RunOverrides &ov, std::ostream &log) {
    return from_path(config, ov, log, cmd_minimize);
}

int run_dimred(const fs::path &config, const RunOverrides &ov, std::ostream &log) {
    return from_path(config, ov, log, cmd_dimred);
}

} // namespace kplab
