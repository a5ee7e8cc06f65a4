#include "oracles.hpp"

#include "kplab/commands.hpp"
#include "kplab/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace kplab;
using oracle::Vec3d;
namespace fs = std::filesystem;

namespace {

const fs::path source_dir = KPLAB_SOURCE_DIR;

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string &name) : dir(fs::temp_directory_path() / ("kplab-cli-" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    fs::path write(const std::string &name, const std::string &text) const {
        write_text(dir / name, text);
        return dir / name;
    }
};

struct Run {
    int code = -1;
    std::string output;
};

Run run_cli(const std::string &args, const Scratch &tmp) {
    const fs::path log = tmp.dir / "cli.log";
    const std::string cmd = std::string(KPLAB_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.output = read_text(log);
    return r;
}

bool contains(const std::string &hay, const std::string &needle) { return hay.find(needle) != std::string::npos; }

std::string config_error(const std::string &text) {
    try {
        parse_config(text);
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::ConfigError);
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("check on the circle config") {
    Scratch tmp("check");
    const auto r = run_cli("check --config " + (source_dir / "configs/circle.json").string() + " --out " +
                               (tmp.dir / "out").string(),
                           tmp);
    INFO(r.output);
    CHECK(r.code == exit_ok);
    const std::string report = read_text(tmp.dir / "out/report.txt");
    CHECK(contains(report, "admissible yes"));
    for (const char *id : {"C1", "C2", "C3", "C4", "C5"}) CHECK(contains(report, std::string(id) + " rod=0"));
}

TEST_CASE("check reports an infeasible radius floor") {
    Scratch tmp("infeasible");
    const auto cfg = tmp.write("big.json", R"({"problem": {"preset": "circle", "delta0": 5}})");
    const auto r = run_cli("check --config " + cfg.string() + " --out " + (tmp.dir / "out").string(), tmp);
    INFO(r.output);
    CHECK(r.code == exit_infeasible);
    CHECK(contains(r.output, "C5 rod=0 other=-1 status=FAIL"));
    CHECK(contains(r.output, "admissible no"));
}

TEST_CASE("configuration errors exit with 1 and name the problem") {
    Scratch tmp("config");
    SUBCASE("syntax error names the line") {
        const auto cfg = tmp.write("syn.json", "{\"problem\":\n {\"preset\": \"circle\",}}");
        const auto r = run_cli("check --config " + cfg.string(), tmp);
        CHECK(r.code == exit_config);
        CHECK(contains(r.output, "line 2"));
    }
    SUBCASE("wrong type names the field path") {
        const auto cfg = tmp.write("bad.json", R"({"problem": {"preset": "circle", "delta0": "x"}})");
        const auto r = run_cli("minimize --config " + cfg.string(), tmp);
        CHECK(r.code == exit_config);
        CHECK(contains(r.output, "problem.delta0"));
    }
    SUBCASE("missing file") {
        const auto r = run_cli("check --config " + (tmp.dir / "nope.json").string(), tmp);
        CHECK(r.code == exit_config);
    }
    SUBCASE("missing option") {
        CHECK(run_cli("check", tmp).code == exit_config);
    }
    SUBCASE("output directory cannot be created") {
        tmp.write("file", "x");
        const auto r = run_cli("check --config " + (source_dir / "configs/circle.json").string() + " --out " +
                                   (tmp.dir / "file/sub").string(),
                               tmp);
        CHECK(r.code == exit_config);
        CHECK(contains(r.output, "output directory"));
    }
}

TEST_CASE("parser rejects bad content") {
    CHECK(contains(config_error(R"({"problem": {"preset": "circle", "bogus": 1}})"), "problem.bogus"));
    CHECK(contains(config_error(R"({"problem": {"preset": "circle"}, "extra": {}})"), "extra"));
    CHECK(contains(config_error(R"({"problem": {"preset": "circle", "rods": []}})"), "problem.rods"));
    CHECK(contains(config_error(R"({"problem": {"preset": "square"}})"), "problem.preset"));
    CHECK(contains(config_error(R"({"problem": {"rods": [{"length": 1, "curvature": {"kind": "spline"}}]}})"),
                   "problem.rods[0].curvature.kind"));
    CHECK(contains(config_error(R"({"problem": {"preset": "circle"}, "solver": {"seed": -3}})"), "solver.seed"));
    CHECK(contains(config_error(R"({"problem": {"preset": "hopf-pair", "linking": [[0, 1], [1]]}})"),
                   "problem.linking[1]"));
    CHECK(contains(config_error(R"({"solver": {}})"), "problem"));
}

TEST_CASE("configs survive a serialize and parse round trip") {
    for (const auto &name : preset_names()) {
        CAPTURE(name);
        const auto cfg = parse_config(R"({"problem": {"preset": ")" + name + R"("}})");
        const std::string once = serialize_config(cfg);
        const auto back = parse_config(once);
        CHECK(serialize_config(back) == once);
        const auto a = build_problem(cfg), b = build_problem(back);
        REQUIRE(a.system.size() == b.system.size());
        for (std::size_t i = 0; i < a.system.size(); ++i)
            CHECK(a.system.rods[i].curve.x == b.system.rods[i].curve.x);
    }
    for (const auto &file : {"circle.json", "hopf-pair.json", "trefoil-sample.json"}) {
        CAPTURE(file);
        CHECK_NOTHROW(load_config(source_dir / "configs" / file));
    }
}

TEST_CASE("command line overrides") {
    RunOverrides ov;
    ov.out = "elsewhere";
    ov.seed = 77;
    const auto cfg = load_with_overrides(source_dir / "configs/circle.json", ov);
    CHECK(cfg.output.dir == "elsewhere");
    CHECK(cfg.solver.seed == 77u);
}

TEST_CASE("minimize writes its outputs") {
    Scratch tmp("minimize");
    const auto cfg = tmp.write("min.json", R"({"problem": {"preset": "circle"},
        "solver": {"max_outer_iters": 2, "rod_max_iters": 1, "film_max_iters": 20}})");
    const auto r = run_cli("minimize --config " + cfg.string() + " --out " + (tmp.dir / "out").string(), tmp);
    INFO(r.output);
    CHECK(r.code == exit_ok);
    for (const char *f : {"trace.csv", "film.obj", "film.attach.json", "summary.txt", "rod0.csv"})
        CHECK(fs::exists(tmp.dir / "out" / f));
    const std::string summary = read_text(tmp.dir / "out/summary.txt");
    CHECK(contains(summary, "trace_monotone yes"));
    CHECK(contains(summary, "integers_constant yes"));
    CHECK(contains(summary, "upper bound"));
    const auto film = read_mesh(tmp.dir / "out/film.obj");
    film.validate();
    CHECK(film.loops.size() == 1);
}

TEST_CASE("dimred flags rows it cannot evaluate") {
    Scratch tmp("dimred");
    const auto cfg = tmp.write("dr.json", R"({"problem": {"preset": "circle"},
        "solver": {"eps_sweep": [8, 0.1], "film_max_iters": 20}})");
    const auto r = run_cli("dimred --config " + cfg.string() + " --out " + (tmp.dir / "out").string(), tmp);
    INFO(r.output);
    CHECK(r.code == exit_ok);
    std::istringstream csv(read_text(tmp.dir / "out/sweep.csv"));
    std::string header, first, second;
    std::getline(csv, header);
    std::getline(csv, first);
    std::getline(csv, second);
    CHECK(contains(header, "status"));
    CHECK(contains(first, "TubeNotEmbedded"));
    CHECK(contains(second, ",ok"));
    CHECK(contains(read_text(tmp.dir / "out/summary.txt"), "rows 2 flagged 1"));

    const auto empty = tmp.write("empty.json", R"({"problem": {"preset": "circle"}, "solver": {"eps_sweep": []}})");
    CHECK(run_cli("dimred --config " + empty.string() + " --out " + (tmp.dir / "out2").string(), tmp).code ==
          exit_config);
    const auto two = tmp.write("two.json", R"({"problem": {"preset": "hopf-pair"}})");
    CHECK(run_cli("dimred --config " + two.string() + " --out " + (tmp.dir / "out3").string(), tmp).code ==
          exit_config);
}

TEST_CASE("link reads curve files") {
    Scratch tmp("link");
    const auto a = tmp.write("a.csv", curve_csv(oracle::circle(Vec3d::Zero(), Vec3d::UnitX(), Vec3d::UnitY(), 1, 200)));
    const auto b = tmp.write("b.csv", curve_csv(oracle::circle(Vec3d(1, 0, 0), Vec3d::UnitX(), Vec3d::UnitZ(), 1, 200)));
    const auto c = tmp.write("c.csv", curve_csv(oracle::circle(Vec3d(10, 0, 0), Vec3d::UnitX(), Vec3d::UnitY(), 1, 200)));
    const auto r = run_cli("link --curve " + a.string() + " --curve " + b.string() + " --curve " + c.string(), tmp);
    INFO(r.output);
    CHECK(r.code == exit_ok);
    std::istringstream out(r.output);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(out, line)) lines.push_back(line);
    REQUIRE(lines.size() == 8);
    CHECK(lines[0] == "curve,global_radius");
    CHECK(lines[4] == "i,j,link,gauss_integral");
    CHECK((contains(lines[5], "0,1,1,") || contains(lines[5], "0,1,-1,")));
    CHECK(contains(lines[6], "0,2,0,"));
    CHECK(contains(lines[7], "1,2,0,"));

    const auto junk = tmp.write("junk.csv", "x,y,z\n1,2\n");
    CHECK(run_cli("link --curve " + junk.string(), tmp).code == exit_config);
}

TEST_CASE("trefoil midline and fill survive file round trips") {
    auto prob = build_problem(parse_config(R"({"problem": {"preset": "trefoil-sample"}})"));
    const auto mid = prob.system.rods[0].midline();
    const auto pts = parse_curve_csv(curve_csv(mid.nodes()));
    CHECK((pts - mid.nodes()).cwiseAbs().maxCoeff() <= 1e-12 * mid.nodes().cwiseAbs().maxCoeff());
    CHECK(global_radius(ClosedPolyline<double>(pts)) == doctest::Approx(global_radius(mid)).epsilon(1e-9));

    const auto disk = initial_spanning_surface(build_problem(parse_config(R"({"problem": {"preset": "circle"}})")).system);
    const auto back = parse_mesh(mesh_obj(disk), mesh_sidecar(disk));
    CHECK(back.F == disk.F);
    CHECK((back.V - disk.V).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE(back.loops.size() == disk.loops.size());
    CHECK(back.loops[0].vertices == disk.loops[0].vertices);
    CHECK(back.area() == doctest::Approx(disk.area()).epsilon(1e-12));
}
