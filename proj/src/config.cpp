#include "kplab/config.hpp"

#include "kplab/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace kplab {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string &path, const std::string &msg) {
    throw Error(ErrorCode::ConfigError, path + ": " + msg);
}

// Read-only view of a JSON object that remembers its field path and rejects unknown keys.
class Reader {
public:
    Reader(const json &j, std::string path, std::set<std::string> allowed) : m_j(j), m_path(std::move(path)) {
        if (!j.is_object()) fail(m_path, "expected an object");
        for (const auto &[key, value] : j.items())
            if (!allowed.count(key)) fail(child(key), "unknown field");
    }

    bool has(const std::string &key) const { return m_j.contains(key); }
    const json &at(const std::string &key) const { return m_j.at(key); }
    std::string child(const std::string &key) const { return m_path.empty() ? key : m_path + "." + key; }

    double number(const std::string &key, double fallback) const {
        if (!has(key)) return fallback;
        return as_number(at(key), child(key));
    }
    int integer(const std::string &key, int fallback) const {
        if (!has(key)) return fallback;
        const auto &v = at(key);
        if (!v.is_number_integer()) fail(child(key), "expected an integer");
        return v.get<int>();
    }
    bool boolean(const std::string &key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!at(key).is_boolean()) fail(child(key), "expected true or false");
        return at(key).get<bool>();
    }
    std::string string(const std::string &key, const std::string &fallback) const {
        if (!has(key)) return fallback;
        if (!at(key).is_string()) fail(child(key), "expected a string");
        return at(key).get<std::string>();
    }
    Vec3d vec3(const std::string &key, const Vec3d &fallback) const {
        return has(key) ? as_vec3(at(key), child(key)) : fallback;
    }
    std::vector<double> numbers(const std::string &key, const std::vector<double> &fallback) const {
        if (!has(key)) return fallback;
        const auto &v = at(key);
        if (!v.is_array()) fail(child(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], indexed(child(key), i)));
        return out;
    }
    std::vector<Vec3d> vec3_list(const std::string &key, const std::vector<Vec3d> &fallback) const {
        if (!has(key)) return fallback;
        const auto &v = at(key);
        if (!v.is_array()) fail(child(key), "expected an array of 3-vectors");
        std::vector<Vec3d> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_vec3(v[i], indexed(child(key), i)));
        return out;
    }

    static std::string indexed(const std::string &path, std::size_t i) {
        return path + "[" + std::to_string(i) + "]";
    }
    static double as_number(const json &v, const std::string &path) {
        if (!v.is_number()) fail(path, "expected a number");
        return v.get<double>();
    }
    static Vec3d as_vec3(const json &v, const std::string &path) {
        if (!v.is_array() || v.size() != 3) fail(path, "expected an array of 3 numbers");
        return {as_number(v[0], indexed(path, 0)), as_number(v[1], indexed(path, 1)), as_number(v[2], indexed(path, 2))};
    }
    static Vec2d as_vec2(const json &v, const std::string &path) {
        if (!v.is_array() || v.size() != 2) fail(path, "expected an array of 2 numbers");
        return {as_number(v[0], indexed(path, 0)), as_number(v[1], indexed(path, 1))};
    }

private:
    const json &m_j;
    std::string m_path;
};

const json &array_at(const Reader &r, const std::string &key) {
    const auto &v = r.at(key);
    if (!v.is_array()) fail(r.child(key), "expected an array");
    return v;
}

CurvatureSpec read_curvature(const json &j, const std::string &path, const CurvatureSpec &base) {
    Reader r(j, path, {"kind", "value", "samples"});
    CurvatureSpec c = base;
    const std::string kind = r.string("kind", base.table ? "table" : "constant");
    if (kind == "constant") {
        c.table = false;
        c.value = r.vec3("value", base.value);
        c.samples.clear();
    } else if (kind == "table") {
        c.table = true;
        c.samples = r.vec3_list("samples", base.samples);
        if (c.samples.empty()) fail(r.child("samples"), "table curvature needs samples");
    } else {
        fail(r.child("kind"), "expected \"constant\" or \"table\"");
    }
    return c;
}

SectionSpec read_section(const json &j, const std::string &path, const SectionSpec &base) {
    Reader r(j, path, {"eta", "nu", "pieces"});
    SectionSpec s = base;
    s.eta = r.number("eta", base.eta);
    s.nu = r.number("nu", base.nu);
    if (r.has("pieces")) {
        const auto &arr = array_at(r, "pieces");
        s.pieces.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string pp = Reader::indexed(r.child("pieces"), i);
            Reader pr(arr[i], pp, {"start", "kind", "radius", "vertices"});
            SectionPieceSpec piece;
            piece.start = pr.number("start", 0);
            const std::string kind = pr.string("kind", "disk");
            if (kind == "disk") {
                piece.radius = pr.number("radius", s.nu);
            } else if (kind == "polygon") {
                piece.polygon = true;
                if (!pr.has("vertices") || !pr.at("vertices").is_array())
                    fail(pr.child("vertices"), "polygon needs an array of vertices");
                const auto &vs = pr.at("vertices");
                for (std::size_t k = 0; k < vs.size(); ++k)
                    piece.vertices.push_back(Reader::as_vec2(vs[k], Reader::indexed(pr.child("vertices"), k)));
            } else {
                fail(pr.child("kind"), "expected \"disk\" or \"polygon\"");
            }
            s.pieces.push_back(std::move(piece));
        }
        if (s.pieces.empty()) fail(r.child("pieces"), "need at least one piece");
    }
    return s;
}

RodSpec read_rod(const json &j, const std::string &path, const RodSpec &base) {
    Reader r(j, path,
             {"length", "intervals", "curvature", "origin", "tangent", "director", "section", "twist", "reference",
              "isotopy_declared", "reference_points"});
    RodSpec rod = base;
    rod.length = r.number("length", base.length);
    rod.intervals = r.integer("intervals", base.intervals);
    if (r.has("curvature")) rod.curvature = read_curvature(r.at("curvature"), r.child("curvature"), base.curvature);
    rod.origin = r.vec3("origin", base.origin);
    rod.tangent = r.vec3("tangent", base.tangent);
    rod.director = r.vec3("director", base.director);
    if (r.has("section")) rod.section = read_section(r.at("section"), r.child("section"), base.section);
    rod.twist = r.integer("twist", base.twist);
    rod.reference = r.string("reference", base.reference);
    rod.isotopy_declared = r.boolean("isotopy_declared", base.isotopy_declared);
    rod.reference_points = r.vec3_list("reference_points", base.reference_points);
    return rod;
}

MassSpec read_mass(const json &j, const std::string &path, const MassSpec &base) {
    Reader r(j, path, {"kind", "rho", "axial", "section", "gravity"});
    MassSpec m = base;
    const std::string kind = r.string("kind", base.separable ? "separable" : "constant");
    if (kind != "constant" && kind != "separable") fail(r.child("kind"), "expected \"constant\" or \"separable\"");
    m.separable = kind == "separable";
    m.rho = r.number("rho", base.rho);
    m.axial = r.numbers("axial", base.axial);
    m.section = r.numbers("section", base.section);
    if (m.section.size() > 3) fail(r.child("section"), "at most 3 coefficients (c0, c1, c2)");
    m.gravity = r.vec3("gravity", base.gravity);
    return m;
}

IntegrandSpec read_integrand(const json &j, const std::string &path, const IntegrandSpec &base) {
    Reader r(j, path, {"kind", "value", "matrix", "n_polar", "n_azimuth", "values"});
    IntegrandSpec f = base;
    const std::string kind = r.string("kind", to_string(base.kind));
    if (kind == "constant") f.kind = IntegrandKind::constant;
    else if (kind == "matrix_norm") f.kind = IntegrandKind::matrix_norm;
    else if (kind == "table") f.kind = IntegrandKind::table;
    else fail(r.child("kind"), "expected \"constant\", \"matrix_norm\" or \"table\"");
    f.value = r.number("value", base.value);
    if (r.has("matrix")) {
        const auto &m = r.at("matrix");
        if (!m.is_array() || m.size() != 3) fail(r.child("matrix"), "expected 3 rows of 3 numbers");
        for (std::size_t i = 0; i < 3; ++i)
            f.matrix.row(Index(i)) = Reader::as_vec3(m[i], Reader::indexed(r.child("matrix"), i)).transpose();
    }
    f.n_polar = r.integer("n_polar", base.n_polar);
    f.n_azimuth = r.integer("n_azimuth", base.n_azimuth);
    f.values = r.numbers("values", base.values);
    return f;
}

FilmSpec read_film(const json &j, const std::string &path, const FilmSpec &base) {
    Reader r(j, path, {"attachment", "theta", "apex_lift", "rings", "seed_mesh"});
    FilmSpec f = base;
    const std::string kind = r.string("attachment", to_string(base.attachment));
    if (kind == "midline") f.attachment = AttachmentKind::midline;
    else if (kind == "tube") f.attachment = AttachmentKind::tube;
    else fail(r.child("attachment"), "expected \"midline\" or \"tube\"");
    f.theta = r.number("theta", base.theta);
    f.apex_lift = r.number("apex_lift", base.apex_lift);
    f.rings = r.integer("rings", base.rings);
    f.seed_mesh = r.string("seed_mesh", base.seed_mesh);
    return f;
}

ProblemSpec read_problem(const json &j) {
    Reader r(j, "problem",
             {"preset", "name", "mode", "rods", "stiffness", "intrinsic", "mass", "integrand", "linking", "delta0",
              "epsilon", "film", "witnesses"});
    ProblemSpec p;
    if (r.has("preset")) {
        if (r.has("rods")) fail(r.child("rods"), "cannot be combined with a preset");
        const std::string name = r.string("preset", "");
        try {
            p = preset_problem(name);
        } catch (const Error &e) {
            fail(r.child("preset"), e.message());
        }
    }
    p.name = r.string("name", p.name);
    const std::string mode = r.string("mode", to_string(p.mode));
    if (mode == "linked") p.mode = ProblemMode::linked;
    else if (mode == "reduced") p.mode = ProblemMode::reduced;
    else fail(r.child("mode"), "expected \"linked\" or \"reduced\"");

    if (r.has("rods")) {
        const auto &arr = array_at(r, "rods");
        p.rods.clear();
        for (std::size_t i = 0; i < arr.size(); ++i)
            p.rods.push_back(read_rod(arr[i], Reader::indexed(r.child("rods"), i), RodSpec{}));
    }
    if (p.rods.empty()) fail(r.child("rods"), "at least one rod is required (or use a preset)");

    p.stiffness = r.vec3_list("stiffness", p.stiffness);
    p.intrinsic = r.vec3_list("intrinsic", p.intrinsic);
    if (p.stiffness.empty()) fail(r.child("stiffness"), "need at least one entry");
    if (p.intrinsic.empty()) fail(r.child("intrinsic"), "need at least one entry");
    if (r.has("mass")) p.mass = read_mass(r.at("mass"), r.child("mass"), p.mass);
    if (r.has("integrand")) p.integrand = read_integrand(r.at("integrand"), r.child("integrand"), p.integrand);
    if (r.has("linking")) {
        const auto &m = array_at(r, "linking");
        p.linking.clear();
        for (std::size_t i = 0; i < m.size(); ++i) {
            const std::string rp = Reader::indexed(r.child("linking"), i);
            if (!m[i].is_array() || m[i].size() != m.size()) fail(rp, "linking matrix must be square");
            std::vector<int> row;
            for (std::size_t k = 0; k < m[i].size(); ++k) {
                if (!m[i][k].is_number_integer()) fail(Reader::indexed(rp, k), "expected an integer");
                row.push_back(m[i][k].get<int>());
            }
            p.linking.push_back(std::move(row));
        }
    }
    p.delta0 = r.number("delta0", p.delta0);
    p.epsilon = r.number("epsilon", p.epsilon);
    if (r.has("film")) p.film = read_film(r.at("film"), r.child("film"), p.film);
    if (r.has("witnesses")) {
        const auto &arr = array_at(r, "witnesses");
        p.witnesses.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string wp = Reader::indexed(r.child("witnesses"), i);
            Reader wr(arr[i], wp, {"target", "points"});
            WitnessSpec w;
            w.target = wr.integer("target", 0);
            w.points = wr.vec3_list("points", {});
            if (w.points.size() < std::size_t(ClosedPolyline<double>::min_nodes))
                fail(wr.child("points"), "a witness loop needs at least " +
                                             std::to_string(ClosedPolyline<double>::min_nodes) + " points");
            p.witnesses.push_back(std::move(w));
        }
    }
    return p;
}

SolveConfig<double> read_solver(const json &j) {
    Reader r(j, "solver",
             {"max_outer_iters", "film_max_iters", "rod_max_iters", "film_step", "rod_step", "backtracking",
              "energy_tolerance", "armijo", "fd_relative", "eps_sweep", "seed", "closure_position_rel",
              "closure_tangent", "volume_slack", "volume_samples"});
    SolveConfig<double> s;
    s.eps_sweep = {0.1, 0.05, 0.025};
    s.max_outer_iters = r.integer("max_outer_iters", s.max_outer_iters);
    s.film_max_iters = r.integer("film_max_iters", s.film_max_iters);
    s.rod_max_iters = r.integer("rod_max_iters", s.rod_max_iters);
    s.film_step = r.number("film_step", s.film_step);
    s.rod_step = r.number("rod_step", s.rod_step);
    s.backtracking = r.number("backtracking", s.backtracking);
    s.energy_tolerance = r.number("energy_tolerance", s.energy_tolerance);
    s.armijo = r.number("armijo", s.armijo);
    s.fd_relative = r.number("fd_relative", s.fd_relative);
    s.eps_sweep = r.numbers("eps_sweep", s.eps_sweep);
    if (r.has("seed")) {
        const auto &v = r.at("seed");
        if (!v.is_number_unsigned()) fail(r.child("seed"), "expected a nonnegative integer");
        s.seed = v.get<std::uint64_t>();
    }
    s.tolerances.closure.position_rel = r.number("closure_position_rel", s.tolerances.closure.position_rel);
    s.tolerances.closure.tangent = r.number("closure_tangent", s.tolerances.closure.tangent);
    s.tolerances.volume_slack = r.number("volume_slack", s.tolerances.volume_slack);
    const int samples = r.integer("volume_samples", int(s.tolerances.volume_samples));
    if (samples < 1) fail(r.child("volume_samples"), "must be positive");
    s.tolerances.volume_samples = samples;
    try {
        s.validate();
    } catch (const Error &e) {
        fail("solver", e.message());
    }
    return s;
}

OutputSpec read_output(const json &j) {
    Reader r(j, "output", {"dir", "trace", "mesh", "summary", "report", "sweep"});
    OutputSpec o;
    o.dir = r.string("dir", o.dir);
    o.trace = r.string("trace", o.trace);
    o.mesh = r.string("mesh", o.mesh);
    o.summary = r.string("summary", o.summary);
    o.report = r.string("report", o.report);
    o.sweep = r.string("sweep", o.sweep);
    return o;
}

std::pair<int, int> line_column(const std::string &text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

json vec_json(const Vec3d &v) { return json::array({v.x(), v.y(), v.z()}); }

json vec_list_json(const std::vector<Vec3d> &vs) {
    json a = json::array();
    for (const auto &v : vs) a.push_back(vec_json(v));
    return a;
}

json rod_json(const RodSpec &r) {
    json j;
    j["length"] = r.length;
    j["intervals"] = r.intervals;
    json c;
    c["kind"] = r.curvature.table ? "table" : "constant";
    if (r.curvature.table) c["samples"] = vec_list_json(r.curvature.samples);
    else c["value"] = vec_json(r.curvature.value);
    j["curvature"] = c;
    j["origin"] = vec_json(r.origin);
    j["tangent"] = vec_json(r.tangent);
    j["director"] = vec_json(r.director);
    json sec;
    sec["eta"] = r.section.eta;
    sec["nu"] = r.section.nu;
    sec["pieces"] = json::array();
    for (const auto &p : r.section.pieces) {
        json jp;
        jp["start"] = p.start;
        jp["kind"] = p.polygon ? "polygon" : "disk";
        if (p.polygon) {
            jp["vertices"] = json::array();
            for (const auto &v : p.vertices) jp["vertices"].push_back({v.x(), v.y()});
        } else {
            jp["radius"] = p.radius;
        }
        sec["pieces"].push_back(jp);
    }
    j["section"] = sec;
    j["twist"] = r.twist;
    j["reference"] = r.reference;
    j["isotopy_declared"] = r.isotopy_declared;
    if (!r.reference_points.empty()) j["reference_points"] = vec_list_json(r.reference_points);
    return j;
}

} // namespace

ExperimentConfig parse_config(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        std::string what = e.what();
        if (const auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
        throw Error(ErrorCode::ConfigError,
                    "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
    }
    if (!j.is_object()) fail("(root)", "expected an object");
    for (const auto &[key, value] : j.items())
        if (key != "problem" && key != "solver" && key != "output") fail(key, "unknown field");
    if (!j.contains("problem")) fail("problem", "missing");

    ExperimentConfig cfg;
    cfg.problem = read_problem(j.at("problem"));
    cfg.solver = j.contains("solver") ? read_solver(j.at("solver")) : read_solver(json::object());
    cfg.solver.mode = cfg.problem.mode;
    cfg.output = j.contains("output") ? read_output(j.at("output")) : OutputSpec{};
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const Error &e) {
        throw Error(ErrorCode::ConfigError, e.message());
    }
    return parse_config(text);
}

std::string serialize_config(const ExperimentConfig &cfg) {
    const auto &p = cfg.problem;
    json prob;
    prob["name"] = p.name;
    prob["mode"] = to_string(p.mode);
    prob["rods"] = json::array();
    for (const auto &r : p.rods) prob["rods"].push_back(rod_json(r));
    prob["stiffness"] = vec_list_json(p.stiffness);
    prob["intrinsic"] = vec_list_json(p.intrinsic);
    json mass;
    mass["kind"] = p.mass.separable ? "separable" : "constant";
    mass["rho"] = p.mass.rho;
    mass["axial"] = p.mass.axial;
    mass["section"] = p.mass.section;
    mass["gravity"] = vec_json(p.mass.gravity);
    prob["mass"] = mass;
    json f;
    f["kind"] = to_string(p.integrand.kind);
    f["value"] = p.integrand.value;
    f["matrix"] = json::array();
    for (int i = 0; i < 3; ++i) f["matrix"].push_back(vec_json(p.integrand.matrix.row(i).transpose()));
    f["n_polar"] = p.integrand.n_polar;
    f["n_azimuth"] = p.integrand.n_azimuth;
    f["values"] = p.integrand.values;
    prob["integrand"] = f;
    prob["linking"] = p.linking;
    prob["delta0"] = p.delta0;
    prob["epsilon"] = p.epsilon;
    json film;
    film["attachment"] = to_string(p.film.attachment);
    film["theta"] = p.film.theta;
    film["apex_lift"] = p.film.apex_lift;
    film["rings"] = p.film.rings;
    film["seed_mesh"] = p.film.seed_mesh;
    prob["film"] = film;
    prob["witnesses"] = json::array();
    for (const auto &w : p.witnesses) prob["witnesses"].push_back({{"target", w.target}, {"points", vec_list_json(w.points)}});

    const auto &s = cfg.solver;
    json sol;
    sol["max_outer_iters"] = s.max_outer_iters;
    sol["film_max_iters"] = s.film_max_iters;
    sol["rod_max_iters"] = s.rod_max_iters;
    sol["film_step"] = s.film_step;
    sol["rod_step"] = s.rod_step;
    sol["backtracking"] = s.backtracking;
    sol["energy_tolerance"] = s.energy_tolerance;
    sol["armijo"] = s.armijo;
    sol["fd_relative"] = s.fd_relative;
    sol["eps_sweep"] = s.eps_sweep;
    sol["seed"] = s.seed;
    sol["closure_position_rel"] = s.tolerances.closure.position_rel;
    sol["closure_tangent"] = s.tolerances.closure.tangent;
    sol["volume_slack"] = s.tolerances.volume_slack;
    sol["volume_samples"] = s.tolerances.volume_samples;

    const auto &o = cfg.output;
    json out{{"dir", o.dir}, {"trace", o.trace}, {"mesh", o.mesh}, {"summary", o.summary}, {"report", o.report},
             {"sweep", o.sweep}};
    json root;
    root["problem"] = prob;
    root["solver"] = sol;
    root["output"] = out;
    return root.dump(2) + "\n";
}

Rod<double> build_rod(const RodSpec &spec) {
    if (!(spec.length > 0)) throw Error(ErrorCode::ConfigError, "length must be positive");
    if (spec.intervals < 8) throw Error(ErrorCode::ConfigError, "intervals must be at least 8");
    CurvatureField<double> w;
    if (spec.curvature.table) {
        if (spec.curvature.samples.size() != std::size_t(spec.intervals) + 1)
            throw Error(ErrorCode::ConfigError, "curvature.samples must have intervals + 1 rows");
        w.length = spec.length;
        w.samples.resize(spec.intervals + 1, 3);
        for (std::size_t k = 0; k < spec.curvature.samples.size(); ++k)
            w.samples.row(Index(k)) = spec.curvature.samples[k].transpose();
    } else {
        const auto &v = spec.curvature.value;
        w = CurvatureField<double>::constant(spec.length, spec.intervals, v.x(), v.y(), v.z());
    }
    std::vector<double> breaks;
    std::vector<SectionShape<double>> shapes;
    for (const auto &p : spec.section.pieces) {
        breaks.push_back(p.start);
        if (p.polygon) shapes.emplace_back(Polygon<double>{p.vertices});
        else shapes.emplace_back(Disk<double>{p.radius});
    }
    try {
        w.validate();
        InitialFrame<double> f0{spec.origin, spec.tangent, spec.director};
        f0.validate();
        CrossSectionProfile<double> section(spec.section.eta, spec.section.nu, breaks, shapes);
        Rod<double> rod = make_rod(std::move(w), f0, std::move(section), spec.twist);
        rod.reference_name = spec.reference;
        rod.isotopy_declared = spec.isotopy_declared;
        if (!spec.reference_points.empty()) {
            Nodes<double> pts(3, Index(spec.reference_points.size()));
            for (std::size_t k = 0; k < spec.reference_points.size(); ++k) pts.col(Index(k)) = spec.reference_points[k];
            rod.reference = ClosedPolyline<double>::from_samples(pts);
        }
        return rod;
    } catch (const Error &e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        throw Error(ErrorCode::ConfigError, e.message());
    }
}

Problem build_problem(const ExperimentConfig &cfg) {
    const auto &p = cfg.problem;
    Problem out;
    for (std::size_t i = 0; i < p.rods.size(); ++i) {
        try {
            out.system.rods.push_back(build_rod(p.rods[i]));
        } catch (const Error &e) {
            fail("problem.rods[" + std::to_string(i) + "]", e.message());
        }
    }
    const Index n = Index(p.rods.size());
    if (!p.linking.empty()) {
        if (Index(p.linking.size()) != n) fail("problem.linking", "must be N x N for N rods");
        out.system.prescribed_linking = LinkingMatrix::Zero(n, n);
        for (Index i = 0; i < n; ++i)
            for (Index k = 0; k < n; ++k) out.system.prescribed_linking(i, k) = p.linking[std::size_t(i)][std::size_t(k)];
        if (out.system.prescribed_linking != out.system.prescribed_linking.transpose())
            fail("problem.linking", "must be symmetric");
    }
    if (!(p.epsilon > 0)) fail("problem.epsilon", "must be positive");
    if (!(p.delta0 >= 0)) fail("problem.delta0", "must be nonnegative");
    out.system.epsilon = p.epsilon;
    out.system.delta0 = p.delta0;

    if (p.stiffness.size() != 1 && p.stiffness.size() != p.rods.size())
        fail("problem.stiffness", "need one entry or one per rod");
    if (p.intrinsic.size() != 1 && p.intrinsic.size() != p.rods.size())
        fail("problem.intrinsic", "need one entry or one per rod");
    const std::size_t models = std::max(p.stiffness.size(), p.intrinsic.size());
    for (std::size_t i = 0; i < models; ++i) {
        ElasticModel<double> m;
        m.stiffness = p.stiffness[std::min(i, p.stiffness.size() - 1)];
        m.intrinsic = p.intrinsic[std::min(i, p.intrinsic.size() - 1)];
        try {
            m.validate();
        } catch (const Error &e) {
            fail("problem.stiffness", e.message());
        }
        out.models.elastic.push_back(m);
    }

    const auto &ms = p.mass;
    if (ms.separable) {
        auto axial = [c = ms.axial, rho = ms.rho](double s) {
            if (c.empty()) return rho;
            double v = 0;
            for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
            return v;
        };
        std::vector<double> sc = ms.section;
        sc.resize(3, 0.0);
        if (ms.section.empty()) sc[0] = 1;
        auto cross = [sc](const Vec2d &z) { return sc[0] + sc[1] * z.x() + sc[2] * z.y(); };
        out.models.mass = MassModel<double>::separable(axial, cross, ms.gravity);
    } else {
        out.models.mass = MassModel<double>::constant(ms.rho, ms.gravity);
    }
    try {
        out.models.mass.validate();
    } catch (const Error &e) {
        fail("problem.mass", e.message());
    }

    const auto &fs = p.integrand;
    try {
        switch (fs.kind) {
            case IntegrandKind::constant: out.models.integrand = AnisotropicIntegrand<double>::constant(fs.value); break;
            case IntegrandKind::matrix_norm:
                out.models.integrand = AnisotropicIntegrand<double>::matrix_norm(fs.matrix);
                break;
            case IntegrandKind::table:
                out.models.integrand = AnisotropicIntegrand<double>::table(fs.n_polar, fs.n_azimuth, fs.values);
                break;
        }
    } catch (const Error &e) {
        fail("problem.integrand", e.message());
    }

    if (p.witnesses.empty()) {
        out.witnesses = default_witnesses(out.system);
    } else {
        for (std::size_t i = 0; i < p.witnesses.size(); ++i) {
            const auto &w = p.witnesses[i];
            if (w.target < 0 || std::size_t(w.target) >= p.rods.size())
                fail("problem.witnesses[" + std::to_string(i) + "].target", "no such rod");
            Nodes<double> pts(3, Index(w.points.size()));
            for (std::size_t k = 0; k < w.points.size(); ++k) pts.col(Index(k)) = w.points[k];
            try {
                out.witnesses.loops.push_back({ClosedPolyline<double>::from_samples(pts), w.target});
            } catch (const Error &e) {
                fail("problem.witnesses[" + std::to_string(i) + "].points", e.message());
            }
        }
    }

    out.seed.attachment = p.film.attachment;
    out.seed.theta = p.film.theta;
    out.seed.apex_lift = p.film.apex_lift;
    if (p.film.rings < 0) fail("problem.film.rings", "must be nonnegative");
    out.seed.rings = p.film.rings;
    if (!p.film.seed_mesh.empty()) {
        try {
            out.seed.fallback = read_mesh(p.film.seed_mesh);
        } catch (const Error &e) {
            fail("problem.film.seed_mesh", e.message());
        }
    }
    return out;
}

} // namespace kplab
