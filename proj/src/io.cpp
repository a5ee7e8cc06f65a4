#include "kplab/io.hpp"

#include "kplab/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace kplab {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::filesystem::path sidecar_path(const std::filesystem::path &obj) {
    auto p = obj;
    p.replace_extension(".attach.json");
    return p;
}

} // namespace

void write_text(const std::filesystem::path &path, const std::string &content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string() + " for writing");
    f << content;
    if (!f) throw Error(ErrorCode::InvalidArgument, "failed writing " + path.string());
}

std::string read_text(const std::filesystem::path &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot read " + path.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::string curve_csv(const Nodes<double> &pts) {
    std::string out = "x,y,z\n";
    for (Index k = 0; k < pts.cols(); ++k)
        out += num(pts(0, k)) + "," + num(pts(1, k)) + "," + num(pts(2, k)) + "\n";
    return out;
}

Nodes<double> parse_curve_csv(const std::string &text) {
    std::istringstream is(text);
    std::string line;
    std::vector<Vec3<double>> pts;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line.find_first_not_of("0123456789+-.eE, \t") != std::string::npos) continue; // header
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        Vec3<double> p;
        if (!(ls >> p.x() >> p.y() >> p.z()))
            throw Error(ErrorCode::InvalidArgument, "curve csv line " + std::to_string(lineno) + ": expected x,y,z");
        pts.push_back(p);
    }
    Nodes<double> out(3, Index(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) out.col(Index(i)) = pts[i];
    return out;
}

std::string framed_curve_csv(const FramedCurve<double> &c) {
    std::string out = "s,x,y,z,t_x,t_y,t_z,d_x,d_y,d_z\n";
    for (Index k = 0; k < c.size(); ++k) {
        out += num(c.param[k]);
        for (const auto *m : {&c.x, &c.t, &c.d})
            for (int r = 0; r < 3; ++r) out += "," + num((*m)(r, k));
        out += "\n";
    }
    return out;
}

std::string mesh_obj(const SpanningSurface<double> &S) {
    std::string out;
    for (Index v = 0; v < S.vertex_count(); ++v)
        out += "v " + num(S.V(v, 0)) + " " + num(S.V(v, 1)) + " " + num(S.V(v, 2)) + "\n";
    for (Index f = 0; f < S.face_count(); ++f)
        out += "f " + std::to_string(S.F(f, 0) + 1) + " " + std::to_string(S.F(f, 1) + 1) + " " +
               std::to_string(S.F(f, 2) + 1) + "\n";
    return out;
}

std::string mesh_sidecar(const SpanningSurface<double> &S) {
    nlohmann::ordered_json j;
    j["attachments"] = nlohmann::ordered_json::array();
    for (const auto &a : S.attachments) {
        nlohmann::ordered_json ja;
        ja["rod"] = a.rod;
        ja["kind"] = to_string(a.kind);
        ja["offset"] = {a.offset.x(), a.offset.y()};
        ja["epsilon"] = a.epsilon;
        ja["length"] = a.length;
        auto samples = nlohmann::ordered_json::array();
        for (Index k = 0; k < a.samples.cols(); ++k) samples.push_back({a.samples(0, k), a.samples(1, k), a.samples(2, k)});
        ja["samples"] = samples;
        j["attachments"].push_back(ja);
    }
    j["loops"] = nlohmann::ordered_json::array();
    for (const auto &l : S.loops) j["loops"].push_back({{"curve", l.curve}, {"vertices", l.vertices}, {"params", l.params}});
    return j.dump(1);
}

SpanningSurface<double> parse_mesh(const std::string &obj, const std::string &sidecar) {
    SpanningSurface<double> S;
    std::vector<Vec3<double>> verts;
    std::vector<std::array<int, 3>> faces;
    std::istringstream is(obj);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3<double> p;
            if (!(ls >> p.x() >> p.y() >> p.z()))
                throw Error(ErrorCode::InvalidArgument, "obj line " + std::to_string(lineno) + ": bad vertex");
            verts.push_back(p);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) idx.push_back(std::stoi(tok.substr(0, tok.find('/'))) - 1);
            if (idx.size() != 3)
                throw Error(ErrorCode::InvalidArgument, "obj line " + std::to_string(lineno) + ": only triangles are supported");
            faces.push_back({idx[0], idx[1], idx[2]});
        }
    }
    S.V.resize(Index(verts.size()), 3);
    for (std::size_t v = 0; v < verts.size(); ++v) S.V.row(Index(v)) = verts[v].transpose();
    S.F.resize(Index(faces.size()), 3);
    for (std::size_t f = 0; f < faces.size(); ++f)
        for (int e = 0; e < 3; ++e) S.F(Index(f), e) = faces[f][std::size_t(e)];

    if (!sidecar.empty()) {
        try {
            const auto j = nlohmann::json::parse(sidecar);
            for (const auto &ja : j.at("attachments")) {
                AttachmentCurve<double> a;
                a.rod = ja.at("rod").get<int>();
                a.kind = ja.at("kind").get<std::string>() == "tube" ? AttachmentKind::tube : AttachmentKind::midline;
                a.offset = Vec2<double>(ja.at("offset").at(0).get<double>(), ja.at("offset").at(1).get<double>());
                a.epsilon = ja.at("epsilon").get<double>();
                a.length = ja.at("length").get<double>();
                const auto &sm = ja.at("samples");
                a.samples.resize(3, Index(sm.size()));
                for (std::size_t k = 0; k < sm.size(); ++k)
                    for (int r = 0; r < 3; ++r) a.samples(r, Index(k)) = sm.at(k).at(std::size_t(r)).get<double>();
                S.attachments.push_back(std::move(a));
            }
            for (const auto &jl : j.at("loops")) {
                BoundaryLoop<double> l;
                l.curve = jl.at("curve").get<int>();
                l.vertices = jl.at("vertices").get<std::vector<Index>>();
                l.params = jl.at("params").get<std::vector<double>>();
                S.loops.push_back(std::move(l));
            }
        } catch (const nlohmann::json::exception &e) {
            throw Error(ErrorCode::InvalidArgument, std::string("attachment sidecar: ") + e.what());
        }
    }
    S.validate();
    return S;
}

void write_mesh(const std::filesystem::path &obj_path, const SpanningSurface<double> &S) {
    write_text(obj_path, mesh_obj(S));
    write_text(sidecar_path(obj_path), mesh_sidecar(S));
}

SpanningSurface<double> read_mesh(const std::filesystem::path &obj_path) {
    const auto side = sidecar_path(obj_path);
    return parse_mesh(read_text(obj_path), std::filesystem::exists(side) ? read_text(side) : std::string());
}

} // namespace kplab
