#pragma once

// Experiment configuration: JSON text with problem, solver and output blocks.

#include "solver.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kplab {

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;

struct CurvatureSpec {
    bool table = false;
    Vec3d value = Vec3d::Zero();  // constant kind
    std::vector<Vec3d> samples;   // table kind, n + 1 rows
};

struct SectionPieceSpec {
    double start = 0;
    bool polygon = false;
    double radius = 0.1;
    std::vector<Vec2d> vertices;
};

struct SectionSpec {
    double eta = 0.1, nu = 0.1;
    std::vector<SectionPieceSpec> pieces{SectionPieceSpec{}};
};

struct RodSpec {
    double length = 1;
    int intervals = 128;
    CurvatureSpec curvature;
    Vec3d origin = Vec3d::Zero();
    Vec3d tangent = Vec3d::UnitX();
    Vec3d director = Vec3d::UnitY();
    SectionSpec section;
    int twist = 0;
    std::string reference = "unknot";
    bool isotopy_declared = true;
    std::vector<Vec3d> reference_points; // optional knot-type reference loop
};

struct MassSpec {
    bool separable = false;
    double rho = 1;
    std::vector<double> axial;   // polynomial coefficients in s
    std::vector<double> section; // c0 + c1 zeta1 + c2 zeta2
    Vec3d gravity = Vec3d(0, 0, -9.81);
};

struct IntegrandSpec {
    IntegrandKind kind = IntegrandKind::constant;
    double value = 1;
    Mat3<double> matrix = Mat3<double>::Identity();
    int n_polar = 0, n_azimuth = 0;
    std::vector<double> values;
};

struct FilmSpec {
    AttachmentKind attachment = AttachmentKind::midline;
    double theta = 0;
    double apex_lift = 0;
    int rings = 0;
    std::string seed_mesh; // OBJ used when the built-in fill fails
};

struct WitnessSpec {
    int target = 0;
    std::vector<Vec3d> points;
};

struct ProblemSpec {
    std::string name;
    ProblemMode mode = ProblemMode::linked;
    std::vector<RodSpec> rods;
    std::vector<Vec3d> stiffness{Vec3d::Ones()}; // one entry per rod or a single shared entry
    std::vector<Vec3d> intrinsic{Vec3d::Zero()};
    MassSpec mass;
    IntegrandSpec integrand;
    std::vector<std::vector<int>> linking; // prescribed; empty means the seed's own
    double delta0 = 0;
    double epsilon = 1;
    FilmSpec film;
    std::vector<WitnessSpec> witnesses; // empty means the default meridian loops
};

struct OutputSpec {
    std::string dir = "out";
    std::string trace = "trace.csv";
    std::string mesh = "film.obj";
    std::string summary = "summary.txt";
    std::string report = "report.txt";
    std::string sweep = "sweep.csv";
};

struct ExperimentConfig {
    ProblemSpec problem;
    SolveConfig<double> solver;
    OutputSpec output;
};

// Throws Error(ConfigError) naming the line (syntax) or the field path (content).
ExperimentConfig parse_config(const std::string &text);
ExperimentConfig load_config(const std::filesystem::path &path);
std::string serialize_config(const ExperimentConfig &cfg);

// Built-in presets: circle, trefoil-sample, hopf-pair.
ProblemSpec preset_problem(const std::string &name);
std::vector<std::string> preset_names();

// Throws Error(ConfigError) on invalid geometry or frames.
Rod<double> build_rod(const RodSpec &spec);

// Everything a solver run needs, assembled from a configuration.
struct Problem {
    RodSystem<double> system;
    EnergyModels<double> models;
    SpanningWitnessSet<double> witnesses;
    SeedOptions<double> seed;
};

Problem build_problem(const ExperimentConfig &cfg);

} // namespace kplab
