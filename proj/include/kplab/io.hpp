#pragma once

// CSV curves, OBJ meshes with an attachment sidecar, plain text files.

#include "mesh.hpp"

#include <filesystem>
#include <string>

namespace kplab {

void write_text(const std::filesystem::path &path, const std::string &content);
std::string read_text(const std::filesystem::path &path);

// Header row x,y,z then one point per row.
std::string curve_csv(const Nodes<double> &pts);
Nodes<double> parse_curve_csv(const std::string &text);

// s,x,y,z,t_x,t_y,t_z,d_x,d_y,d_z
std::string framed_curve_csv(const FramedCurve<double> &c);

std::string mesh_obj(const SpanningSurface<double> &S);
// JSON sidecar with the attachment curves and boundary loops.
std::string mesh_sidecar(const SpanningSurface<double> &S);
SpanningSurface<double> parse_mesh(const std::string &obj, const std::string &sidecar = {});

void write_mesh(const std::filesystem::path &obj_path, const SpanningSurface<double> &S);
// Reads path and, when present, path with extension .attach.json.
SpanningSurface<double> read_mesh(const std::filesystem::path &obj_path);

} // namespace kplab
