// OBJ/PLY mesh reading and writing plus the label sidecar convention.
#pragma once

#include <filesystem>

#include "meshreg/mesh.hpp"

namespace meshreg {

// Loads an OBJ or PLY mesh (by extension; PLY may be ASCII or
// binary_little_endian). Coordinates are taken as-is and documented as
// millimeters. If `<stem>.labels.json` exists next to the mesh it is read
// into `labels`. Parse failures throw std::runtime_error naming the file and
// line or offset. Non-manifold connectivity is accepted and flagged.
TriMesh load_mesh(const std::filesystem::path& path);

// Writes OBJ (ASCII) or PLY (binary_little_endian, double precision) by
// extension. Labels, when present, are written to `<stem>.labels.json`.
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);

// Sidecar I/O used by load_mesh/save_mesh, exposed for tools that manage
// labels separately. The sidecar maps label name to a vertex index list.
std::map<std::string, std::vector<int>> load_labels(
    const std::filesystem::path& sidecar);
void save_labels(const std::map<std::string, std::vector<int>>& labels,
                 const std::filesystem::path& sidecar);

// `<stem>.labels.json` next to the mesh file.
std::filesystem::path label_sidecar_path(const std::filesystem::path& mesh_path);

}  // namespace meshreg
