#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "inscene/types.hpp"

namespace inscene {

enum class MeshSource { fitted, synthetic };

// Triangle mesh in camera space (x right, y down, z forward, meters).
struct BodyMesh {
    std::vector<std::array<double, 3>> vertices;
    std::vector<std::array<int, 3>> faces;
    MeshSource source = MeshSource::synthetic;

    void validate() const;
};

// Pinhole camera; principal point inside the image.
struct CameraSpec {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int height = 0;
    int width = 0;

    void validate() const;
};

// Plain-text triangle list: `v x y z` vertex lines and `f i j k` face lines
// with 1-based indices, '#' comments.
BodyMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const BodyMesh& mesh, const std::filesystem::path& path);
BodyMesh parse_mesh(const std::string& text);

} // namespace inscene
