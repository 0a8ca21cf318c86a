#include "inscene/mesh.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace inscene {

namespace {

bool triangle_degenerate(const std::array<double, 3>& a, const std::array<double, 3>& b,
                         const std::array<double, 3>& c) {
    const double ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
    const double vx = c[0] - a[0], vy = c[1] - a[1], vz = c[2] - a[2];
    const double nx = uy * vz - uz * vy;
    const double ny = uz * vx - ux * vz;
    const double nz = ux * vy - uy * vx;
    return nx * nx + ny * ny + nz * nz < 1e-24;
}

} // namespace

void BodyMesh::validate() const {
    if (faces.empty()) throw ValidationError("mesh has no faces");
    bool any_nondegenerate = false;
    for (const auto& f : faces) {
        for (int idx : f) {
            if (idx < 0 || idx >= static_cast<int>(vertices.size()))
                throw ValidationError("mesh face index out of range");
        }
        if (!triangle_degenerate(vertices[f[0]], vertices[f[1]], vertices[f[2]]))
            any_nondegenerate = true;
    }
    if (!any_nondegenerate) throw ValidationError("mesh has no non-degenerate triangle");
    for (const auto& v : vertices)
        for (double x : v)
            if (!std::isfinite(x)) throw ValidationError("mesh vertex not finite");
}

void CameraSpec::validate() const {
    if (fx <= 0.0 || fy <= 0.0) throw ValidationError("camera focal lengths must be positive");
    if (height <= 0 || width <= 0) throw ValidationError("camera image size must be positive");
    if (cx < 0.0 || cx > width || cy < 0.0 || cy > height)
        throw ValidationError("camera principal point outside image");
}

BodyMesh parse_mesh(const std::string& text) {
    BodyMesh mesh;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            std::array<double, 3> v{};
            if (!(ls >> v[0] >> v[1] >> v[2]))
                throw ValidationError("mesh line " + std::to_string(lineno) + ": bad vertex");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::array<int, 3> f{};
            if (!(ls >> f[0] >> f[1] >> f[2]))
                throw ValidationError("mesh line " + std::to_string(lineno) + ": bad face");
            // 1-based on disk.
            mesh.faces.push_back({f[0] - 1, f[1] - 1, f[2] - 1});
        } else {
            throw ValidationError("mesh line " + std::to_string(lineno) + ": unknown tag '" + tag + "'");
        }
    }
    mesh.source = MeshSource::fitted;
    mesh.validate();
    return mesh;
}

BodyMesh load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open mesh: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_mesh(ss.str());
}

void save_mesh(const BodyMesh& mesh, const std::filesystem::path& path) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& v : mesh.vertices) out << "v " << v[0] << " " << v[1] << " " << v[2] << "\n";
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
    std::ofstream file(path);
    if (!file) throw ValidationError("cannot write mesh: " + path.string());
    file << out.str();
}

} // namespace inscene
