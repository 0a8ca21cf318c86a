#include "inscene/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "inscene/imaging.hpp"

namespace inscene {

namespace {

struct ScreenVertex {
    double x, y;  // pixel coordinates
    double inv_z; // 1/z, linear in screen space
};

double edge(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
    return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

} // namespace

RenderOutput render_body_depth(const BodyMesh& mesh, const CameraSpec& cam) {
    mesh.validate();
    cam.validate();

    const int H = cam.height;
    const int W = cam.width;
    RenderOutput out{DepthMap(H, W, DepthNorm::raw, kDepthBackground), BinaryMask(H, W, 0)};
    std::vector<double> zbuf(static_cast<size_t>(H) * W, std::numeric_limits<double>::infinity());

    size_t surviving = 0;
    for (const auto& face : mesh.faces) {
        ScreenVertex sv[3];
        bool clipped = false;
        for (int i = 0; i < 3; ++i) {
            const auto& v = mesh.vertices[face[i]];
            if (v[2] <= kZNear) {
                clipped = true;
                break;
            }
            sv[i] = {cam.fx * v[0] / v[2] + cam.cx, cam.fy * v[1] / v[2] + cam.cy, 1.0 / v[2]};
        }
        if (clipped) continue;
        ++surviving;

        double area = edge(sv[0], sv[1], sv[2].x, sv[2].y);
        if (std::abs(area) < 1e-12) continue;

        const double min_x = std::min({sv[0].x, sv[1].x, sv[2].x});
        const double max_x = std::max({sv[0].x, sv[1].x, sv[2].x});
        const double min_y = std::min({sv[0].y, sv[1].y, sv[2].y});
        const double max_y = std::max({sv[0].y, sv[1].y, sv[2].y});
        const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
        const int x1 = std::min(W - 1, static_cast<int>(std::ceil(max_x - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
        const int y1 = std::min(H - 1, static_cast<int>(std::ceil(max_y - 0.5)));

        const double inv_area = 1.0 / area;
        for (int y = y0; y <= y1; ++y) {
            const double py = y + 0.5;
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5;
                // Barycentric weights, orientation folded in; inclusive edges.
                const double w0 = edge(sv[1], sv[2], px, py) * inv_area;
                const double w1 = edge(sv[2], sv[0], px, py) * inv_area;
                const double w2 = edge(sv[0], sv[1], px, py) * inv_area;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                const double inv_z = w0 * sv[0].inv_z + w1 * sv[1].inv_z + w2 * sv[2].inv_z;
                if (inv_z <= 0.0) continue;
                const double z = 1.0 / inv_z;
                const size_t idx = static_cast<size_t>(y) * W + x;
                // Strict less-than keeps the earlier (lower-index) face on ties.
                if (z < zbuf[idx]) {
                    zbuf[idx] = z;
                    out.depth.data[idx] = z;
                    out.silhouette.data[idx] = 1;
                }
            }
        }
    }

    if (surviving == 0) throw ValidationError("render_body_depth: mesh fully clipped");
    return out;
}

PoseInputs build_pose_inputs(const BodyMesh& mesh, const CameraSpec& cam, int dilation_radius) {
    RenderOutput r = render_body_depth(mesh, cam);
    if (r.silhouette.count_ones() == 0)
        throw ValidationError("build_pose_inputs: empty silhouette");

    // Normalized depth convention is nearness: +1 nearest, -1 farthest, so the
    // -1 background reads as farther than every body pixel.
    DepthMap nearness(r.depth.height, r.depth.width, DepthNorm::raw, 0.0);
    for (size_t i = 0; i < r.depth.data.size(); ++i)
        if (r.silhouette.data[i]) nearness.data[i] = -r.depth.data[i];

    PoseInputs out;
    out.pose_depth = normalize_depth_over(nearness, r.silhouette, /*background=*/-1.0);
    out.insertion_mask = mask_from_silhouette(r.silhouette, dilation_radius);
    out.silhouette = std::move(r.silhouette);
    return out;
}

BinaryMask silhouette_from_pose_depth(const DepthMap& pose_depth) {
    BinaryMask sil(pose_depth.height, pose_depth.width, 0);
    // One 16-bit quantization step of slack above the -1 background.
    const double thresh = -1.0 + 2.0 / 65535.0 * 0.5;
    for (size_t i = 0; i < pose_depth.data.size(); ++i)
        sil.data[i] = pose_depth.data[i] > thresh ? 1 : 0;
    return sil;
}

} // namespace inscene
