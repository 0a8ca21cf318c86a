#pragma once

#include "inscene/mesh.hpp"
#include "inscene/types.hpp"

namespace inscene {

// Raw-depth value for pixels the body does not cover.
inline constexpr double kDepthBackground = -1.0;

// Triangles with any vertex closer than this are dropped (no partial clipping).
inline constexpr double kZNear = 1e-6;

struct RenderOutput {
    DepthMap depth;       // raw camera-space z; background pixels = kDepthBackground
    BinaryMask silhouette; // 1 where covered
};

// Perspective z-buffer rasterization at pixel centers (x+0.5, y+0.5), one
// sample per pixel, no anti-aliasing. Depth ties keep the lower face index.
// Errors if every triangle is clipped away.
RenderOutput render_body_depth(const BodyMesh& mesh, const CameraSpec& cam);

struct PoseInputs {
    DepthMap pose_depth;      // D_p, minmax over body pixels, background -1
    BinaryMask insertion_mask; // M, scene-keep convention
    BinaryMask silhouette;
};

PoseInputs build_pose_inputs(const BodyMesh& mesh, const CameraSpec& cam, int dilation_radius);

// Recovers the body silhouette from a serialized pose-depth map: background
// pixels sit at exactly -1. Best effort — body pixels that normalized to
// exactly -1 (the farthest ones) are indistinguishable from background, so
// prefer an explicit mask when one is available.
BinaryMask silhouette_from_pose_depth(const DepthMap& pose_depth);

} // namespace inscene
