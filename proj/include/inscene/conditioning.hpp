#pragma once

#include <optional>
#include <string>

#include "inscene/backends.hpp"
#include "inscene/types.hpp"

namespace inscene {

enum class StageKind { stage1_depth, stage2_rgb, direct };

std::string to_string(StageKind s);
StageKind stage_from_string(const std::string& s);

// Conditioning channel count for a stage, given C latent channels:
//   stage1: E(M*D_s) + E(I_s) + E(D_s) + R(D_p) + R(M)        = 3C + 2
//   stage2: E(I_s) + R(D_cond) + R(D_s) + R(D_p)              =  C + 3
//   direct: E(M*I_s) + E(I_s) + R(D_s) + R(D_p) + R(M)        = 2C + 3
int cond_channels(StageKind stage, int latent_channels);

// Backbone input = noisy latent (C) + conditioning.
int backbone_input_channels(StageKind stage, int latent_channels);

struct ConditioningBundle {
    StageKind stage = StageKind::direct;
    int latent_channels = 0;
    LatentTensor cond;
    Embedding c_ref;
    Embedding c_null;
    std::optional<LatentTensor> target_latent; // training only

    void check_channels() const;
};

// What every builder needs from the scene side. All maps share the pixel
// resolution; depths are normalized; mask uses the scene-keep convention.
struct SceneInputs {
    const ImageRGB* scene = nullptr;     // I_s, unit range
    const DepthMap* scene_depth = nullptr; // D_s
    const DepthMap* pose_depth = nullptr;  // D_p
    const BinaryMask* mask = nullptr;      // M
};

// c_ref from the reference image, c_null from a constant image of the fill
// color (cached per fill color).
std::pair<Embedding, Embedding> reference_embeddings(const ImageRGB& reference,
                                                     const std::array<double, 3>& fill,
                                                     const ReferenceEncoder& encoder,
                                                     NullEmbeddingCache* cache = nullptr);

// Inference-side builders (no target latent).
ConditioningBundle build_stage1(const SceneInputs& in, const ImageRGB& reference,
                                const std::array<double, 3>& fill, const BackendRegistry& reg);
ConditioningBundle build_stage2(const SceneInputs& in, const DepthMap& d_cond,
                                const ImageRGB& reference, const std::array<double, 3>& fill,
                                const BackendRegistry& reg);
ConditioningBundle build_direct(const SceneInputs& in, const ImageRGB& reference,
                                const std::array<double, 3>& fill, const BackendRegistry& reg);

struct TrainingRecord; // dataset.hpp

// Training-side builders: same conditioning plus the supervised target
// (E of replicated D_GT for stage 1, E of I_GT otherwise). An augmented
// reference can be substituted for the stored one.
ConditioningBundle build_stage1(const TrainingRecord& rec, const BackendRegistry& reg,
                                const ImageRGB* reference_override = nullptr);
ConditioningBundle build_stage2(const TrainingRecord& rec, const DepthMap& d_cond,
                                const BackendRegistry& reg,
                                const ImageRGB* reference_override = nullptr);
ConditioningBundle build_direct(const TrainingRecord& rec, const BackendRegistry& reg,
                                const ImageRGB* reference_override = nullptr);

} // namespace inscene
