#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "inscene/conditioning.hpp"
#include "inscene/dataset.hpp"
#include "inscene/diffusion.hpp"
#include "inscene/optim.hpp"

namespace inscene {

// Typed view over the plain-text run config. Defaults are the full-scale
// settings; desk-scale runs override steps/resolution/lr in their config file.
struct RunConfig {
    KeyValueConfig raw;

    std::string backends = "double";
    int resolution = 512;
    int latent_channels = 4;
    int spatial_factor = 8;
    int hidden_channels = 8;
    int context_width = 16;
    int t_train = 1000;
    std::string schedule = "scaled_linear";

    long steps = 0; // 0 -> epochs * ceil(N / batch)
    int epochs = 27;
    int batch_size = 32;
    long warmup_steps = 10000;
    double lr_init = 1e-9;
    double lr_base = 5e-5;
    double weight_decay = 0.01;
    double dropout_prob = 0.2;
    AugmentConfig augment;

    GuidanceConfig guidance; // w = 4.0, 50 steps
    int dilation_radius = 12;
    std::array<double, 3> fill_color = kDefaultFillColor;
    std::string inpaint_prompt = kDefaultInpaintPrompt;
    int frames_per_video = 30;
    int pairs_per_video = 4;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    long val_every = 50;
    uint64_t seed = 0;

    static RunConfig from_config(const KeyValueConfig& cfg);
    static RunConfig load(const std::filesystem::path& path);

    // Hash of the full config text.
    uint64_t config_hash() const { return raw.hash(); }
    // Hash of the keys a checkpoint's architecture depends on; loading a
    // checkpoint into a run whose model hash differs is refused.
    uint64_t model_hash() const;

    NoiseSchedule make_schedule() const;
    BackendRegistry make_backends() const;
    PrepareParams prepare_params() const;
};

struct Checkpoint {
    StageKind stage = StageKind::direct;
    std::string backbone_kind = "conv2";
    int input_channels = 0;
    int latent_channels = 0;
    int hidden_channels = 0;
    int context_width = 0;
    int t_train = 0;
    std::string schedule_id;
    uint64_t config_hash = 0;
    uint64_t model_hash = 0;
    long step = 0;
    std::vector<double> params;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rebuilds the trained backbone; refuses mismatched channel arithmetic.
std::unique_ptr<TrainableBackbone> backbone_from_checkpoint(const Checkpoint& ckpt);

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<double> loss_curve;
    std::vector<double> val_curve;
};

TrainResult train(StageKind stage, const std::vector<TrainingRecord>& train_set,
                  const std::vector<TrainingRecord>& val_set, const RunConfig& cfg,
                  const BackendRegistry& reg);

// Everything inference may see. Ground-truth images and depths have no field
// here, which is the static half of the information-flow guarantee.
struct InferenceInputs {
    ImageRGB scene;      // I_s, unit range
    ImageRGB reference;  // I_ref, unit range
    DepthMap pose_depth; // D_p, normalized, background -1
    BinaryMask mask;     // M, scene-keep convention
};

InferenceInputs inference_inputs_from_record(const TrainingRecord& rec);

struct InferenceResult {
    ImageRGB composite;
    std::optional<DepthMap> intermediate_depth; // two-stage only
    long backbone_evals = 0;
};

InferenceResult infer_direct(const InferenceInputs& in, const Checkpoint& ckpt,
                             const GuidanceConfig& guidance, const RunConfig& cfg,
                             const BackendRegistry& reg);

InferenceResult infer_two_stage(const InferenceInputs& in, const Checkpoint& ckpt_stage1,
                                const Checkpoint& ckpt_stage2, const GuidanceConfig& guidance,
                                const RunConfig& cfg, const BackendRegistry& reg);

} // namespace inscene
