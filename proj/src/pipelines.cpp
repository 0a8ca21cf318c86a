#include "inscene/pipelines.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "inscene/conv_backbone.hpp"
#include "inscene/image_io.hpp"
#include "inscene/imaging.hpp"
#include "inscene/log.hpp"

namespace inscene {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig RunConfig::from_config(const KeyValueConfig& cfg) {
    RunConfig rc;
    rc.raw = cfg;
    rc.backends = cfg.get_string("backends", rc.backends);
    rc.resolution = cfg.get_int("resolution", rc.resolution);
    rc.latent_channels = cfg.get_int("latent_channels", rc.latent_channels);
    rc.spatial_factor = cfg.get_int("spatial_factor", rc.spatial_factor);
    rc.hidden_channels = cfg.get_int("hidden_channels", rc.hidden_channels);
    rc.context_width = cfg.get_int("context_width", rc.context_width);
    rc.t_train = cfg.get_int("t_train", rc.t_train);
    rc.schedule = cfg.get_string("schedule", rc.schedule);
    rc.steps = cfg.get_long("steps", rc.steps);
    rc.epochs = cfg.get_int("epochs", rc.epochs);
    rc.batch_size = cfg.get_int("batch_size", rc.batch_size);
    rc.warmup_steps = cfg.get_long("warmup_steps", rc.warmup_steps);
    rc.lr_init = cfg.get_double("lr_init", rc.lr_init);
    rc.lr_base = cfg.get_double("lr_base", rc.lr_base);
    rc.weight_decay = cfg.get_double("weight_decay", rc.weight_decay);
    rc.dropout_prob = cfg.get_double("dropout_prob", rc.dropout_prob);
    rc.augment.flip_prob = cfg.get_double("augment_flip_prob", rc.augment.flip_prob);
    rc.augment.jitter = cfg.get_double("augment_jitter", rc.augment.jitter);
    rc.guidance.w = cfg.get_double("guidance_scale", rc.guidance.w);
    rc.guidance.steps = cfg.get_int("inference_steps", rc.guidance.steps);
    rc.dilation_radius = cfg.get_int("dilation_radius", rc.dilation_radius);
    rc.fill_color = cfg.get_rgb("fill_color", rc.fill_color);
    rc.inpaint_prompt = cfg.get_string("inpaint_prompt", rc.inpaint_prompt);
    rc.frames_per_video = cfg.get_int("frames_per_video", rc.frames_per_video);
    rc.pairs_per_video = cfg.get_int("pairs_per_video", rc.pairs_per_video);
    rc.val_fraction = cfg.get_double("val_fraction", rc.val_fraction);
    rc.test_fraction = cfg.get_double("test_fraction", rc.test_fraction);
    rc.val_every = cfg.get_long("val_every", rc.val_every);
    rc.seed = cfg.get_u64("seed", rc.seed);
    rc.guidance.seed = Rng::derive(rc.seed, "sample");

    if (rc.resolution <= 0 || rc.resolution % rc.spatial_factor != 0)
        throw ValidationError("resolution must be a positive multiple of spatial_factor");
    if (rc.batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (rc.epochs < 0 || rc.steps < 0) throw ValidationError("negative training length");
    rc.guidance.validate();
    return rc;
}

RunConfig RunConfig::load(const fs::path& path) {
    return from_config(KeyValueConfig::load(path));
}

uint64_t RunConfig::model_hash() const {
    KeyValueConfig sub;
    sub.set("backends", backends);
    sub.set("resolution", std::to_string(resolution));
    sub.set("latent_channels", std::to_string(latent_channels));
    sub.set("spatial_factor", std::to_string(spatial_factor));
    sub.set("hidden_channels", std::to_string(hidden_channels));
    sub.set("context_width", std::to_string(context_width));
    sub.set("t_train", std::to_string(t_train));
    sub.set("schedule", schedule);
    return sub.hash();
}

NoiseSchedule RunConfig::make_schedule() const {
    if (schedule == "linear") return NoiseSchedule::linear(t_train);
    if (schedule == "scaled_linear") return NoiseSchedule::scaled_linear(t_train);
    return NoiseSchedule::from_id(schedule);
}

BackendRegistry RunConfig::make_backends() const {
    // The environment can point at a different provider set without touching
    // the config file.
    std::string name = backends;
    if (const char* env = std::getenv("INSCENE_BACKENDS"); env && *env) name = env;
    return make_registry(name, raw);
}

PrepareParams RunConfig::prepare_params() const {
    PrepareParams p;
    p.record.resolution = resolution;
    p.record.dilation_radius = dilation_radius;
    p.record.fill_color = fill_color;
    p.record.inpaint_prompt = inpaint_prompt;
    p.record.config_hash = config_hash();
    p.frames_per_video = frames_per_video;
    p.pairs_per_video = pairs_per_video;
    p.val_fraction = val_fraction;
    p.test_fraction = test_fraction;
    return p;
}

namespace {

constexpr char kCheckpointMagic[8] = {'I', 'N', 'S', 'C', 'K', 'P', 'T', '1'};

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
    json header{{"stage", to_string(ckpt.stage)},
                {"backbone_kind", ckpt.backbone_kind},
                {"input_channels", ckpt.input_channels},
                {"latent_channels", ckpt.latent_channels},
                {"hidden_channels", ckpt.hidden_channels},
                {"context_width", ckpt.context_width},
                {"t_train", ckpt.t_train},
                {"schedule_id", ckpt.schedule_id},
                {"config_hash", hash_hex(ckpt.config_hash)},
                {"model_hash", hash_hex(ckpt.model_hash)},
                {"step", ckpt.step},
                {"param_count", ckpt.params.size()}};
    const std::string header_str = header.dump();

    std::string bytes(kCheckpointMagic, sizeof kCheckpointMagic);
    const uint32_t len = static_cast<uint32_t>(header_str.size());
    bytes.append(reinterpret_cast<const char*>(&len), sizeof len);
    bytes.append(header_str);
    bytes.append(reinterpret_cast<const char*>(ckpt.params.data()),
                 ckpt.params.size() * sizeof(double));
    atomic_write_text(path, bytes);
}

Checkpoint load_checkpoint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < sizeof(kCheckpointMagic) + sizeof(uint32_t) ||
        std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
        throw ValidationError("not a checkpoint file: " + path.string());
    uint32_t len = 0;
    std::memcpy(&len, bytes.data() + sizeof kCheckpointMagic, sizeof len);
    const size_t header_off = sizeof(kCheckpointMagic) + sizeof(uint32_t);
    if (bytes.size() < header_off + len) throw ValidationError("truncated checkpoint header");

    json header;
    try {
        header = json::parse(bytes.substr(header_off, len));
    } catch (const json::exception& e) {
        throw ValidationError("bad checkpoint header: " + std::string(e.what()));
    }

    Checkpoint ckpt;
    ckpt.stage = stage_from_string(header.at("stage").get<std::string>());
    ckpt.backbone_kind = header.at("backbone_kind").get<std::string>();
    ckpt.input_channels = header.at("input_channels").get<int>();
    ckpt.latent_channels = header.at("latent_channels").get<int>();
    ckpt.hidden_channels = header.at("hidden_channels").get<int>();
    ckpt.context_width = header.at("context_width").get<int>();
    ckpt.t_train = header.at("t_train").get<int>();
    ckpt.schedule_id = header.at("schedule_id").get<std::string>();
    ckpt.config_hash = std::stoull(header.at("config_hash").get<std::string>(), nullptr, 16);
    ckpt.model_hash = std::stoull(header.at("model_hash").get<std::string>(), nullptr, 16);
    ckpt.step = header.at("step").get<long>();
    const size_t count = header.at("param_count").get<size_t>();

    const size_t payload = header_off + len;
    if (bytes.size() - payload != count * sizeof(double))
        throw ValidationError("checkpoint payload size mismatch");
    ckpt.params.resize(count);
    std::memcpy(ckpt.params.data(), bytes.data() + payload, count * sizeof(double));
    return ckpt;
}

std::unique_ptr<TrainableBackbone> backbone_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.backbone_kind != "conv2")
        throw ValidationError("unknown backbone kind in checkpoint: " + ckpt.backbone_kind);
    if (ckpt.input_channels != backbone_input_channels(ckpt.stage, ckpt.latent_channels))
        throw ValidationError("checkpoint channel arithmetic does not match its stage");
    auto model = std::make_unique<TwoLayerConvBackbone>(
        ckpt.input_channels, ckpt.latent_channels, ckpt.hidden_channels, ckpt.context_width,
        ckpt.t_train, /*seed=*/0);
    auto dst = model->params();
    if (dst.size() != ckpt.params.size())
        throw ValidationError("checkpoint parameter count mismatch");
    std::copy(ckpt.params.begin(), ckpt.params.end(), dst.begin());
    return model;
}

namespace {

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

ConditioningBundle build_training_bundle(StageKind stage, const TrainingRecord& rec,
                                         const BackendRegistry& reg, const ImageRGB* ref_aug) {
    switch (stage) {
        case StageKind::stage1_depth: return build_stage1(rec, reg, ref_aug);
        case StageKind::stage2_rgb: return build_stage2(rec, rec.depth_gt, reg, ref_aug);
        case StageKind::direct: return build_direct(rec, reg, ref_aug);
    }
    throw ValidationError("bad stage");
}

} // namespace

TrainResult train(StageKind stage, const std::vector<TrainingRecord>& train_set,
                  const std::vector<TrainingRecord>& val_set, const RunConfig& cfg,
                  const BackendRegistry& reg) {
    if (train_set.empty()) throw ValidationError("train: empty dataset");
    reg.validate();

    const NoiseSchedule schedule = cfg.make_schedule();
    const int C = reg.autoencoder->spec().latent_channels;
    const int in_ch = backbone_input_channels(stage, C);

    // Start from a seeded "pretrained" base with inpainting-style channels
    // (latent + mask + masked latent), grafted to the stage's arithmetic.
    const int base_ch = 2 * C + 1;
    auto base = reg.make_backbone(base_ch, Rng::derive(cfg.seed, "init"));
    auto model_owned = adapt_input_channels(*base, in_ch);
    auto* model = dynamic_cast<TwoLayerConvBackbone*>(model_owned.get());
    if (!model) throw ValidationError("training requires the conv backbone double");

    AdamW opt(model->params().size(), AdamWConfig{.weight_decay = cfg.weight_decay});
    Rng data_rng(Rng::derive(cfg.seed, "data"));
    Rng noise_rng(Rng::derive(cfg.seed, "noise"));
    Rng dropout_rng(Rng::derive(cfg.seed, "dropout"));

    const long n = static_cast<long>(train_set.size());
    const long steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const long total_steps = cfg.steps > 0 ? cfg.steps : cfg.epochs * steps_per_epoch;
    if (total_steps <= 0) throw ValidationError("train: zero training steps");

    // Fixed validation draws so that the convergence criterion is comparable
    // across evaluations.
    const std::vector<TrainingRecord>& val = val_set.empty() ? train_set : val_set;
    std::vector<NoiseDraw> val_draws;
    std::vector<ConditioningBundle> val_bundles;
    {
        Rng val_rng(Rng::derive(cfg.seed, "val"));
        Rng val_drop(Rng::derive(cfg.seed, "val-drop"));
        for (const auto& rec : val) {
            ConditioningBundle b = build_training_bundle(stage, rec, reg, nullptr);
            val_draws.push_back(draw_training_noise(b, schedule, 0.0, val_rng, val_drop));
            val_bundles.push_back(std::move(b));
        }
    }

    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_params(model->params().begin(), model->params().end());
    long best_step = 0;

    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    size_t cursor = order.size(); // force reshuffle at step 0

    std::vector<double> grad_acc(model->params().size());
    for (long step = 0; step < total_steps; ++step) {
        const double lr = warmup_lr(step, cfg.warmup_steps, cfg.lr_init, cfg.lr_base);
        std::fill(grad_acc.begin(), grad_acc.end(), 0.0);
        double loss_acc = 0.0;

        const int batch = static_cast<int>(std::min<long>(cfg.batch_size, n));
        for (int bi = 0; bi < batch; ++bi) {
            if (cursor >= order.size()) {
                // Fisher-Yates reshuffle per epoch.
                for (size_t i = order.size(); i > 1; --i) {
                    const size_t j = static_cast<size_t>(data_rng.uniform_int(static_cast<int>(i)));
                    std::swap(order[i - 1], order[j]);
                }
                cursor = 0;
            }
            const TrainingRecord& rec = train_set[order[cursor++]];

            const ImageRGB ref_aug =
                augment_reference(rec.reference, rec.fill_color, cfg.augment, data_rng);
            const ConditioningBundle bundle = build_training_bundle(stage, rec, reg, &ref_aug);
            const NoiseDraw draw =
                draw_training_noise(bundle, schedule, cfg.dropout_prob, noise_rng, dropout_rng);
            LossGrad lg = training_loss_grad(bundle, *model, schedule, draw);
            loss_acc += lg.loss;
            for (size_t i = 0; i < grad_acc.size(); ++i) grad_acc[i] += lg.grad[i];
        }

        const double inv_b = 1.0 / batch;
        for (double& g : grad_acc) g *= inv_b;
        const double loss = loss_acc * inv_b;
        if (!std::isfinite(loss))
            throw std::runtime_error("training diverged: non-finite loss at step " +
                                     std::to_string(step));
        result.loss_curve.push_back(loss);

        opt.step(model->params(), grad_acc, lr);

        if (cfg.val_every > 0 && (step % cfg.val_every == 0 || step == total_steps - 1)) {
            double vloss = 0.0;
            for (size_t i = 0; i < val_bundles.size(); ++i)
                vloss += training_loss(val_bundles[i], *model, schedule, val_draws[i]);
            vloss /= static_cast<double>(val_bundles.size());
            result.val_curve.push_back(vloss);
            if (vloss < best_val) {
                best_val = vloss;
                best_params.assign(model->params().begin(), model->params().end());
                best_step = step;
            }
            log_kv("train", {{"stage", to_string(stage)},
                             {"step", std::to_string(step)},
                             {"loss", std::to_string(loss)},
                             {"val_loss", std::to_string(vloss)},
                             {"lr", std::to_string(lr)},
                             {"config", hash_hex(cfg.config_hash())}});
        }
    }

    Checkpoint ckpt;
    ckpt.stage = stage;
    ckpt.input_channels = in_ch;
    ckpt.latent_channels = C;
    ckpt.hidden_channels = model->hidden_channels();
    ckpt.context_width = reg.reference->width();
    ckpt.t_train = schedule.t_train();
    ckpt.schedule_id = schedule.id();
    ckpt.config_hash = cfg.config_hash();
    ckpt.model_hash = cfg.model_hash();
    ckpt.step = best_step;
    ckpt.params = std::move(best_params);
    result.checkpoint = std::move(ckpt);
    return result;
}

InferenceInputs inference_inputs_from_record(const TrainingRecord& rec) {
    // Deliberately narrow: scene, reference, pose depth and mask only. The
    // ground-truth image and depth never cross this boundary.
    return InferenceInputs{rec.scene, rec.reference, rec.depth_pose, rec.mask};
}

namespace {

struct PreparedInference {
    DepthMap scene_depth;
    SceneInputs inputs;
};

PreparedInference prepare_inference(const InferenceInputs& in, const RunConfig& cfg,
                                    const BackendRegistry& reg) {
    in.scene.validate();
    in.reference.validate();
    in.pose_depth.validate();
    in.mask.validate();
    if (in.pose_depth.norm == DepthNorm::raw)
        throw ValidationError("inference pose depth must be normalized");
    if (in.mask.count_zeros() == 0)
        log_kv("warn", {{"msg", "mask has no insertion region; placement left to the model"}});

    PreparedInference prep;
    // The scene depth is always recomputed from the scene image.
    prep.scene_depth = normalize_depth(reg.depth->estimate_depth(in.scene), DepthNorm::percentile);
    prep.inputs.scene = &in.scene;
    prep.inputs.scene_depth = &prep.scene_depth;
    prep.inputs.pose_depth = &in.pose_depth;
    prep.inputs.mask = &in.mask;
    (void)cfg;
    return prep;
}

void check_stage(const Checkpoint& ckpt, StageKind want, const RunConfig& cfg) {
    if (ckpt.stage != want)
        throw ValidationError("checkpoint stage is " + to_string(ckpt.stage) + ", expected " +
                              to_string(want));
    if (ckpt.model_hash != cfg.model_hash())
        throw ValidationError(
            "checkpoint model hash " + hash_hex(ckpt.model_hash) +
            " does not match the run config (" + hash_hex(cfg.model_hash()) +
            "); it was trained under a different model configuration");
}

} // namespace

InferenceResult infer_direct(const InferenceInputs& in, const Checkpoint& ckpt,
                             const GuidanceConfig& guidance, const RunConfig& cfg,
                             const BackendRegistry& reg) {
    reg.validate();
    check_stage(ckpt, StageKind::direct, cfg);
    const auto model = backbone_from_checkpoint(ckpt);
    const CountingBackbone counted(*model);
    const NoiseSchedule schedule = NoiseSchedule::from_id(ckpt.schedule_id);

    PreparedInference prep = prepare_inference(in, cfg, reg);
    const ConditioningBundle bundle =
        build_direct(prep.inputs, in.reference, cfg.fill_color, reg);

    Rng rng(guidance.seed);
    const LatentTensor z = sample(bundle, counted, schedule, guidance, rng);

    InferenceResult out;
    out.composite = to_unit(reg.autoencoder->decode(z));
    out.backbone_evals = counted.count();
    return out;
}

InferenceResult infer_two_stage(const InferenceInputs& in, const Checkpoint& ckpt_stage1,
                                const Checkpoint& ckpt_stage2, const GuidanceConfig& guidance,
                                const RunConfig& cfg, const BackendRegistry& reg) {
    reg.validate();
    check_stage(ckpt_stage1, StageKind::stage1_depth, cfg);
    check_stage(ckpt_stage2, StageKind::stage2_rgb, cfg);
    const auto model1 = backbone_from_checkpoint(ckpt_stage1);
    const auto model2 = backbone_from_checkpoint(ckpt_stage2);
    const CountingBackbone counted1(*model1);
    const CountingBackbone counted2(*model2);
    const NoiseSchedule schedule1 = NoiseSchedule::from_id(ckpt_stage1.schedule_id);
    const NoiseSchedule schedule2 = NoiseSchedule::from_id(ckpt_stage2.schedule_id);

    PreparedInference prep = prepare_inference(in, cfg, reg);

    // Stage 1: predict the composite's depth map.
    const ConditioningBundle bundle1 =
        build_stage1(prep.inputs, in.reference, cfg.fill_color, reg);
    GuidanceConfig g1 = guidance;
    g1.seed = Rng::derive(guidance.seed, "stage1");
    Rng rng1(g1.seed);
    const LatentTensor z1 = sample(bundle1, counted1, schedule1, g1, rng1);

    // Decoded three-channel depth -> single channel -> clamp. No
    // re-normalization: stage 2 was trained against R(D_GT)'s scale.
    const ImageRGB decoded_depth = reg.autoencoder->decode(z1);
    DepthMap d_hat = clamp_depth(average_channels(decoded_depth), -1.0, 1.0,
                                 DepthNorm::percentile);

    // Stage 2: synthesize the composite conditioned on the estimated depth.
    const ConditioningBundle bundle2 =
        build_stage2(prep.inputs, d_hat, in.reference, cfg.fill_color, reg);
    GuidanceConfig g2 = guidance;
    g2.seed = Rng::derive(guidance.seed, "stage2");
    Rng rng2(g2.seed);
    const LatentTensor z2 = sample(bundle2, counted2, schedule2, g2, rng2);

    InferenceResult out;
    out.composite = to_unit(reg.autoencoder->decode(z2));
    out.intermediate_depth = std::move(d_hat);
    out.backbone_evals = counted1.count() + counted2.count();
    return out;
}

} // namespace inscene
