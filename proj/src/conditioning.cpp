#include "inscene/conditioning.hpp"

#include "inscene/dataset.hpp"
#include "inscene/imaging.hpp"

namespace inscene {

std::string to_string(StageKind s) {
    switch (s) {
        case StageKind::stage1_depth: return "stage1";
        case StageKind::stage2_rgb: return "stage2";
        case StageKind::direct: return "direct";
    }
    return "direct";
}

StageKind stage_from_string(const std::string& s) {
    if (s == "stage1" || s == "stage1_depth") return StageKind::stage1_depth;
    if (s == "stage2" || s == "stage2_rgb") return StageKind::stage2_rgb;
    if (s == "direct") return StageKind::direct;
    throw ValidationError("unknown stage: " + s);
}

int cond_channels(StageKind stage, int latent_channels) {
    switch (stage) {
        case StageKind::stage1_depth: return 3 * latent_channels + 2;
        case StageKind::stage2_rgb: return latent_channels + 3;
        case StageKind::direct: return 2 * latent_channels + 3;
    }
    throw ValidationError("bad stage");
}

int backbone_input_channels(StageKind stage, int latent_channels) {
    return latent_channels + cond_channels(stage, latent_channels);
}

void ConditioningBundle::check_channels() const {
    const int want = cond_channels(stage, latent_channels);
    if (cond.channels != want)
        throw ChannelMismatchError("conditioning for " + to_string(stage) + " has " +
                                   std::to_string(cond.channels) + " channels, want " +
                                   std::to_string(want));
    if (target_latent && (target_latent->channels != latent_channels ||
                          target_latent->height != cond.height ||
                          target_latent->width != cond.width))
        throw ChannelMismatchError("target latent shape mismatch");
}

namespace {

void append_channels(LatentTensor& dst, const LatentTensor& src, const char* what) {
    if (dst.channels == 0) {
        dst = src;
        return;
    }
    if (dst.height != src.height || dst.width != src.width)
        throw ChannelMismatchError(std::string("concat spatial mismatch at ") + what);
    dst.data.insert(dst.data.end(), src.data.begin(), src.data.end());
    dst.channels += src.channels;
}

LatentTensor encode_image(const Autoencoder& ae, const ImageRGB& img) {
    return ae.encode(to_signed(img));
}

LatentTensor encode_depth(const Autoencoder& ae, const DepthMap& d) {
    // Single-channel depth maps are replicated to three channels before E.
    return ae.encode(replicate_channels(d));
}

void require(const SceneInputs& in) {
    if (!in.scene || !in.scene_depth || !in.pose_depth || !in.mask)
        throw ValidationError("conditioning inputs incomplete");
    const int h = in.scene->height, w = in.scene->width;
    if (in.scene_depth->height != h || in.scene_depth->width != w ||
        in.pose_depth->height != h || in.pose_depth->width != w || in.mask->height != h ||
        in.mask->width != w)
        throw ValidationError("conditioning inputs differ in resolution");
    if (in.scene_depth->norm == DepthNorm::raw || in.pose_depth->norm == DepthNorm::raw)
        throw ValidationError("conditioning depth maps must be normalized");
}

} // namespace

std::pair<Embedding, Embedding> reference_embeddings(const ImageRGB& reference,
                                                     const std::array<double, 3>& fill,
                                                     const ReferenceEncoder& encoder,
                                                     NullEmbeddingCache* cache) {
    Embedding c_ref = encoder.embed_reference(reference);
    auto compute_null = [&]() {
        const ImageRGB blank =
            ImageRGB::constant(reference.height, reference.width, fill, ValueRange::unit);
        return encoder.embed_reference(blank);
    };
    Embedding c_null = cache ? cache->get_or_compute(fill, compute_null) : compute_null();
    return {std::move(c_ref), std::move(c_null)};
}

ConditioningBundle build_stage1(const SceneInputs& in, const ImageRGB& reference,
                                const std::array<double, 3>& fill, const BackendRegistry& reg) {
    require(in);
    const auto& ae = *reg.autoencoder;
    const int f = ae.spec().spatial_factor;

    ConditioningBundle b;
    b.stage = StageKind::stage1_depth;
    b.latent_channels = ae.spec().latent_channels;

    // cat(E(M*D_s), E(I_s), E(D_s), R(D_p), R(M))
    append_channels(b.cond, encode_depth(ae, apply_mask(*in.scene_depth, *in.mask)), "E(M*D_s)");
    append_channels(b.cond, encode_image(ae, *in.scene), "E(I_s)");
    append_channels(b.cond, encode_depth(ae, *in.scene_depth), "E(D_s)");
    append_channels(b.cond, resize_to_latent(*in.pose_depth, f), "R(D_p)");
    append_channels(b.cond, resize_to_latent(*in.mask, f), "R(M)");

    auto [c_ref, c_null] = reference_embeddings(reference, fill, *reg.reference, reg.null_cache.get());
    b.c_ref = std::move(c_ref);
    b.c_null = std::move(c_null);
    b.check_channels();
    return b;
}

ConditioningBundle build_stage2(const SceneInputs& in, const DepthMap& d_cond,
                                const ImageRGB& reference, const std::array<double, 3>& fill,
                                const BackendRegistry& reg) {
    require(in);
    if (d_cond.height != in.scene->height || d_cond.width != in.scene->width)
        throw ValidationError("stage2 conditioning depth resolution mismatch");
    if (d_cond.norm == DepthNorm::raw)
        throw ValidationError("stage2 conditioning depth must be normalized");
    const auto& ae = *reg.autoencoder;
    const int f = ae.spec().spatial_factor;

    ConditioningBundle b;
    b.stage = StageKind::stage2_rgb;
    b.latent_channels = ae.spec().latent_channels;

    // cat(E(I_s), R(D_cond), R(D_s), R(D_p)); D_cond is D_GT when training,
    // the stage-1 estimate at inference.
    append_channels(b.cond, encode_image(ae, *in.scene), "E(I_s)");
    append_channels(b.cond, resize_to_latent(d_cond, f), "R(D_cond)");
    append_channels(b.cond, resize_to_latent(*in.scene_depth, f), "R(D_s)");
    append_channels(b.cond, resize_to_latent(*in.pose_depth, f), "R(D_p)");

    auto [c_ref, c_null] = reference_embeddings(reference, fill, *reg.reference, reg.null_cache.get());
    b.c_ref = std::move(c_ref);
    b.c_null = std::move(c_null);
    b.check_channels();
    return b;
}

ConditioningBundle build_direct(const SceneInputs& in, const ImageRGB& reference,
                                const std::array<double, 3>& fill, const BackendRegistry& reg) {
    require(in);
    const auto& ae = *reg.autoencoder;
    const int f = ae.spec().spatial_factor;

    ConditioningBundle b;
    b.stage = StageKind::direct;
    b.latent_channels = ae.spec().latent_channels;

    // cat(E(M*I_s), E(I_s), R(D_s), R(D_p), R(M)); the mask is applied in the
    // signed model range so masked pixels read mid-gray, matching how the
    // pretrained inpainting backbones are fed.
    append_channels(b.cond, ae.encode(apply_mask(to_signed(*in.scene), *in.mask)), "E(M*I_s)");
    append_channels(b.cond, encode_image(ae, *in.scene), "E(I_s)");
    append_channels(b.cond, resize_to_latent(*in.scene_depth, f), "R(D_s)");
    append_channels(b.cond, resize_to_latent(*in.pose_depth, f), "R(D_p)");
    append_channels(b.cond, resize_to_latent(*in.mask, f), "R(M)");

    auto [c_ref, c_null] = reference_embeddings(reference, fill, *reg.reference, reg.null_cache.get());
    b.c_ref = std::move(c_ref);
    b.c_null = std::move(c_null);
    b.check_channels();
    return b;
}

namespace {

SceneInputs scene_inputs_of(const TrainingRecord& rec) {
    SceneInputs in;
    in.scene = &rec.scene;
    in.scene_depth = &rec.depth_scene;
    in.pose_depth = &rec.depth_pose;
    in.mask = &rec.mask;
    return in;
}

} // namespace

ConditioningBundle build_stage1(const TrainingRecord& rec, const BackendRegistry& reg,
                                const ImageRGB* reference_override) {
    const ImageRGB& ref = reference_override ? *reference_override : rec.reference;
    ConditioningBundle b = build_stage1(scene_inputs_of(rec), ref, rec.fill_color, reg);
    b.target_latent = encode_depth(*reg.autoencoder, rec.depth_gt);
    b.check_channels();
    return b;
}

ConditioningBundle build_stage2(const TrainingRecord& rec, const DepthMap& d_cond,
                                const BackendRegistry& reg, const ImageRGB* reference_override) {
    const ImageRGB& ref = reference_override ? *reference_override : rec.reference;
    ConditioningBundle b = build_stage2(scene_inputs_of(rec), d_cond, ref, rec.fill_color, reg);
    b.target_latent = reg.autoencoder->encode(to_signed(rec.gt));
    b.check_channels();
    return b;
}

ConditioningBundle build_direct(const TrainingRecord& rec, const BackendRegistry& reg,
                                const ImageRGB* reference_override) {
    const ImageRGB& ref = reference_override ? *reference_override : rec.reference;
    ConditioningBundle b = build_direct(scene_inputs_of(rec), ref, rec.fill_color, reg);
    b.target_latent = reg.autoencoder->encode(to_signed(rec.gt));
    b.check_channels();
    return b;
}

} // namespace inscene
