#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "inscene/backends.hpp"
#include "inscene/rng.hpp"
#include "inscene/types.hpp"

namespace inscene {

// The inpainting prompt from the dataset recipe; overridable in config.
inline constexpr const char* kDefaultInpaintPrompt = "empty scenery, highly detailed, no people";

// Reference background fill: constant mid-gray, which also defines the
// unconditional image.
inline constexpr std::array<double, 3> kDefaultFillColor = {0.5, 0.5, 0.5};

inline constexpr int kMinBBoxSide = 4;

enum class SkipReason {
    no_person,
    degenerate_bbox,
    empty_silhouette,
    fit_failure,
    too_few_frames,
};

std::string to_string(SkipReason r);

struct FramePair {
    ImageRGB reference_frame;
    ImageRGB gt_frame;
    std::string video_id;
    int ref_index = -1;
    int gt_index = -1;
};

// One supervised example, all maps at the same resolution.
struct TrainingRecord {
    std::string id;
    ImageRGB gt;        // I_GT
    ImageRGB scene;     // I_s (person inpainted away)
    ImageRGB reference; // I_ref on the constant fill background
    std::array<double, 3> fill_color = kDefaultFillColor;
    DepthMap depth_gt;    // D_GT, percentile-normalized
    DepthMap depth_scene; // D_s, percentile-normalized
    DepthMap depth_pose;  // D_p, minmax over body pixels, background -1
    BinaryMask mask;      // M, scene-keep convention

    std::string video_id;
    int ref_frame = -1;
    int gt_frame = -1;
    int dilation_radius = 0;
    uint64_t config_hash = 0;

    void validate() const;
};

// Evenly spaced frame indices: stride floor((N-1)/(k-1)), endpoints from 0.
// k >= N returns all N indices.
std::vector<int> sample_frames(int frame_count, int k);

// Square crop centered on the bbox, expanded to cover it, reflection-padded
// at frame borders, resized to out_size.
ImageRGB crop_person(const ImageRGB& frame, const BBox& bbox, int out_size);

// Person pixels kept and re-centered on a constant fill canvas.
ImageRGB extract_reference(const ImageRGB& frame, const BinaryMask& silhouette,
                           const std::array<double, 3>& fill);

struct AugmentConfig {
    double flip_prob = 0.5;
    double jitter = 0.1; // brightness/contrast amplitude, person pixels only
};

ImageRGB augment_reference(const ImageRGB& reference, const std::array<double, 3>& fill,
                           const AugmentConfig& cfg, Rng& rng);

struct RecordBuildParams {
    int resolution = 512;
    int dilation_radius = 12;
    std::array<double, 3> fill_color = kDefaultFillColor;
    std::string inpaint_prompt = kDefaultInpaintPrompt;
    uint64_t config_hash = 0;
};

struct BuildOutcome {
    std::optional<TrainingRecord> record;
    std::optional<SkipReason> skip;
};

BuildOutcome build_record(const FramePair& pair, const BackendRegistry& reg,
                          const RecordBuildParams& params);

// Directory-per-record layout with fixed filenames:
//   gt.ppm scene.ppm ref.ppm depth_gt.pgm depth_scene.pgm depth_pose.pgm
//   mask.pgm meta.txt
// Writes are atomic (temp dir + rename); partial records never appear.
void write_record(const TrainingRecord& rec, const std::filesystem::path& dataset_dir);
TrainingRecord read_record(const std::filesystem::path& record_dir);

struct ManifestEntry {
    std::string id;
    std::string split; // train | val | test
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    uint64_t config_hash = 0;

    std::map<std::string, int> counts() const;
};

void write_manifest(const DatasetManifest& m, const std::filesystem::path& dataset_dir);
DatasetManifest read_manifest(const std::filesystem::path& dataset_dir);

// Loads records of one split ("" = all), sorted by id.
std::vector<TrainingRecord> load_records(const std::filesystem::path& dataset_dir,
                                         const std::string& split = "");

struct PrepareParams {
    RecordBuildParams record;
    int frames_per_video = 30;
    int pairs_per_video = 4;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
};

struct PrepareStats {
    int written = 0;
    std::map<SkipReason, int> skipped;
};

// Videos are directories of frame images (sorted by filename) under
// videos_dir. Deterministic given (frames, seed, params).
PrepareStats prepare_dataset(const std::filesystem::path& videos_dir,
                             const std::filesystem::path& out_dir, const BackendRegistry& reg,
                             const PrepareParams& params, uint64_t seed);

} // namespace inscene
