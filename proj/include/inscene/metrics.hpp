#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "inscene/backends.hpp"
#include "inscene/dataset.hpp"
#include "inscene/types.hpp"

namespace inscene {

// Mean squared difference over all pixels and channels, unit range.
double mse_metric(const ImageRGB& a, const ImageRGB& b);

// Mean local SSIM on luminance: 11x11 gaussian window (sigma 1.5), standard
// stabilization constants, averaged over valid window positions.
double ssim_metric(const ImageRGB& a, const ImageRGB& b);
double ssim_gray(const std::vector<double>& a, const std::vector<double>& b, int h, int w);

double cosine_similarity(const Embedding& a, const Embedding& b);

// Cosine similarity of reference-encoder embeddings of the two images.
double embedding_similarity(const ImageRGB& a, const ImageRGB& b, const ReferenceEncoder& enc);

struct DepthScores {
    double ssim = 0.0;
    double mse = 0.0;
};

// Estimates depth on both images, percentile-normalizes, maps to unit range,
// then scores with SSIM/MSE.
DepthScores depth_consistency(const ImageRGB& gen, const ImageRGB& gt,
                              const MonocularDepthEstimator& estimator);

// Deterministic pairwise tree reduction.
double tree_sum(const std::vector<double>& values);

// Fixed column order: method, SSIM, MSE, sim, depth_SSIM, depth_MSE.
// Annotation rows carry verbatim string cells (reported reference values, not
// pass/fail targets); computed rows are formatted from doubles.
struct EvalRow {
    std::string method;
    std::array<std::string, 5> cells; // empty string -> NA
    bool annotation = false;
};

struct EvalReport {
    std::string dataset_id;
    uint64_t config_hash = 0;
    int evaluated = 0;
    int missing = 0;
    std::vector<EvalRow> rows;

    std::string to_text() const;
    std::string to_csv() const;
};

struct EvaluateOptions {
    std::string method_name = "ours";
    bool region_only = false; // metrics over the insertion bbox instead of the full image
};

// Scores predictions (record id -> composite) against the records' ground
// truth; missing predictions become NA cells and are reported as missing.
// Aggregation order is record-id order, so permuting inputs changes nothing.
EvalReport evaluate(const std::vector<TrainingRecord>& records,
                    const std::map<std::string, ImageRGB>& predictions,
                    const BackendRegistry& reg, const EvaluateOptions& options = {});

} // namespace inscene
