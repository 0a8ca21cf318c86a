#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "inscene/errors.hpp"

namespace inscene {

enum class ValueRange {
    unit,    // [0, 1], storage range
    signed_, // [-1, 1], model I/O range
};

enum class DepthNorm {
    raw,        // unnormalized estimator/renderer output
    minmax,     // min -> -1, max -> +1
    percentile, // 2%/98% quantiles -> -1/+1, clamped
};

std::string to_string(DepthNorm n);
DepthNorm depth_norm_from_string(const std::string& s);

// H x W x 3 interleaved image.
struct ImageRGB {
    int height = 0;
    int width = 0;
    ValueRange range = ValueRange::unit;
    std::vector<double> data;

    ImageRGB() = default;
    ImageRGB(int h, int w, ValueRange r, double fill = 0.0)
        : height(h), width(w), range(r), data(static_cast<size_t>(h) * w * 3, fill) {}

    static ImageRGB constant(int h, int w, const std::array<double, 3>& rgb,
                             ValueRange r = ValueRange::unit) {
        ImageRGB img(h, w, r);
        for (int i = 0; i < h * w; ++i)
            for (int c = 0; c < 3; ++c) img.data[static_cast<size_t>(i) * 3 + c] = rgb[c];
        return img;
    }

    double& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    double at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }

    void validate() const;
};

// H x W single-channel depth map.
struct DepthMap {
    int height = 0;
    int width = 0;
    DepthNorm norm = DepthNorm::raw;
    std::vector<double> data;

    DepthMap() = default;
    DepthMap(int h, int w, DepthNorm n, double fill = 0.0)
        : height(h), width(w), norm(n), data(static_cast<size_t>(h) * w, fill) {}

    double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }

    void validate() const;
};

// H x W mask over {0, 1}. Convention: 1 = scene kept, 0 = insertion region.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int h, int w, uint8_t fill = 0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    uint8_t& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }

    size_t count_ones() const;
    size_t count_zeros() const { return data.size() - count_ones(); }

    void validate() const;
};

// C x h x w planar tensor (latent representations and conditioning stacks).
struct LatentTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    LatentTensor() = default;
    LatentTensor(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w), data(static_cast<size_t>(c) * h * w, fill) {}

    double& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }

    bool same_shape(const LatentTensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    void validate_finite(const char* what) const;
};

// tokens x width reference-encoder output.
struct Embedding {
    int tokens = 0;
    int width = 0;
    std::vector<double> data;

    Embedding() = default;
    Embedding(int t, int w) : tokens(t), width(w), data(static_cast<size_t>(t) * w, 0.0) {}

    bool operator==(const Embedding& o) const = default;
};

// Axis-aligned box, [x0, x1) x [y0, y1) in pixel coordinates.
struct BBox {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool empty() const { return width() <= 0 || height() <= 0; }
};

ImageRGB to_signed(const ImageRGB& img);
ImageRGB to_unit(const ImageRGB& img);

// Rec. 601 luma of a unit-range image.
double luminance(double r, double g, double b);

} // namespace inscene
