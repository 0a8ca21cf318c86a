#include "inscene/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace inscene {

std::string to_string(DepthNorm n) {
    switch (n) {
        case DepthNorm::raw: return "raw";
        case DepthNorm::minmax: return "minmax";
        case DepthNorm::percentile: return "percentile";
    }
    return "raw";
}

DepthNorm depth_norm_from_string(const std::string& s) {
    if (s == "raw") return DepthNorm::raw;
    if (s == "minmax") return DepthNorm::minmax;
    if (s == "percentile") return DepthNorm::percentile;
    throw ValidationError("unknown depth normalization: " + s);
}

double luminance(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

void ImageRGB::validate() const {
    if (height <= 0 || width <= 0) throw ValidationError("image has non-positive size");
    if (data.size() != static_cast<size_t>(height) * width * 3)
        throw ValidationError("image buffer size mismatch");
    const double lo = range == ValueRange::unit ? 0.0 : -1.0;
    for (double v : data) {
        if (!std::isfinite(v) || v < lo - 1e-9 || v > 1.0 + 1e-9)
            throw ValidationError("image value outside declared range");
    }
}

void DepthMap::validate() const {
    if (height <= 0 || width <= 0) throw ValidationError("depth map has non-positive size");
    if (data.size() != static_cast<size_t>(height) * width)
        throw ValidationError("depth buffer size mismatch");
    for (double v : data) {
        if (!std::isfinite(v)) throw ValidationError("depth map contains non-finite values");
        if (norm != DepthNorm::raw && (v < -1.0 - 1e-9 || v > 1.0 + 1e-9))
            throw ValidationError("normalized depth value outside [-1, 1]");
    }
}

size_t BinaryMask::count_ones() const {
    size_t n = 0;
    for (uint8_t v : data) n += v;
    return n;
}

void BinaryMask::validate() const {
    if (height <= 0 || width <= 0) throw ValidationError("mask has non-positive size");
    if (data.size() != static_cast<size_t>(height) * width)
        throw ValidationError("mask buffer size mismatch");
    for (uint8_t v : data)
        if (v != 0 && v != 1) throw ValidationError("mask value not in {0, 1}");
}

void LatentTensor::validate_finite(const char* what) const {
    for (double v : data)
        if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": non-finite value");
}

ImageRGB to_signed(const ImageRGB& img) {
    if (img.range == ValueRange::signed_) return img;
    ImageRGB out = img;
    out.range = ValueRange::signed_;
    for (double& v : out.data) v = v * 2.0 - 1.0;
    return out;
}

ImageRGB to_unit(const ImageRGB& img) {
    if (img.range == ValueRange::unit) return img;
    ImageRGB out = img;
    out.range = ValueRange::unit;
    for (double& v : out.data) v = std::clamp((v + 1.0) * 0.5, 0.0, 1.0);
    return out;
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw ValidationError("quantile of empty range");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

namespace {

constexpr double kDegenerateSpan = 1e-12;

void require_finite(const DepthMap& d) {
    for (double v : d.data)
        if (!std::isfinite(v)) throw ValidationError("normalize_depth: non-finite input");
}

} // namespace

DepthMap normalize_depth(const DepthMap& d, DepthNorm mode) {
    if (mode == DepthNorm::raw) throw ValidationError("normalize_depth: mode must not be raw");
    require_finite(d);

    double lo, hi;
    if (mode == DepthNorm::minmax) {
        auto [mn, mx] = std::minmax_element(d.data.begin(), d.data.end());
        lo = *mn;
        hi = *mx;
    } else {
        std::vector<double> sorted = d.data;
        std::sort(sorted.begin(), sorted.end());
        lo = sorted_quantile(sorted, kPercentileLo);
        hi = sorted_quantile(sorted, kPercentileHi);
    }

    DepthMap out(d.height, d.width, mode);
    if (hi - lo < kDegenerateSpan) {
        // Constant input: center of the range.
        return out;
    }
    const double scale = 2.0 / (hi - lo);
    for (size_t i = 0; i < d.data.size(); ++i) {
        double v = (d.data[i] - lo) * scale - 1.0;
        out.data[i] = std::clamp(v, -1.0, 1.0);
    }
    return out;
}

DepthMap normalize_depth_over(const DepthMap& d, const BinaryMask& region, double background) {
    if (d.height != region.height || d.width != region.width)
        throw ValidationError("normalize_depth_over: shape mismatch");
    require_finite(d);

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    size_t n = 0;
    for (size_t i = 0; i < d.data.size(); ++i) {
        if (region.data[i]) {
            lo = std::min(lo, d.data[i]);
            hi = std::max(hi, d.data[i]);
            ++n;
        }
    }
    if (n == 0) throw ValidationError("normalize_depth_over: empty region");

    DepthMap out(d.height, d.width, DepthNorm::minmax, background);
    if (hi - lo < kDegenerateSpan) {
        for (size_t i = 0; i < d.data.size(); ++i)
            if (region.data[i]) out.data[i] = 0.0;
        return out;
    }
    const double scale = 2.0 / (hi - lo);
    for (size_t i = 0; i < d.data.size(); ++i) {
        if (region.data[i])
            out.data[i] = std::clamp((d.data[i] - lo) * scale - 1.0, -1.0, 1.0);
    }
    return out;
}

ImageRGB replicate_channels(const DepthMap& d) {
    if (d.norm == DepthNorm::raw)
        throw ValidationError("replicate_channels: depth must be normalized");
    ImageRGB out(d.height, d.width, ValueRange::signed_);
    for (int i = 0; i < d.height * d.width; ++i) {
        const double v = d.data[i];
        out.data[static_cast<size_t>(i) * 3 + 0] = v;
        out.data[static_cast<size_t>(i) * 3 + 1] = v;
        out.data[static_cast<size_t>(i) * 3 + 2] = v;
    }
    return out;
}

DepthMap average_channels(const ImageRGB& img) {
    DepthMap out(img.height, img.width, DepthNorm::raw);
    for (int i = 0; i < img.height * img.width; ++i) {
        const double a = img.data[static_cast<size_t>(i) * 3 + 0];
        const double b = img.data[static_cast<size_t>(i) * 3 + 1];
        const double c = img.data[static_cast<size_t>(i) * 3 + 2];
        // Equal channels pass through exactly so that
        // average_channels(replicate_channels(d)) == d bit for bit.
        out.data[i] = (a == b && b == c) ? a : (a + b + c) / 3.0;
    }
    return out;
}

namespace {

void require_same_spatial(int h1, int w1, int h2, int w2, const char* what) {
    if (h1 != h2 || w1 != w2) throw ValidationError(std::string(what) + ": shape mismatch");
}

} // namespace

ImageRGB apply_mask(const ImageRGB& img, const BinaryMask& m) {
    require_same_spatial(img.height, img.width, m.height, m.width, "apply_mask");
    ImageRGB out = img;
    for (int i = 0; i < img.height * img.width; ++i) {
        if (!m.data[i]) {
            out.data[static_cast<size_t>(i) * 3 + 0] = 0.0;
            out.data[static_cast<size_t>(i) * 3 + 1] = 0.0;
            out.data[static_cast<size_t>(i) * 3 + 2] = 0.0;
        }
    }
    return out;
}

DepthMap apply_mask(const DepthMap& d, const BinaryMask& m) {
    require_same_spatial(d.height, d.width, m.height, m.width, "apply_mask");
    DepthMap out = d;
    for (size_t i = 0; i < d.data.size(); ++i)
        if (!m.data[i]) out.data[i] = 0.0;
    return out;
}

namespace {

// Symmetric reflection: index -1 maps to 0, H maps to H-1.
int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

template <typename T>
std::vector<T> pad_buffer(const std::vector<T>& src, int h, int w, int ph, int pw) {
    std::vector<T> out(static_cast<size_t>(h + ph) * (w + pw));
    for (int y = 0; y < h + ph; ++y) {
        const int sy = reflect_index(y, h);
        for (int x = 0; x < w + pw; ++x) {
            const int sx = reflect_index(x, w);
            out[static_cast<size_t>(y) * (w + pw) + x] = src[static_cast<size_t>(sy) * w + sx];
        }
    }
    return out;
}

int pad_amount(int n, int f) { return (f - n % f) % f; }

} // namespace

DepthMap pad_to_multiple(const DepthMap& d, int f, int* pad_y, int* pad_x) {
    const int ph = pad_amount(d.height, f);
    const int pw = pad_amount(d.width, f);
    if (pad_y) *pad_y = ph;
    if (pad_x) *pad_x = pw;
    if (ph == 0 && pw == 0) return d;
    DepthMap out(d.height + ph, d.width + pw, d.norm);
    out.data = pad_buffer(d.data, d.height, d.width, ph, pw);
    return out;
}

BinaryMask pad_to_multiple(const BinaryMask& m, int f, int* pad_y, int* pad_x) {
    const int ph = pad_amount(m.height, f);
    const int pw = pad_amount(m.width, f);
    if (pad_y) *pad_y = ph;
    if (pad_x) *pad_x = pw;
    if (ph == 0 && pw == 0) return m;
    BinaryMask out(m.height + ph, m.width + pw);
    out.data = pad_buffer(m.data, m.height, m.width, ph, pw);
    return out;
}

std::vector<double> resize_bilinear(const std::vector<double>& src, int sh, int sw, int dh,
                                    int dw) {
    std::vector<double> out(static_cast<size_t>(dh) * dw);
    const double sy_scale = static_cast<double>(sh) / dh;
    const double sx_scale = static_cast<double>(sw) / dw;
    for (int y = 0; y < dh; ++y) {
        const double fy = (y + 0.5) * sy_scale - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, sh - 1);
        const int y1 = std::min(y0 + 1, sh - 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < dw; ++x) {
            const double fx = (x + 0.5) * sx_scale - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, sw - 1);
            const int x1 = std::min(x0 + 1, sw - 1);
            const double wx = std::clamp(fx - x0, 0.0, 1.0);
            const double v00 = src[static_cast<size_t>(y0) * sw + x0];
            const double v01 = src[static_cast<size_t>(y0) * sw + x1];
            const double v10 = src[static_cast<size_t>(y1) * sw + x0];
            const double v11 = src[static_cast<size_t>(y1) * sw + x1];
            const double top = v00 + (v01 - v00) * wx;
            const double bot = v10 + (v11 - v10) * wx;
            out[static_cast<size_t>(y) * dw + x] = top + (bot - top) * wy;
        }
    }
    return out;
}

ImageRGB resize_bilinear_rgb(const ImageRGB& img, int dh, int dw) {
    ImageRGB out(dh, dw, img.range);
    std::vector<double> plane(static_cast<size_t>(img.height) * img.width);
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < img.height * img.width; ++i)
            plane[i] = img.data[static_cast<size_t>(i) * 3 + c];
        std::vector<double> res = resize_bilinear(plane, img.height, img.width, dh, dw);
        for (int i = 0; i < dh * dw; ++i) out.data[static_cast<size_t>(i) * 3 + c] = res[i];
    }
    return out;
}

LatentTensor resize_to_latent(const DepthMap& d, int f) {
    if (f <= 0) throw ValidationError("resize_to_latent: factor must be positive");
    const DepthMap padded = pad_to_multiple(d, f);
    const int dh = padded.height / f;
    const int dw = padded.width / f;
    LatentTensor out(1, dh, dw);
    out.data = resize_bilinear(padded.data, padded.height, padded.width, dh, dw);
    return out;
}

LatentTensor resize_to_latent(const BinaryMask& m, int f) {
    if (f <= 0) throw ValidationError("resize_to_latent: factor must be positive");
    const BinaryMask padded = pad_to_multiple(m, f);
    const int dh = padded.height / f;
    const int dw = padded.width / f;
    LatentTensor out(1, dh, dw);
    for (int y = 0; y < dh; ++y) {
        const int sy = std::min(padded.height - 1, static_cast<int>((y + 0.5) * f));
        for (int x = 0; x < dw; ++x) {
            const int sx = std::min(padded.width - 1, static_cast<int>((x + 0.5) * f));
            out.at(0, y, x) = padded.at(sy, sx);
        }
    }
    return out;
}

BBox silhouette_bbox(const BinaryMask& m) {
    BBox box{m.width, m.height, 0, 0};
    bool any = false;
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (m.at(y, x)) {
                box.x0 = std::min(box.x0, x);
                box.y0 = std::min(box.y0, y);
                box.x1 = std::max(box.x1, x + 1);
                box.y1 = std::max(box.y1, y + 1);
                any = true;
            }
        }
    }
    if (!any) return BBox{};
    return box;
}

BBox insertion_bbox(const BinaryMask& m) {
    BBox box{m.width, m.height, 0, 0};
    bool any = false;
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(y, x)) {
                box.x0 = std::min(box.x0, x);
                box.y0 = std::min(box.y0, y);
                box.x1 = std::max(box.x1, x + 1);
                box.y1 = std::max(box.y1, y + 1);
                any = true;
            }
        }
    }
    if (!any) return BBox{};
    return box;
}

BinaryMask mask_from_silhouette(const BinaryMask& silhouette, int dilation_radius) {
    if (dilation_radius < 0) throw ValidationError("mask_from_silhouette: negative radius");
    const BBox sil = silhouette_bbox(silhouette);
    if (sil.empty()) throw ValidationError("mask_from_silhouette: empty silhouette");

    // The bbox of a Euclidean-disc dilation equals the silhouette bbox grown
    // by the radius on every side (clamped to the image).
    BBox box;
    box.x0 = std::max(0, sil.x0 - dilation_radius);
    box.y0 = std::max(0, sil.y0 - dilation_radius);
    box.x1 = std::min(silhouette.width, sil.x1 + dilation_radius);
    box.y1 = std::min(silhouette.height, sil.y1 + dilation_radius);

    BinaryMask mask(silhouette.height, silhouette.width, 1);
    for (int y = box.y0; y < box.y1; ++y)
        for (int x = box.x0; x < box.x1; ++x) mask.at(y, x) = 0;
    return mask;
}

DepthMap clamp_depth(const DepthMap& d, double lo, double hi, DepthNorm tag) {
    DepthMap out = d;
    out.norm = tag;
    for (double& v : out.data) v = std::clamp(v, lo, hi);
    return out;
}

} // namespace inscene
