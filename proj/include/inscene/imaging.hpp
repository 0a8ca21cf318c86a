#pragma once

#include <vector>

#include "inscene/types.hpp"

namespace inscene {

// Quantile levels used by percentile normalization.
inline constexpr double kPercentileLo = 0.02;
inline constexpr double kPercentileHi = 0.98;

// Linear-interpolation quantile of an already sorted vector, q in [0, 1].
double sorted_quantile(const std::vector<double>& sorted, double q);

// Maps a raw depth map into [-1, 1]. minmax maps min->-1, max->+1; percentile
// maps the 2%/98% quantiles to -1/+1 and clamps. A constant input maps to all
// zeros. Rejects non-finite inputs and mode == raw.
DepthMap normalize_depth(const DepthMap& d, DepthNorm mode);

// minmax normalization restricted to mask==1 pixels; everything else gets
// `background`. Used for pose depth, where only body pixels carry signal.
DepthMap normalize_depth_over(const DepthMap& d, const BinaryMask& region, double background);

// Single channel -> three identical channels, signed range.
ImageRGB replicate_channels(const DepthMap& d);

// Per-pixel mean of the three channels. Equal channels pass through exactly,
// so average_channels(replicate_channels(d)) == d bit for bit.
DepthMap average_channels(const ImageRGB& img);

ImageRGB apply_mask(const ImageRGB& img, const BinaryMask& m);
DepthMap apply_mask(const DepthMap& d, const BinaryMask& m);

// Right/bottom reflection padding up to the next multiple of f.
DepthMap pad_to_multiple(const DepthMap& d, int f, int* pad_y = nullptr, int* pad_x = nullptr);
BinaryMask pad_to_multiple(const BinaryMask& m, int f, int* pad_y = nullptr, int* pad_x = nullptr);

// Resize to latent resolution (H/f x W/f): bilinear for depth, nearest for
// masks. Non-divisible sizes are reflection-padded first.
LatentTensor resize_to_latent(const DepthMap& d, int f);
LatentTensor resize_to_latent(const BinaryMask& m, int f);

// Dilates the silhouette with a Euclidean disc of the given radius and turns
// the tight bbox of the dilated region into the zero-region of the returned
// scene-keep mask. Errors on an empty silhouette.
BinaryMask mask_from_silhouette(const BinaryMask& silhouette, int dilation_radius);

// Tight bbox of mask==1 pixels; empty box if none.
BBox silhouette_bbox(const BinaryMask& m);

// Tight bbox of the zero-region of a scene-keep mask.
BBox insertion_bbox(const BinaryMask& m);

// General bilinear resampling of a single channel, half-pixel centers.
std::vector<double> resize_bilinear(const std::vector<double>& src, int sh, int sw, int dh, int dw);

ImageRGB resize_bilinear_rgb(const ImageRGB& img, int dh, int dw);

DepthMap clamp_depth(const DepthMap& d, double lo, double hi, DepthNorm tag);

} // namespace inscene
