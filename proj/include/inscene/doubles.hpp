#pragma once

#include "inscene/backends.hpp"

namespace inscene {

// Deterministic CPU-cheap stand-ins for every pretrained component. They are
// intentionally linear/simple so oracle tests (gradients, roundtrips) stay
// stable, and each is fully determined by its constructor arguments.

struct ChromaKeyParams {
    std::array<double, 3> key = {0.0, 1.0, 0.0}; // background key color, unit range
    double detect_threshold = 0.10;              // person if any channel deviates more
    double segment_threshold = 0.25;             // stricter than detection on purpose
};

class DoublePersonDetector final : public PersonDetector {
public:
    explicit DoublePersonDetector(ChromaKeyParams p) : p_(p) {}
    std::optional<BBox> detect_person(const ImageRGB& frame) const override;

private:
    ChromaKeyParams p_;
};

class DoublePersonSegmenter final : public PersonSegmenter {
public:
    explicit DoublePersonSegmenter(ChromaKeyParams p) : p_(p) {}
    BinaryMask segment_person(const ImageRGB& img) const override;

private:
    ChromaKeyParams p_;
};

// Fills the hole with the mean color of the kept pixels bordering it.
class DoubleSceneInpainter final : public SceneInpainter {
public:
    ImageRGB inpaint(const ImageRGB& img, const BinaryMask& hole,
                     const std::string& prompt) const override;
};

// Raw depth = Rec.601 luminance of the unit-range image.
class DoubleDepthEstimator final : public MonocularDepthEstimator {
public:
    DepthMap estimate_depth(const ImageRGB& img) const override;
};

// Fixed linear space-to-depth projection onto an orthonormal basis per f x f
// block; decode is the transposed (pseudo-inverse) map, clamped to [-1, 1].
// The leading basis vectors are block mean / x-ramp / y-ramp / xy, so smooth
// images survive the roundtrip; extra channels use seeded random directions.
class DoubleAutoencoder final : public Autoencoder {
public:
    DoubleAutoencoder(int latent_channels, int spatial_factor, uint64_t seed);
    AutoencoderSpec spec() const override { return spec_; }
    LatentTensor encode(const ImageRGB& signed_img) const override;
    ImageRGB decode(const LatentTensor& z) const override;

private:
    AutoencoderSpec spec_;
    int block_dim_;               // 3 * f * f
    std::vector<double> basis_;   // latent_channels x block_dim, orthonormal rows
    double scale_;                // keeps latents roughly unit for smooth content
};

// Embedding = fixed seeded orthonormal projection of the 16x16 average-pooled,
// mid-gray-centered pixels. Shape (1 x width).
class DoubleReferenceEncoder final : public ReferenceEncoder {
public:
    DoubleReferenceEncoder(int width, int expected_size, uint64_t seed);
    int width() const override { return width_; }
    int expected_size() const { return expected_size_; }
    Embedding embed_reference(const ImageRGB& img) const override;

    static constexpr int kPool = 16;

private:
    int width_;
    int expected_size_;
    std::vector<double> proj_; // width x (3 * kPool * kPool), orthonormal rows
};

// Places a canned low-poly humanoid so that it projects into the detected
// person region; pose variant chosen deterministically from the silhouette.
class DoubleBodyFitter final : public BodyFitter {
public:
    DoubleBodyFitter(ChromaKeyParams p, int min_fit_pixels) : p_(p), min_fit_pixels_(min_fit_pixels) {}
    std::optional<Fit> fit_body(const ImageRGB& img) const override;

private:
    ChromaKeyParams p_;
    int min_fit_pixels_;
};

// Canonical humanoid used by the fitter double; exposed for synthetic
// fixtures. `pose` in {0, 1, 2}. Units are meters, y down, ~1.7 m tall,
// centered at the origin.
BodyMesh make_humanoid_mesh(int pose);

// Recognized config keys (all optional): latent_channels, spatial_factor,
// resolution, context_width, hidden_channels, t_train, backend_seed,
// chroma_key, detect_threshold, segment_threshold, min_fit_pixels.
BackendRegistry make_double_registry(const KeyValueConfig& cfg);

} // namespace inscene
