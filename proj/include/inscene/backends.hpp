#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>

#include "inscene/config.hpp"
#include "inscene/mesh.hpp"
#include "inscene/types.hpp"

namespace inscene {

struct AutoencoderSpec {
    int latent_channels = 4;
    int spatial_factor = 8;
    std::string weights_tag;
};

struct BackboneSpec {
    int input_channels = 0;
    int context_width = 0;
    int t_train = 1000;
};

class PersonDetector {
public:
    virtual ~PersonDetector() = default;
    virtual std::optional<BBox> detect_person(const ImageRGB& frame) const = 0;
};

class PersonSegmenter {
public:
    virtual ~PersonSegmenter() = default;
    // 1 = person pixel.
    virtual BinaryMask segment_person(const ImageRGB& img) const = 0;
};

class BodyFitter {
public:
    struct Fit {
        BodyMesh mesh;
        CameraSpec camera;
    };
    virtual ~BodyFitter() = default;
    virtual std::optional<Fit> fit_body(const ImageRGB& img) const = 0;
};

class SceneInpainter {
public:
    virtual ~SceneInpainter() = default;
    // hole: 1 = synthesize here, 0 = keep.
    virtual ImageRGB inpaint(const ImageRGB& img, const BinaryMask& hole,
                             const std::string& prompt) const = 0;
};

class MonocularDepthEstimator {
public:
    virtual ~MonocularDepthEstimator() = default;
    virtual DepthMap estimate_depth(const ImageRGB& img) const = 0;
};

class Autoencoder {
public:
    virtual ~Autoencoder() = default;
    virtual AutoencoderSpec spec() const = 0;
    virtual LatentTensor encode(const ImageRGB& signed_img) const = 0;
    virtual ImageRGB decode(const LatentTensor& z) const = 0;
};

class ReferenceEncoder {
public:
    virtual ~ReferenceEncoder() = default;
    virtual int width() const = 0;
    virtual Embedding embed_reference(const ImageRGB& img) const = 0;
};

class DenoisingBackbone {
public:
    virtual ~DenoisingBackbone() = default;
    virtual BackboneSpec spec() const = 0;
    // x_in = cat(noisy latent, conditioning channels). Channel count must
    // equal spec().input_channels or this throws ChannelMismatchError.
    virtual LatentTensor predict_noise(const LatentTensor& x_in, int t,
                                       const Embedding& ctx) const = 0;
};

// Backbone with parameter access and a manual backward pass; what training
// and the gradient oracle operate on.
class TrainableBackbone : public DenoisingBackbone {
public:
    virtual std::span<double> params() = 0;
    virtual std::span<const double> params() const = 0;
    virtual std::unique_ptr<TrainableBackbone> clone() const = 0;
    // Same weights on the original channels, zero weights on the new ones.
    virtual std::unique_ptr<TrainableBackbone> with_input_channels(int new_count) const = 0;
};

// Counts forward evaluations; used by pipelines to audit inference cost.
class CountingBackbone final : public DenoisingBackbone {
public:
    explicit CountingBackbone(const DenoisingBackbone& inner) : inner_(inner) {}
    BackboneSpec spec() const override { return inner_.spec(); }
    LatentTensor predict_noise(const LatentTensor& x, int t, const Embedding& ctx) const override {
        ++count_;
        return inner_.predict_noise(x, t, ctx);
    }
    long count() const { return count_; }

private:
    const DenoisingBackbone& inner_;
    mutable long count_ = 0;
};

// Cache of unconditional embeddings, keyed by fill color.
class NullEmbeddingCache {
public:
    Embedding get_or_compute(const std::array<double, 3>& fill,
                             const std::function<Embedding()>& compute);

private:
    std::mutex mu_;
    std::map<std::array<long, 3>, Embedding> cache_;
};

// All pretrained components a pipeline may need. Resolution is total and
// checked up front: a pipeline never starts with a missing provider.
struct BackendRegistry {
    std::string name;
    std::shared_ptr<PersonDetector> detector;
    std::shared_ptr<PersonSegmenter> segmenter;
    std::shared_ptr<BodyFitter> fitter;
    std::shared_ptr<SceneInpainter> inpainter;
    std::shared_ptr<MonocularDepthEstimator> depth;
    std::shared_ptr<Autoencoder> autoencoder;
    std::shared_ptr<ReferenceEncoder> reference;
    // input_channels, seed -> freshly initialized backbone.
    std::function<std::unique_ptr<TrainableBackbone>(int, uint64_t)> make_backbone;

    std::shared_ptr<NullEmbeddingCache> null_cache = std::make_shared<NullEmbeddingCache>();

    void validate() const;
};

using BackendFactory = std::function<BackendRegistry(const KeyValueConfig&)>;

// "double" is built in; adapters for real weights can register here.
void register_backend_factory(const std::string& name, BackendFactory factory);
BackendRegistry make_registry(const std::string& name, const KeyValueConfig& cfg);

} // namespace inscene
