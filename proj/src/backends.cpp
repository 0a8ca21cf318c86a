#include "inscene/backends.hpp"

#include <cmath>

#include "inscene/doubles.hpp"

namespace inscene {

Embedding NullEmbeddingCache::get_or_compute(const std::array<double, 3>& fill,
                                             const std::function<Embedding()>& compute) {
    std::array<long, 3> key{};
    for (int i = 0; i < 3; ++i) key[i] = std::lround(fill[i] * 1e9);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Embedding e = compute();
    cache_.emplace(key, e);
    return e;
}

void BackendRegistry::validate() const {
    std::string missing;
    auto need = [&](bool ok, const char* what) {
        if (!ok) {
            if (!missing.empty()) missing += ", ";
            missing += what;
        }
    };
    need(detector != nullptr, "PersonDetector");
    need(segmenter != nullptr, "PersonSegmenter");
    need(fitter != nullptr, "BodyFitter");
    need(inpainter != nullptr, "SceneInpainter");
    need(depth != nullptr, "MonocularDepthEstimator");
    need(autoencoder != nullptr, "Autoencoder");
    need(reference != nullptr, "ReferenceEncoder");
    need(static_cast<bool>(make_backbone), "DenoisingBackbone factory");
    if (!missing.empty())
        throw RegistryError("backend registry '" + name + "' is missing providers: " + missing);
}

namespace {

std::map<std::string, BackendFactory>& factory_map() {
    static std::map<std::string, BackendFactory> factories;
    return factories;
}

} // namespace

void register_backend_factory(const std::string& name, BackendFactory factory) {
    factory_map()[name] = std::move(factory);
}

BackendRegistry make_registry(const std::string& name, const KeyValueConfig& cfg) {
    if (name == "double") {
        BackendRegistry reg = make_double_registry(cfg);
        reg.validate();
        return reg;
    }
    auto it = factory_map().find(name);
    if (it == factory_map().end())
        throw RegistryError("unknown backend registry: '" + name + "'");
    BackendRegistry reg = it->second(cfg);
    reg.name = name;
    reg.validate();
    return reg;
}

} // namespace inscene
