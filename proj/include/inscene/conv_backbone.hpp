#pragma once

#include <memory>
#include <span>
#include <vector>

#include "inscene/backends.hpp"

namespace inscene {

// Two 3x3 conv layers with a tanh in between; timestep and reference context
// enter as per-channel biases on the hidden layer. Small enough that the
// whole training loop runs on CPU in seconds, smooth enough that central
// finite differences agree with the analytic backward pass.
class TwoLayerConvBackbone final : public TrainableBackbone {
public:
    TwoLayerConvBackbone(int input_channels, int out_channels, int hidden, int ctx_width,
                         int t_train, uint64_t seed);

    BackboneSpec spec() const override {
        return BackboneSpec{in_, ctx_width_, t_train_};
    }
    int out_channels() const { return out_; }
    int hidden_channels() const { return hidden_; }

    LatentTensor predict_noise(const LatentTensor& x_in, int t,
                               const Embedding& ctx) const override;

    std::span<double> params() override { return params_; }
    std::span<const double> params() const override { return params_; }

    std::unique_ptr<TrainableBackbone> clone() const override;
    std::unique_ptr<TrainableBackbone> with_input_channels(int new_count) const override;

    struct Cache {
        LatentTensor input;
        std::vector<double> hidden;   // post-tanh activations, hidden x H x W
        std::array<double, 4> tfeat{};
        std::vector<double> ctx_vec;  // token-averaged context
        int height = 0;
        int width = 0;
    };

    LatentTensor forward(const LatentTensor& x_in, int t, const Embedding& ctx,
                         Cache* cache) const;
    // Gradient of a scalar loss w.r.t. all parameters given dL/d(output).
    std::vector<double> backward(const Cache& cache, const LatentTensor& d_out) const;

    // Parameter block offsets, exposed for the weight-shape audit.
    size_t conv1_size() const { return static_cast<size_t>(hidden_) * in_ * 9; }
    size_t conv2_size() const { return static_cast<size_t>(out_) * hidden_ * 9; }

private:
    int in_;
    int out_;
    int hidden_;
    int ctx_width_;
    int t_train_;
    std::vector<double> params_;

    // offsets into params_
    size_t o_w1_, o_b1_, o_wt_, o_wc_, o_w2_, o_b2_;

    void compute_offsets();
    std::array<double, 4> time_features(int t) const;
    std::vector<double> context_vector(const Embedding& ctx) const;
};

} // namespace inscene
