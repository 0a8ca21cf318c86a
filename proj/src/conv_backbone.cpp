#include "inscene/conv_backbone.hpp"

#include <cmath>

#include "inscene/rng.hpp"

namespace inscene {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

TwoLayerConvBackbone::TwoLayerConvBackbone(int input_channels, int out_channels, int hidden,
                                           int ctx_width, int t_train, uint64_t seed)
    : in_(input_channels), out_(out_channels), hidden_(hidden), ctx_width_(ctx_width),
      t_train_(t_train) {
    if (in_ <= 0 || out_ <= 0 || hidden_ <= 0 || ctx_width_ <= 0 || t_train_ <= 0)
        throw ValidationError("backbone dimensions must be positive");
    compute_offsets();

    Rng rng(seed);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(in_) * 9.0);
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_) * 9.0);
    for (size_t i = 0; i < conv1_size(); ++i) params_[o_w1_ + i] = s1 * rng.normal();
    for (int i = 0; i < hidden_; ++i) params_[o_b1_ + i] = 0.0;
    for (int i = 0; i < hidden_ * 4; ++i) params_[o_wt_ + i] = 0.05 * rng.normal();
    for (int i = 0; i < hidden_ * ctx_width_; ++i) params_[o_wc_ + i] = 0.05 * rng.normal();
    for (size_t i = 0; i < conv2_size(); ++i) params_[o_w2_ + i] = s2 * rng.normal();
    for (int i = 0; i < out_; ++i) params_[o_b2_ + i] = 0.0;
}

void TwoLayerConvBackbone::compute_offsets() {
    o_w1_ = 0;
    o_b1_ = o_w1_ + conv1_size();
    o_wt_ = o_b1_ + static_cast<size_t>(hidden_);
    o_wc_ = o_wt_ + static_cast<size_t>(hidden_) * 4;
    o_w2_ = o_wc_ + static_cast<size_t>(hidden_) * ctx_width_;
    o_b2_ = o_w2_ + conv2_size();
    params_.assign(o_b2_ + static_cast<size_t>(out_), 0.0);
}

std::array<double, 4> TwoLayerConvBackbone::time_features(int t) const {
    const double tau = (static_cast<double>(t) + 0.5) / static_cast<double>(t_train_);
    return {std::sin(kTwoPi * tau), std::cos(kTwoPi * tau), std::sin(2.0 * kTwoPi * tau),
            std::cos(2.0 * kTwoPi * tau)};
}

std::vector<double> TwoLayerConvBackbone::context_vector(const Embedding& ctx) const {
    if (ctx.width != ctx_width_)
        throw ChannelMismatchError("backbone context width mismatch: got " +
                                   std::to_string(ctx.width) + ", want " +
                                   std::to_string(ctx_width_));
    if (ctx.tokens <= 0) throw ValidationError("empty context embedding");
    std::vector<double> v(static_cast<size_t>(ctx_width_), 0.0);
    for (int tok = 0; tok < ctx.tokens; ++tok)
        for (int j = 0; j < ctx_width_; ++j)
            v[j] += ctx.data[static_cast<size_t>(tok) * ctx_width_ + j];
    for (double& x : v) x /= ctx.tokens;
    return v;
}

LatentTensor TwoLayerConvBackbone::forward(const LatentTensor& x, int t, const Embedding& ctx,
                                           Cache* cache) const {
    if (x.channels != in_)
        throw ChannelMismatchError("backbone input channels mismatch: got " +
                                   std::to_string(x.channels) + ", want " + std::to_string(in_));
    if (t < 0 || t >= t_train_)
        throw ValidationError("timestep out of range: " + std::to_string(t));

    const int H = x.height;
    const int W = x.width;
    const auto tf = time_features(t);
    const std::vector<double> cv = context_vector(ctx);

    // Hidden layer: conv1 + per-channel time/context biases, tanh.
    std::vector<double> h(static_cast<size_t>(hidden_) * H * W);
    for (int ch = 0; ch < hidden_; ++ch) {
        double bias = params_[o_b1_ + ch];
        for (int i = 0; i < 4; ++i) bias += params_[o_wt_ + static_cast<size_t>(ch) * 4 + i] * tf[i];
        for (int j = 0; j < ctx_width_; ++j)
            bias += params_[o_wc_ + static_cast<size_t>(ch) * ctx_width_ + j] * cv[j];
        for (int y = 0; y < H; ++y) {
            for (int xx = 0; xx < W; ++xx) {
                double acc = bias;
                for (int ci = 0; ci < in_; ++ci) {
                    const size_t wbase = o_w1_ + ((static_cast<size_t>(ch) * in_ + ci) * 9);
                    for (int ky = 0; ky < 3; ++ky) {
                        const int sy = y + ky - 1;
                        if (sy < 0 || sy >= H) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int sx = xx + kx - 1;
                            if (sx < 0 || sx >= W) continue;
                            acc += params_[wbase + static_cast<size_t>(ky) * 3 + kx] *
                                   x.at(ci, sy, sx);
                        }
                    }
                }
                h[(static_cast<size_t>(ch) * H + y) * W + xx] = std::tanh(acc);
            }
        }
    }

    LatentTensor out(out_, H, W);
    for (int co = 0; co < out_; ++co) {
        const double bias = params_[o_b2_ + co];
        for (int y = 0; y < H; ++y) {
            for (int xx = 0; xx < W; ++xx) {
                double acc = bias;
                for (int ch = 0; ch < hidden_; ++ch) {
                    const size_t wbase = o_w2_ + ((static_cast<size_t>(co) * hidden_ + ch) * 9);
                    for (int ky = 0; ky < 3; ++ky) {
                        const int sy = y + ky - 1;
                        if (sy < 0 || sy >= H) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int sx = xx + kx - 1;
                            if (sx < 0 || sx >= W) continue;
                            acc += params_[wbase + static_cast<size_t>(ky) * 3 + kx] *
                                   h[(static_cast<size_t>(ch) * H + sy) * W + sx];
                        }
                    }
                }
                out.at(co, y, xx) = acc;
            }
        }
    }

    if (cache) {
        cache->input = x;
        cache->hidden = std::move(h);
        cache->tfeat = tf;
        cache->ctx_vec = cv;
        cache->height = H;
        cache->width = W;
    }
    return out;
}

LatentTensor TwoLayerConvBackbone::predict_noise(const LatentTensor& x_in, int t,
                                                 const Embedding& ctx) const {
    return forward(x_in, t, ctx, nullptr);
}

std::vector<double> TwoLayerConvBackbone::backward(const Cache& cache,
                                                   const LatentTensor& d_out) const {
    const int H = cache.height;
    const int W = cache.width;
    if (d_out.channels != out_ || d_out.height != H || d_out.width != W)
        throw ChannelMismatchError("backward: output gradient shape mismatch");

    std::vector<double> grad(params_.size(), 0.0);

    // conv2 weights/bias and gradient w.r.t. hidden activations.
    std::vector<double> dh(static_cast<size_t>(hidden_) * H * W, 0.0);
    for (int co = 0; co < out_; ++co) {
        double db = 0.0;
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx < W; ++xx) db += d_out.at(co, y, xx);
        grad[o_b2_ + co] = db;

        for (int ch = 0; ch < hidden_; ++ch) {
            const size_t wbase = o_w2_ + ((static_cast<size_t>(co) * hidden_ + ch) * 9);
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    double dw = 0.0;
                    for (int y = 0; y < H; ++y) {
                        const int sy = y + ky - 1;
                        if (sy < 0 || sy >= H) continue;
                        for (int xx = 0; xx < W; ++xx) {
                            const int sx = xx + kx - 1;
                            if (sx < 0 || sx >= W) continue;
                            const double g = d_out.at(co, y, xx);
                            dw += g * cache.hidden[(static_cast<size_t>(ch) * H + sy) * W + sx];
                            dh[(static_cast<size_t>(ch) * H + sy) * W + sx] +=
                                g * params_[wbase + static_cast<size_t>(ky) * 3 + kx];
                        }
                    }
                    grad[wbase + static_cast<size_t>(ky) * 3 + kx] = dw;
                }
            }
        }
    }

    // Through tanh: dpre = dh * (1 - h^2).
    std::vector<double> dpre(dh.size());
    for (size_t i = 0; i < dh.size(); ++i) {
        const double hv = cache.hidden[i];
        dpre[i] = dh[i] * (1.0 - hv * hv);
    }

    for (int ch = 0; ch < hidden_; ++ch) {
        double dsum = 0.0;
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx < W; ++xx)
                dsum += dpre[(static_cast<size_t>(ch) * H + y) * W + xx];
        grad[o_b1_ + ch] = dsum;
        for (int i = 0; i < 4; ++i)
            grad[o_wt_ + static_cast<size_t>(ch) * 4 + i] = dsum * cache.tfeat[i];
        for (int j = 0; j < ctx_width_; ++j)
            grad[o_wc_ + static_cast<size_t>(ch) * ctx_width_ + j] = dsum * cache.ctx_vec[j];

        for (int ci = 0; ci < in_; ++ci) {
            const size_t wbase = o_w1_ + ((static_cast<size_t>(ch) * in_ + ci) * 9);
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    double dw = 0.0;
                    for (int y = 0; y < H; ++y) {
                        const int sy = y + ky - 1;
                        if (sy < 0 || sy >= H) continue;
                        for (int xx = 0; xx < W; ++xx) {
                            const int sx = xx + kx - 1;
                            if (sx < 0 || sx >= W) continue;
                            dw += dpre[(static_cast<size_t>(ch) * H + y) * W + xx] *
                                  cache.input.at(ci, sy, sx);
                        }
                    }
                    grad[wbase + static_cast<size_t>(ky) * 3 + kx] = dw;
                }
            }
        }
    }

    return grad;
}

std::unique_ptr<TrainableBackbone> TwoLayerConvBackbone::clone() const {
    return std::make_unique<TwoLayerConvBackbone>(*this);
}

std::unique_ptr<TrainableBackbone> TwoLayerConvBackbone::with_input_channels(
    int new_count) const {
    if (new_count < in_)
        throw ValidationError("with_input_channels: shrinking input channels is unsupported");
    auto adapted = std::make_unique<TwoLayerConvBackbone>(new_count, out_, hidden_, ctx_width_,
                                                          t_train_, /*seed=*/0);
    std::fill(adapted->params_.begin(), adapted->params_.end(), 0.0);
    // conv1: copy the original input channels, leave the grafted ones at zero
    // so the adapted model initially matches the original on old channels.
    for (int ch = 0; ch < hidden_; ++ch)
        for (int ci = 0; ci < in_; ++ci)
            for (int k = 0; k < 9; ++k)
                adapted->params_[adapted->o_w1_ +
                                 ((static_cast<size_t>(ch) * new_count + ci) * 9) + k] =
                    params_[o_w1_ + ((static_cast<size_t>(ch) * in_ + ci) * 9) + k];
    std::copy(params_.begin() + static_cast<long>(o_b1_), params_.end(),
              adapted->params_.begin() + static_cast<long>(adapted->o_b1_));
    return adapted;
}

} // namespace inscene
