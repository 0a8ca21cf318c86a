#include "inscene/diffusion.hpp"

#include <cmath>

#include "inscene/conv_backbone.hpp"

namespace inscene {

LatentTensor add_noise(const LatentTensor& x0, const LatentTensor& eps, int t,
                       const NoiseSchedule& schedule) {
    if (!x0.same_shape(eps)) throw ValidationError("add_noise: shape mismatch");
    const double abar = schedule.alpha_bar(t);
    const double a = std::sqrt(abar);
    const double b = std::sqrt(1.0 - abar);
    LatentTensor out = x0;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = a * x0.data[i] + b * eps.data[i];
    return out;
}

NoiseDraw draw_training_noise(const ConditioningBundle& bundle, const NoiseSchedule& schedule,
                              double dropout_p, Rng& noise_rng, Rng& dropout_rng) {
    if (!bundle.target_latent) throw ValidationError("training draw needs a target latent");
    if (dropout_p < 0.0 || dropout_p > 1.0) throw ValidationError("dropout probability out of [0,1]");
    NoiseDraw draw;
    draw.t = noise_rng.uniform_int(schedule.t_train());
    const LatentTensor& target = *bundle.target_latent;
    draw.eps = LatentTensor(target.channels, target.height, target.width);
    for (double& v : draw.eps.data) v = noise_rng.normal();
    draw.use_null = dropout_rng.uniform() < dropout_p;
    return draw;
}

namespace {

LatentTensor cat_latent(const LatentTensor& a, const LatentTensor& b) {
    if (a.height != b.height || a.width != b.width)
        throw ChannelMismatchError("cat: spatial mismatch");
    LatentTensor out(a.channels + b.channels, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<long>(a.data.size()));
    return out;
}

} // namespace

double training_loss(const ConditioningBundle& bundle, const DenoisingBackbone& model,
                     const NoiseSchedule& schedule, const NoiseDraw& draw) {
    bundle.check_channels();
    if (!bundle.target_latent) throw ValidationError("training_loss: bundle has no target");
    const LatentTensor x_t = add_noise(*bundle.target_latent, draw.eps, draw.t, schedule);
    const LatentTensor x_in = cat_latent(x_t, bundle.cond);
    const Embedding& ctx = draw.use_null ? bundle.c_null : bundle.c_ref;
    const LatentTensor pred = model.predict_noise(x_in, draw.t, ctx);
    if (!pred.same_shape(draw.eps)) throw ChannelMismatchError("prediction shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = draw.eps.data[i] - pred.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.data.size());
}

LossGrad training_loss_grad(const ConditioningBundle& bundle, TrainableBackbone& model,
                            const NoiseSchedule& schedule, const NoiseDraw& draw) {
    bundle.check_channels();
    if (!bundle.target_latent) throw ValidationError("training_loss_grad: bundle has no target");
    auto* conv = dynamic_cast<TwoLayerConvBackbone*>(&model);
    if (!conv) throw ValidationError("training requires a backbone with a backward pass");

    const LatentTensor x_t = add_noise(*bundle.target_latent, draw.eps, draw.t, schedule);
    const LatentTensor x_in = cat_latent(x_t, bundle.cond);
    const Embedding& ctx = draw.use_null ? bundle.c_null : bundle.c_ref;

    TwoLayerConvBackbone::Cache cache;
    const LatentTensor pred = conv->forward(x_in, draw.t, ctx, &cache);
    if (!pred.same_shape(draw.eps)) throw ChannelMismatchError("prediction shape mismatch");

    const double inv_n = 1.0 / static_cast<double>(pred.data.size());
    double acc = 0.0;
    LatentTensor d_out(pred.channels, pred.height, pred.width);
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = draw.eps.data[i] - pred.data[i];
        acc += d * d;
        d_out.data[i] = -2.0 * d * inv_n;
    }

    LossGrad out;
    out.loss = acc * inv_n;
    out.grad = conv->backward(cache, d_out);
    return out;
}

const Embedding& drop_reference(const Embedding& c_ref, const Embedding& c_null, double p,
                                Rng& rng) {
    if (p < 0.0 || p > 1.0) throw ValidationError("dropout probability out of [0,1]");
    if (p <= 0.0) return c_ref;
    if (p >= 1.0) return c_null;
    return rng.uniform() < p ? c_null : c_ref;
}

LatentTensor cfg_combine(const LatentTensor& eps_cond, const LatentTensor& eps_uncond, double w) {
    if (!eps_cond.same_shape(eps_uncond)) throw ValidationError("cfg_combine: shape mismatch");
    LatentTensor out = eps_cond;
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = (1.0 + w) * eps_cond.data[i] - w * eps_uncond.data[i];
    return out;
}

LatentTensor sample(const ConditioningBundle& bundle, const DenoisingBackbone& model,
                    const NoiseSchedule& schedule, const GuidanceConfig& guidance, Rng& rng,
                    const SampleOverrides* overrides) {
    bundle.check_channels();
    guidance.validate();
    if (bundle.target_latent)
        throw ValidationError("sample: bundle still carries a training target");

    const int C = bundle.latent_channels;
    const int h = bundle.cond.height;
    const int w = bundle.cond.width;

    std::vector<int> timesteps;
    if (overrides && overrides->timesteps) {
        timesteps = *overrides->timesteps;
        if (timesteps.empty()) throw ValidationError("sample: empty timestep list");
    } else {
        const int ratio = std::max(1, schedule.t_train() / guidance.steps);
        for (int i = guidance.steps - 1; i >= 0; --i) timesteps.push_back(i * ratio);
    }

    LatentTensor z(C, h, w);
    if (overrides && overrides->init) {
        if (overrides->init->channels != C || overrides->init->height != h ||
            overrides->init->width != w)
            throw ValidationError("sample: init latent shape mismatch");
        z = *overrides->init;
    } else {
        for (double& v : z.data) v = rng.normal();
    }

    LatentTensor x0_pred(C, h, w);
    for (size_t i = 0; i < timesteps.size(); ++i) {
        const int t = timesteps[i];
        const LatentTensor x_in = cat_latent(z, bundle.cond);
        LatentTensor eps = model.predict_noise(x_in, t, bundle.c_ref);
        if (guidance.w > 0.0) {
            const LatentTensor eps_uncond = model.predict_noise(x_in, t, bundle.c_null);
            eps = cfg_combine(eps, eps_uncond, guidance.w);
        }

        const double abar = schedule.alpha_bar(t);
        const double sa = std::sqrt(abar);
        const double sb = std::sqrt(1.0 - abar);
        const double abar_prev =
            (i + 1 < timesteps.size()) ? schedule.alpha_bar(timesteps[i + 1]) : 1.0;
        const double pa = std::sqrt(abar_prev);
        const double pb = std::sqrt(1.0 - abar_prev);

        for (size_t k = 0; k < z.data.size(); ++k) {
            const double x0 = (z.data[k] - sb * eps.data[k]) / sa;
            x0_pred.data[k] = x0;
            z.data[k] = pa * x0 + pb * eps.data[k];
        }
    }
    x0_pred.validate_finite("sampled latent");
    return x0_pred;
}

std::unique_ptr<TrainableBackbone> adapt_input_channels(const TrainableBackbone& base,
                                                        int new_count) {
    const int old_count = base.spec().input_channels;
    if (new_count < old_count)
        throw ValidationError("adapt_input_channels: cannot shrink from " +
                              std::to_string(old_count) + " to " + std::to_string(new_count));
    return base.with_input_channels(new_count);
}

} // namespace inscene
