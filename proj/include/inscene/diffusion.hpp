#pragma once

#include <optional>
#include <vector>

#include "inscene/backends.hpp"
#include "inscene/conditioning.hpp"
#include "inscene/rng.hpp"
#include "inscene/schedule.hpp"

namespace inscene {

struct GuidanceConfig {
    double w = 4.0;  // guidance scale
    int steps = 50;  // inference denoising steps
    uint64_t seed = 0;

    void validate() const {
        if (w < 0.0) throw ValidationError("guidance scale must be >= 0");
        if (steps < 1) throw ValidationError("inference steps must be >= 1");
    }
};

// Forward process: x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps.
LatentTensor add_noise(const LatentTensor& x0, const LatentTensor& eps, int t,
                       const NoiseSchedule& schedule);

// One training draw: timestep, gaussian noise, and whether the reference was
// dropped for classifier-free guidance. Frozen draws make the loss a
// deterministic function, which the finite-difference oracle relies on.
struct NoiseDraw {
    int t = 0;
    LatentTensor eps;
    bool use_null = false;
};

NoiseDraw draw_training_noise(const ConditioningBundle& bundle, const NoiseSchedule& schedule,
                              double dropout_p, Rng& noise_rng, Rng& dropout_rng);

// Epsilon-prediction MSE: mean over elements of
// || eps - model(cat(x_t, cond), t, ctx) ||^2.
double training_loss(const ConditioningBundle& bundle, const DenoisingBackbone& model,
                     const NoiseSchedule& schedule, const NoiseDraw& draw);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

LossGrad training_loss_grad(const ConditioningBundle& bundle, TrainableBackbone& model,
                            const NoiseSchedule& schedule, const NoiseDraw& draw);

// Returns c_null with probability p, else c_ref.
const Embedding& drop_reference(const Embedding& c_ref, const Embedding& c_null, double p,
                                Rng& rng);

// eps~ = (1 + w) * eps_cond - w * eps_uncond.
LatentTensor cfg_combine(const LatentTensor& eps_cond, const LatentTensor& eps_uncond, double w);

// Deterministic DDIM-style sampler. Starts from seeded gaussian noise unless
// `init` is given; `timesteps` (descending) overrides the built-in spacing.
// Never evaluates the unconditional branch when w == 0.
struct SampleOverrides {
    std::optional<LatentTensor> init;
    std::optional<std::vector<int>> timesteps;
};

LatentTensor sample(const ConditioningBundle& bundle, const DenoisingBackbone& model,
                    const NoiseSchedule& schedule, const GuidanceConfig& guidance, Rng& rng,
                    const SampleOverrides* overrides = nullptr);

// Grafts extra zero-weight input channels onto a pretrained backbone so the
// adapted model initially matches the original when the new channels are zero.
std::unique_ptr<TrainableBackbone> adapt_input_channels(const TrainableBackbone& base,
                                                        int new_count);

} // namespace inscene
