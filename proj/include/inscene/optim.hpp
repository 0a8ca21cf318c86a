#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "inscene/errors.hpp"

namespace inscene {

// Paper-style warmup: lr_init at step 0, linear to lr_base over warmup_steps,
// fixed thereafter.
inline double warmup_lr(long step, long warmup_steps, double lr_init, double lr_base) {
    if (step < 0) throw ValidationError("negative step");
    if (warmup_steps <= 0 || step >= warmup_steps) return lr_base;
    return lr_init + (lr_base - lr_init) * static_cast<double>(step) /
                         static_cast<double>(warmup_steps);
}

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

class AdamW {
public:
    AdamW(size_t n, AdamWConfig cfg = {}) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grad, double lr) {
        if (params.size() != m_.size() || grad.size() != m_.size())
            throw ValidationError("AdamW: size mismatch");
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (size_t i = 0; i < m_.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            const double mhat = m_[i] / bc1;
            const double vhat = v_[i] / bc2;
            // Decoupled weight decay.
            params[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * params[i]);
        }
    }

    long steps_taken() const { return t_; }

private:
    AdamWConfig cfg_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

} // namespace inscene
