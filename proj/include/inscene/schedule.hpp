#pragma once

#include <string>
#include <vector>

#include "inscene/errors.hpp"

namespace inscene {

// Forward-process constants: per-step betas and the cumulative signal
// coefficients alpha_bar_t. Immutable after construction.
class NoiseSchedule {
public:
    // Classic DDPM linear betas.
    static NoiseSchedule linear(int t_train = 1000, double beta_start = 1e-4,
                                double beta_end = 0.02);
    // The schedule published with the pretrained inpainting backbones
    // (betas linear in sqrt space). Default everywhere.
    static NoiseSchedule scaled_linear(int t_train = 1000, double beta_start = 0.00085,
                                       double beta_end = 0.012);
    // Explicit table, for tests that need exact alpha_bar values.
    static NoiseSchedule from_alpha_bars(std::vector<double> alpha_bars);

    static NoiseSchedule from_id(const std::string& id);

    int t_train() const { return static_cast<int>(alpha_bars_.size()); }
    double alpha_bar(int t) const;
    const std::string& id() const { return id_; }

private:
    NoiseSchedule(std::vector<double> alpha_bars, std::string id);

    std::vector<double> alpha_bars_;
    std::string id_;
};

} // namespace inscene
