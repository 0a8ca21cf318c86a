#include "inscene/schedule.hpp"

#include <cmath>

namespace inscene {

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bars, std::string id)
    : alpha_bars_(std::move(alpha_bars)), id_(std::move(id)) {
    if (alpha_bars_.empty()) throw ValidationError("noise schedule is empty");
    double prev = 1.0 + 1e-12;
    for (double a : alpha_bars_) {
        if (!(a > 0.0 && a <= 1.0)) throw ValidationError("alpha_bar out of (0, 1]");
        if (a > prev) throw ValidationError("alpha_bar must be non-increasing");
        prev = a;
    }
}

NoiseSchedule NoiseSchedule::linear(int t_train, double beta_start, double beta_end) {
    if (t_train < 1) throw ValidationError("t_train must be positive");
    std::vector<double> bars(static_cast<size_t>(t_train));
    double acc = 1.0;
    for (int t = 0; t < t_train; ++t) {
        const double beta =
            beta_start + (beta_end - beta_start) * (t_train == 1 ? 0.0 : static_cast<double>(t) / (t_train - 1));
        acc *= 1.0 - beta;
        bars[t] = acc;
    }
    return NoiseSchedule(std::move(bars), "linear_" + std::to_string(t_train));
}

NoiseSchedule NoiseSchedule::scaled_linear(int t_train, double beta_start, double beta_end) {
    if (t_train < 1) throw ValidationError("t_train must be positive");
    const double s0 = std::sqrt(beta_start);
    const double s1 = std::sqrt(beta_end);
    std::vector<double> bars(static_cast<size_t>(t_train));
    double acc = 1.0;
    for (int t = 0; t < t_train; ++t) {
        const double s =
            s0 + (s1 - s0) * (t_train == 1 ? 0.0 : static_cast<double>(t) / (t_train - 1));
        acc *= 1.0 - s * s;
        bars[t] = acc;
    }
    return NoiseSchedule(std::move(bars), "scaled_linear_" + std::to_string(t_train));
}

NoiseSchedule NoiseSchedule::from_alpha_bars(std::vector<double> alpha_bars) {
    const std::string id = "custom_" + std::to_string(alpha_bars.size());
    return NoiseSchedule(std::move(alpha_bars), id);
}

NoiseSchedule NoiseSchedule::from_id(const std::string& id) {
    const auto underscore = id.rfind('_');
    if (underscore != std::string::npos) {
        const std::string kind = id.substr(0, underscore);
        const int t = std::stoi(id.substr(underscore + 1));
        if (kind == "linear") return linear(t);
        if (kind == "scaled_linear") return scaled_linear(t);
    }
    throw ValidationError("unknown noise schedule id: " + id);
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t >= t_train())
        throw ValidationError("timestep out of schedule range: " + std::to_string(t));
    return alpha_bars_[static_cast<size_t>(t)];
}

} // namespace inscene
