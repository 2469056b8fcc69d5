#include "hookmil/adam.hpp"

#include <cmath>
#include <vector>

namespace hookmil {

namespace {

std::vector<Matrix*> param_slots(ModelParams& p) {
    std::vector<Matrix*> slots;
    for_each_param(p, [&](const std::string&, Matrix& m) {
        slots.push_back(&m);
    });
    return slots;
}

std::vector<const Matrix*> param_slots(const ModelParams& p) {
    std::vector<const Matrix*> slots;
    for_each_param(p, [&](const std::string&, const Matrix& m) {
        slots.push_back(&m);
    });
    return slots;
}

}  // namespace

AdamState AdamState::init(const ModelParams& params) {
    AdamState s;
    s.m = zeros_like(params);
    s.v = zeros_like(params);
    s.t = 0;
    return s;
}

void adam_step(ModelParams& params, const GradSet& grads, AdamState& state,
               const AdamConfig& cfg) {
    if (!(cfg.lr > 0.0)) throw ConfigError("adam_step: lr must be positive");

    auto p_slots = param_slots(params);
    auto g_slots = param_slots(grads.g);
    auto m_slots = param_slots(state.m);
    auto v_slots = param_slots(state.v);
    if (g_slots.size() != p_slots.size() || m_slots.size() != p_slots.size() ||
        v_slots.size() != p_slots.size())
        throw DimensionError("adam_step: parameter/gradient/state layouts "
                             "disagree");

    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));

    for (std::size_t s = 0; s < p_slots.size(); ++s) {
        Matrix& p = *p_slots[s];
        const Matrix& g0 = *g_slots[s];
        Matrix& m = *m_slots[s];
        Matrix& v = *v_slots[s];
        require_same_shape(p, g0, "adam_step");
        require_same_shape(p, m, "adam_step");
        require_same_shape(p, v, "adam_step");
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = g0.data()[i] + cfg.weight_decay * p.data()[i];
            m.data()[i] = cfg.beta1 * m.data()[i] + (1.0 - cfg.beta1) * g;
            v.data()[i] = cfg.beta2 * v.data()[i] + (1.0 - cfg.beta2) * g * g;
            const double m_hat = m.data()[i] / bc1;
            const double v_hat = v.data()[i] / bc2;
            p.data()[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
    params.version += 1;
}

}  // namespace hookmil
