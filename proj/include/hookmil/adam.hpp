#pragma once

#include <cstdint>

#include "hookmil/grad.hpp"
#include "hookmil/model.hpp"

namespace hookmil {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-5;  // L2 term added to the gradient
};

// First/second moment estimates parked in parameter-shaped slots.
struct AdamState {
    ModelParams m;
    ModelParams v;
    std::uint64_t t = 0;

    static AdamState init(const ModelParams& params);
};

// One bias-corrected Adam update in place. Bumps params.version so stale
// tapes are rejected by backward().
void adam_step(ModelParams& params, const GradSet& grads, AdamState& state,
               const AdamConfig& cfg);

}  // namespace hookmil
