#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hookmil/bag_io.hpp"
#include "hookmil/errors.hpp"
#include "hookmil/hook_block.hpp"
#include "hookmil/mil_heads.hpp"

namespace hookmil {

enum class ModelKind { HookMil, Abmil };

ModelKind parse_model_kind(const std::string& text);
std::string to_string(ModelKind kind);

// Complete learnable state. `version` increments on every optimizer step so
// a tape recorded against older parameters is detectably stale.
struct ModelParams {
    ModelKind kind = ModelKind::HookMil;
    std::optional<HookParams> hook;  // absent for the abmil baseline
    PoolParams pool;
    std::size_t rounds = 1;  // hook block applications per forward
    std::uint64_t version = 0;
};

struct ModelShape {
    std::size_t dim = 0;
    std::size_t hooks = 8;
    std::size_t heads = 4;
    std::size_t attn_dim = 128;  // clipped to dim at init
    std::size_t classes = 2;
    std::size_t rounds = 1;
    ModelKind kind = ModelKind::HookMil;
};

// Draw order: hook block first (when present), then the pooling head.
ModelParams init_model(const ModelShape& shape,
                       const HookInitStrategy& strategy, Rng& rng);

// Everything backward() needs from one forward pass.
struct ModelTape {
    std::uint64_t params_version = 0;
    std::vector<HookBlockTape> hook_rounds;  // empty for abmil
    PoolTape pool;
    Matrix class_logits;  // 1 x C
    Matrix probs;         // 1 x C
    int label = -1;
    double lambda = 0.0;
    double ce = 0.0;
    double div = 0.0;
    double total = 0.0;
};

struct ForwardResult {
    BagPrediction pred;
    double ce = 0.0;
    double div = 0.0;    // mean over rounds for rounds > 1
    double total = 0.0;  // ce + lambda * div
    double hook_sim = 0.0;  // mean off-diagonal hook similarity, 0 for abmil
};

// Full pipeline on one bag: hook rounds (for hookmil), attention pooling,
// classification, losses.
ForwardResult model_forward(const ModelParams& params, const Matrix& features,
                            int label, double lambda,
                            ModelTape* tape = nullptr);

// Forward without a label or losses except diversity; exposes per-round hook
// records for inspection.
struct ModelInspection {
    std::vector<HookForwardRecord> hook_rounds;
    BagPrediction pred;
    double div = 0.0;
};

ModelInspection model_inspect(const ModelParams& params,
                              const Matrix& features);

// Visits every learnable matrix as (name, matrix). Names are stable: they key
// checkpoints and gradient lookups. Order is fixed and matches init draw
// order.
template <typename Params, typename Fn>
void for_each_param(Params& p, Fn&& fn) {
    if (p.hook) {
        auto& h = *p.hook;
        fn("hook.tokens", h.tokens);
        fn("hook.agg.w_q", h.agg_wq);
        fn("hook.agg.w_k", h.agg_wk);
        fn("hook.agg.w_v", h.agg_wv);
        for (std::size_t l = 0; l < h.heads.size(); ++l) {
            const std::string base = "hook.inter.h" + std::to_string(l);
            fn(base + ".w_q", h.heads[l].w_q);
            fn(base + ".w_k", h.heads[l].w_k);
            fn(base + ".w_v", h.heads[l].w_v);
        }
        fn("hook.inter.w_o", h.inter_wo);
        fn("hook.fb.w_q", h.fb_wq);
        fn("hook.fb.w_k", h.fb_wk);
        fn("hook.fb.w_v", h.fb_wv);
        fn("hook.ln_agg.gain", h.ln_agg.gain);
        fn("hook.ln_agg.bias", h.ln_agg.bias);
        fn("hook.ln_inter.gain", h.ln_inter.gain);
        fn("hook.ln_inter.bias", h.ln_inter.bias);
        fn("hook.ln_fb.gain", h.ln_fb.gain);
        fn("hook.ln_fb.bias", h.ln_fb.bias);
    }
    fn("pool.v_a", p.pool.v_a);
    fn("pool.w_a", p.pool.w_a);
    fn("clf.w", p.pool.clf_w);
    fn("clf.b", p.pool.clf_b);
}

// Structural copy with every matrix zeroed; kind/rounds metadata preserved.
ModelParams zeros_like(const ModelParams& params);

std::size_t param_count(const ModelParams& params);  // total scalar count

}  // namespace hookmil
