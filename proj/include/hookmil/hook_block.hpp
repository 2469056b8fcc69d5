#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "hookmil/matrix.hpp"
#include "hookmil/rng.hpp"

namespace hookmil {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kDiversityEps = 1e-6;

struct LayerNormParams {
    Matrix gain;  // 1 x D
    Matrix bias;  // 1 x D
};

// One self-attention head over the hook tokens; weights are D x (D/heads).
struct HeadParams {
    Matrix w_q;
    Matrix w_k;
    Matrix w_v;
};

// All learnable state of the hook block.
//
// Cross-attention projections are D x D and applied as x * W^T; per-head
// weights are D x head_dim and applied as x * W.
struct HookParams {
    Matrix tokens;  // K x D, learnable hook tokens

    // hook -> instance aggregation
    Matrix agg_wq;
    Matrix agg_wk;
    Matrix agg_wv;
    LayerNormParams ln_agg;

    // hook intercommunication (multi-head self-attention over the K hooks)
    std::vector<HeadParams> heads;
    Matrix inter_wo;  // D x D output projection
    LayerNormParams ln_inter;

    // instance <- hook feedback
    Matrix fb_wq;
    Matrix fb_wk;
    Matrix fb_wv;
    LayerNormParams ln_fb;

    std::size_t hook_count() const { return tokens.rows(); }
    std::size_t dim() const { return tokens.cols(); }
    std::size_t head_count() const { return heads.size(); }
};

struct HookInitStrategy {
    enum class Kind { TruncNormal, ExternalVectors };
    Kind kind = Kind::TruncNormal;
    double stddev = 0.02;
    std::string path;  // bag-format file holding K x D vectors

    static HookInitStrategy trunc_normal(double stddev = 0.02);
    static HookInitStrategy external(std::string path);

    // "trunc-normal" or "external:<path>".
    static HookInitStrategy parse(const std::string& text);
    std::string to_string() const;
};

// Everything one hook round produces that callers may inspect.
struct HookForwardRecord {
    Matrix x_prime;   // N x D context-aware instances
    Matrix h_tilde;   // K x D hooks after aggregation
    Matrix h_prime;   // K x D hooks after intercommunication
    Matrix logits;    // K x N pre-softmax aggregation scores
    Matrix a_h2x;     // K x N, rows sum to 1
    Matrix a_x2h;     // N x K, rows sum to 1
    double div_loss = 0.0;
};

// Cached intermediates one round of the block needs for its backward pass.
struct HookBlockTape {
    Matrix x;  // round input

    Matrix hook_q, inst_k, inst_v;  // stage-1 projections
    Matrix logits, a_h2x;
    LayerNormTape ln_agg;
    Matrix h_tilde;

    std::vector<Matrix> head_q, head_k, head_v, head_attn;
    Matrix concat_out;
    LayerNormTape ln_inter;
    Matrix h_prime;

    Matrix inst_q, hook_k, hook_v;  // stage-3 projections
    Matrix a_x2h;
    LayerNormTape ln_fb;

    double div_loss = 0.0;
    double div_eps = kDiversityEps;
};

// --- construction ----------------------------------------------------------

// Hook tokens only. ExternalVectors loads a K x D bag-format file and fails
// on any shape mismatch.
Matrix init_hooks(const HookInitStrategy& strategy, std::size_t hook_count,
                  std::size_t dim, Rng& rng);

// Full block: tokens per strategy, projections uniform in [-1/sqrt(D),
// +1/sqrt(D)], LayerNorm gain 1 / bias 0.
HookParams init_hook_params(std::size_t hook_count, std::size_t dim,
                            std::size_t heads, const HookInitStrategy& strategy,
                            Rng& rng);

// --- forward ---------------------------------------------------------------

struct HookAggregation {
    Matrix h_tilde;
    Matrix logits;
    Matrix attn;
};

// Stage 1: hooks query instances; returns updated hooks, pre-softmax logits,
// and the K x N attention map.
HookAggregation hook_to_instance(const Matrix& instances, const HookParams& p,
                                 HookBlockTape* tape = nullptr);

// Stage 2: multi-head self-attention among the K hooks, residual + LayerNorm.
Matrix hook_intercomm(const Matrix& h_tilde, const HookParams& p,
                      HookBlockTape* tape = nullptr);

// Stage 3: instances query the refined hooks; returns (x_prime, a_x2h).
std::pair<Matrix, Matrix> instance_feedback(const Matrix& instances,
                                            const Matrix& h_prime,
                                            const HookParams& p,
                                            HookBlockTape* tape = nullptr);

// Stage 4: mean squared off-diagonal similarity of Frobenius-normalized
// logits rows. Defined as 0 for a single hook.
double diversity_loss(const Matrix& logits, double eps = kDiversityEps);

// All four stages in order.
HookForwardRecord hook_forward(const Matrix& instances, const HookParams& p,
                               double div_eps = kDiversityEps,
                               HookBlockTape* tape = nullptr);

// N x N dependency induced by routing through the hooks; row-stochastic,
// rank at most K.
Matrix induced_dependency(const Matrix& a_x2h, const Matrix& a_h2x);

}  // namespace hookmil
