#include "hookmil/grad.hpp"

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace hookmil {

GradSet GradSet::zeros_like(const ModelParams& params) {
    GradSet gs;
    gs.g = hookmil::zeros_like(params);
    return gs;
}

Matrix& GradSet::by_name(const std::string& name) {
    Matrix* found = nullptr;
    for_each_param(g, [&](const std::string& n, Matrix& m) {
        if (n == name) found = &m;
    });
    if (!found) throw ConfigError("unknown parameter '" + name + "'");
    return *found;
}

const Matrix& GradSet::by_name(const std::string& name) const {
    return const_cast<GradSet*>(this)->by_name(name);
}

// === layer rules =============================================================

Matrix softmax_rows_backward(const Matrix& probs, const Matrix& d_probs) {
    require_same_shape(probs, d_probs, "softmax_rows_backward");
    Matrix d_scores(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < probs.cols(); ++j)
            dot += probs.at(i, j) * d_probs.at(i, j);
        for (std::size_t j = 0; j < probs.cols(); ++j)
            d_scores.at(i, j) = probs.at(i, j) * (d_probs.at(i, j) - dot);
    }
    return d_scores;
}

Matrix layer_norm_backward(const Matrix& d_out, const LayerNormTape& tape,
                           const Matrix& gain, Matrix& d_gain,
                           Matrix& d_bias) {
    require_same_shape(d_out, tape.x_hat, "layer_norm_backward");
    const std::size_t n = d_out.cols();
    Matrix d_in(d_out.rows(), n);
    for (std::size_t i = 0; i < d_out.rows(); ++i) {
        // dh is the gradient at the normalized (pre-affine) values.
        double mean_dh = 0.0, mean_dh_xhat = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double dh = d_out.at(i, j) * gain.at(0, j);
            mean_dh += dh;
            mean_dh_xhat += dh * tape.x_hat.at(i, j);
        }
        mean_dh /= static_cast<double>(n);
        mean_dh_xhat /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double dh = d_out.at(i, j) * gain.at(0, j);
            d_in.at(i, j) = tape.inv_std[i] *
                            (dh - mean_dh - tape.x_hat.at(i, j) * mean_dh_xhat);
            d_gain.at(0, j) += d_out.at(i, j) * tape.x_hat.at(i, j);
            d_bias.at(0, j) += d_out.at(i, j);
        }
    }
    return d_in;
}

Matrix diversity_loss_backward(const Matrix& logits, double eps) {
    const std::size_t k = logits.rows();
    if (k <= 1) return Matrix::zeros_like(logits);
    const double fnorm = frobenius_norm(logits);
    if (fnorm == 0.0) return Matrix::zeros_like(logits);

    const Matrix g = frobenius_normalize(logits, eps);
    const Matrix sim = matmul_nt(g, g);
    const double c = 1.0 / (static_cast<double>(k) * static_cast<double>(k - 1));

    // loss = c * sum_{i != j} sim_ij^2, sim = G G^T, G = L / (fnorm + eps).
    Matrix d_sim(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            d_sim.at(i, j) = i == j ? 0.0 : 2.0 * c * sim.at(i, j);
    // d_sim is symmetric, so (d_sim + d_sim^T) G collapses to 2 d_sim G.
    Matrix d_g = matmul(d_sim, g);
    scale_inplace(d_g, 2.0);

    // G depends on L directly and through fnorm.
    const double denom = fnorm + eps;
    const double coupling = dot_all(d_g, logits) / (fnorm * denom * denom);
    Matrix d_logits = scale(d_g, 1.0 / denom);
    add_scaled_inplace(d_logits, logits, -coupling);
    return d_logits;
}

// === block-level backward ====================================================

namespace {

// Stage 3: X' = LN(X + A_x2h * (H' fb_wv^T)). Consumes d_x_prime, emits the
// gradient reaching this round's input X and the hooks H'.
void feedback_backward(const Matrix& d_x_prime, const HookBlockTape& t,
                       const HookParams& p, HookParams& g, Matrix& d_x_in,
                       Matrix& d_h_prime) {
    Matrix d_pre = layer_norm_backward(d_x_prime, t.ln_fb, p.ln_fb.gain,
                                       g.ln_fb.gain, g.ln_fb.bias);
    d_x_in = d_pre;  // residual path

    Matrix d_attn = matmul_nt(d_pre, t.hook_v);          // N x K
    Matrix d_hook_v = matmul_tn(t.a_x2h, d_pre);         // K x D
    Matrix d_scores = softmax_rows_backward(t.a_x2h, d_attn);
    const double s = 1.0 / std::sqrt(static_cast<double>(p.dim()));
    Matrix d_inst_q = matmul(d_scores, t.hook_k);        // N x D
    scale_inplace(d_inst_q, s);
    Matrix d_hook_k = matmul_tn(d_scores, t.inst_q);     // K x D
    scale_inplace(d_hook_k, s);

    add_inplace(g.fb_wq, matmul_tn(d_inst_q, t.x));
    add_inplace(d_x_in, matmul(d_inst_q, p.fb_wq));
    add_inplace(g.fb_wk, matmul_tn(d_hook_k, t.h_prime));
    d_h_prime = matmul(d_hook_k, p.fb_wk);
    add_inplace(g.fb_wv, matmul_tn(d_hook_v, t.h_prime));
    add_inplace(d_h_prime, matmul(d_hook_v, p.fb_wv));
}

// Stage 2: H' = LN(H~ + concat_heads(attn_l V_l) inter_wo^T). Consumes
// d_h_prime, emits the gradient reaching H~.
void intercomm_backward(const Matrix& d_h_prime, const HookBlockTape& t,
                        const HookParams& p, HookParams& g,
                        Matrix& d_h_tilde) {
    Matrix d_pre = layer_norm_backward(d_h_prime, t.ln_inter, p.ln_inter.gain,
                                       g.ln_inter.gain, g.ln_inter.bias);
    d_h_tilde = d_pre;  // residual path

    add_inplace(g.inter_wo, matmul_tn(d_pre, t.concat_out));
    Matrix d_concat = matmul(d_pre, p.inter_wo);         // K x D

    const std::size_t K = d_h_prime.rows();
    const std::size_t heads = p.heads.size();
    const std::size_t head_dim = p.dim() / heads;
    const double s = 1.0 / std::sqrt(static_cast<double>(head_dim));
    for (std::size_t l = 0; l < heads; ++l) {
        Matrix d_out(K, head_dim);
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t j = 0; j < head_dim; ++j)
                d_out.at(i, j) = d_concat.at(i, l * head_dim + j);

        Matrix d_attn = matmul_nt(d_out, t.head_v[l]);   // K x K
        Matrix d_v = matmul_tn(t.head_attn[l], d_out);   // K x head_dim
        Matrix d_scores = softmax_rows_backward(t.head_attn[l], d_attn);
        Matrix d_q = matmul(d_scores, t.head_k[l]);
        scale_inplace(d_q, s);
        Matrix d_k = matmul_tn(d_scores, t.head_q[l]);
        scale_inplace(d_k, s);

        // Per-head projections multiply H~ directly (no transpose).
        add_inplace(g.heads[l].w_q, matmul_tn(t.h_tilde, d_q));
        add_inplace(g.heads[l].w_k, matmul_tn(t.h_tilde, d_k));
        add_inplace(g.heads[l].w_v, matmul_tn(t.h_tilde, d_v));
        add_inplace(d_h_tilde, matmul_nt(d_q, p.heads[l].w_q));
        add_inplace(d_h_tilde, matmul_nt(d_k, p.heads[l].w_k));
        add_inplace(d_h_tilde, matmul_nt(d_v, p.heads[l].w_v));
    }
}

// Stage 1: H~ = LN(H + A_h2x * (X agg_wv^T)), with the diversity branch
// feeding extra gradient into the pre-softmax logits. Accumulates into the
// round input's gradient d_x_in.
void aggregation_backward(const Matrix& d_h_tilde, const Matrix& d_logits_div,
                          const HookBlockTape& t, const HookParams& p,
                          HookParams& g, Matrix& d_x_in) {
    Matrix d_pre = layer_norm_backward(d_h_tilde, t.ln_agg, p.ln_agg.gain,
                                       g.ln_agg.gain, g.ln_agg.bias);
    add_inplace(g.tokens, d_pre);  // residual path

    Matrix d_attn = matmul_nt(d_pre, t.inst_v);          // K x N
    Matrix d_inst_v = matmul_tn(t.a_h2x, d_pre);         // N x D
    Matrix d_logits = softmax_rows_backward(t.a_h2x, d_attn);
    add_inplace(d_logits, d_logits_div);

    const double s = 1.0 / std::sqrt(static_cast<double>(p.dim()));
    Matrix d_hook_q = matmul(d_logits, t.inst_k);        // K x D
    scale_inplace(d_hook_q, s);
    Matrix d_inst_k = matmul_tn(d_logits, t.hook_q);     // N x D
    scale_inplace(d_inst_k, s);

    add_inplace(g.agg_wq, matmul_tn(d_hook_q, p.tokens));
    add_inplace(g.tokens, matmul(d_hook_q, p.agg_wq));
    add_inplace(g.agg_wk, matmul_tn(d_inst_k, t.x));
    add_inplace(d_x_in, matmul(d_inst_k, p.agg_wk));
    add_inplace(g.agg_wv, matmul_tn(d_inst_v, t.x));
    add_inplace(d_x_in, matmul(d_inst_v, p.agg_wv));
}

// Pooling + classifier backward. Returns the gradient w.r.t. the pooled
// input (X' for hookmil, raw X for abmil).
Matrix head_backward(const ModelTape& tape, const ModelParams& params,
                     GradSet& gs, double loss_scale) {
    const PoolTape& pt = tape.pool;
    const std::size_t n = pt.x.rows();
    const std::size_t C = params.pool.num_classes();

    // Softmax + cross-entropy collapse to probs - onehot.
    Matrix d_logits(1, C);
    for (std::size_t j = 0; j < C; ++j)
        d_logits.at(0, j) =
            loss_scale * (tape.probs.at(0, j) -
                          (static_cast<int>(j) == tape.label ? 1.0 : 0.0));

    add_inplace(gs.g.pool.clf_b, d_logits);
    add_inplace(gs.g.pool.clf_w, matmul_tn(d_logits, pt.z));
    Matrix d_z = matmul(d_logits, params.pool.clf_w);    // 1 x D

    // z = sum_i a_i x_i.
    Matrix d_attn = matmul_nt(pt.x, d_z);                // N x 1
    Matrix d_x = matmul(pt.attention, d_z);              // N x D

    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        dot += pt.attention.at(i, 0) * d_attn.at(i, 0);
    Matrix d_scores(n, 1);
    for (std::size_t i = 0; i < n; ++i)
        d_scores.at(i, 0) = pt.attention.at(i, 0) * (d_attn.at(i, 0) - dot);

    add_inplace(gs.g.pool.w_a, matmul_tn(d_scores, pt.tanh_vals));
    Matrix d_tanh = matmul(d_scores, params.pool.w_a);   // N x D_a
    for (std::size_t i = 0; i < d_tanh.size(); ++i) {
        const double tv = pt.tanh_vals.data()[i];
        d_tanh.data()[i] *= 1.0 - tv * tv;
    }
    add_inplace(gs.g.pool.v_a, matmul_tn(d_tanh, pt.x));
    add_inplace(d_x, matmul(d_tanh, params.pool.v_a));
    return d_x;
}

}  // namespace

GradSet backward(const ModelTape& tape, const ModelParams& params,
                 double loss_scale) {
    if (tape.params_version != params.version)
        throw SequencingError(
            "backward: tape recorded at parameter version " +
            std::to_string(tape.params_version) + " but parameters are at " +
            std::to_string(params.version));
    if (tape.label < 0) throw SequencingError("backward: tape has no label");

    GradSet gs = GradSet::zeros_like(params);
    Matrix d_x = head_backward(tape, params, gs, loss_scale);

    if (params.kind == ModelKind::HookMil) {
        if (tape.hook_rounds.size() != params.rounds)
            throw SequencingError("backward: tape holds " +
                                  std::to_string(tape.hook_rounds.size()) +
                                  " hook rounds, model expects " +
                                  std::to_string(params.rounds));
        const double div_weight =
            loss_scale * tape.lambda / static_cast<double>(params.rounds);
        for (std::size_t r = params.rounds; r-- > 0;) {
            const HookBlockTape& t = tape.hook_rounds[r];
            Matrix d_x_in, d_h_prime, d_h_tilde;
            feedback_backward(d_x, t, *params.hook, *gs.g.hook, d_x_in,
                              d_h_prime);
            intercomm_backward(d_h_prime, t, *params.hook, *gs.g.hook,
                               d_h_tilde);
            // Zero weight (lambda == 0) means the diversity branch never
            // entered the loss; skip its backward entirely.
            Matrix d_logits_div =
                div_weight != 0.0
                    ? diversity_loss_backward(t.logits, t.div_eps)
                    : Matrix(t.logits.rows(), t.logits.cols());
            if (div_weight != 0.0) scale_inplace(d_logits_div, div_weight);
            aggregation_backward(d_h_tilde, d_logits_div, t, *params.hook,
                                 *gs.g.hook, d_x_in);
            d_x = std::move(d_x_in);
        }
    }
    return gs;
}

Matrix finite_diff_grad(const std::string& param_name,
                        const ModelParams& model, const Matrix& features,
                        int label, double lambda, double h) {
    if (!(h > 0.0)) throw ConfigError("finite_diff_grad: h must be positive");
    ModelParams probe = model;
    Matrix* target = nullptr;
    for_each_param(probe, [&](const std::string& n, Matrix& m) {
        if (n == param_name) target = &m;
    });
    if (!target)
        throw ConfigError("finite_diff_grad: unknown parameter '" +
                          param_name + "'");

    Matrix grad(target->rows(), target->cols());
    for (std::size_t idx = 0; idx < target->size(); ++idx) {
        const double saved = target->data()[idx];
        target->data()[idx] = saved + h;
        const double up =
            model_forward(probe, features, label, lambda).total;
        target->data()[idx] = saved - h;
        const double down =
            model_forward(probe, features, label, lambda).total;
        target->data()[idx] = saved;
        grad.data()[idx] = (up - down) / (2.0 * h);
    }
    return grad;
}

}  // namespace hookmil
