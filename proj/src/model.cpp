#include "hookmil/model.hpp"

#include <algorithm>
#include <utility>

#include "hookmil/metrics.hpp"

namespace hookmil {

ModelKind parse_model_kind(const std::string& text) {
    if (text == "hookmil") return ModelKind::HookMil;
    if (text == "abmil") return ModelKind::Abmil;
    throw ConfigError("unknown model '" + text +
                      "' (expected hookmil or abmil)");
}

std::string to_string(ModelKind kind) {
    return kind == ModelKind::HookMil ? "hookmil" : "abmil";
}

ModelParams init_model(const ModelShape& shape,
                       const HookInitStrategy& strategy, Rng& rng) {
    if (shape.dim == 0) throw ConfigError("init_model: dim must be positive");
    if (shape.rounds == 0)
        throw ConfigError("init_model: rounds must be at least 1");
    ModelParams p;
    p.kind = shape.kind;
    p.rounds = shape.rounds;
    if (shape.kind == ModelKind::HookMil)
        p.hook = init_hook_params(shape.hooks, shape.dim, shape.heads,
                                  strategy, rng);
    const std::size_t attn_dim = std::min(shape.attn_dim, shape.dim);
    p.pool = init_pool_params(shape.dim, attn_dim, shape.classes, rng);
    return p;
}

ForwardResult model_forward(const ModelParams& params, const Matrix& features,
                            int label, double lambda, ModelTape* tape) {
    if (lambda < 0.0)
        throw ConfigError("model_forward: lambda must be non-negative");
    if (label < 0 ||
        static_cast<std::size_t>(label) >= params.pool.num_classes())
        throw ConfigError("model_forward: label " + std::to_string(label) +
                          " outside [0, " +
                          std::to_string(params.pool.num_classes()) + ")");

    const Matrix* cur = &features;
    Matrix staged;
    double div = 0.0;
    double hook_sim = 0.0;
    if (tape) {
        tape->hook_rounds.clear();
        tape->params_version = params.version;
    }
    if (params.kind == ModelKind::HookMil) {
        for (std::size_t r = 0; r < params.rounds; ++r) {
            HookBlockTape round_tape;
            HookForwardRecord rec = hook_forward(
                *cur, *params.hook, kDiversityEps, tape ? &round_tape : nullptr);
            // lambda == 0 disables the diversity term entirely; the loss and
            // metrics then report 0 for it. hook_sim stays on regardless so
            // regularized and unregularized runs remain comparable.
            if (lambda > 0.0) div += rec.div_loss;
            hook_sim += mean_offdiag_similarity(rec.logits);
            staged = std::move(rec.x_prime);
            cur = &staged;
            if (tape) tape->hook_rounds.push_back(std::move(round_tape));
        }
        div /= static_cast<double>(params.rounds);
        hook_sim /= static_cast<double>(params.rounds);
    }

    ForwardResult out;
    auto [z, attn] = attention_pool(*cur, params.pool, tape ? &tape->pool : nullptr);
    Matrix logits = classify_logits(z, params.pool);
    out.pred.probs = row_softmax(logits);
    out.pred.attention = std::move(attn);
    out.pred.z = std::move(z);
    out.ce = cross_entropy_from_logits(logits, label);
    out.div = div;
    out.total = total_loss(out.ce, out.div, lambda);
    out.hook_sim = hook_sim;

    if (tape) {
        tape->class_logits = std::move(logits);
        tape->probs = out.pred.probs;
        tape->label = label;
        tape->lambda = lambda;
        tape->ce = out.ce;
        tape->div = out.div;
        tape->total = out.total;
    }
    return out;
}

ModelInspection model_inspect(const ModelParams& params,
                              const Matrix& features) {
    ModelInspection out;
    const Matrix* cur = &features;
    Matrix staged;
    if (params.kind == ModelKind::HookMil) {
        for (std::size_t r = 0; r < params.rounds; ++r) {
            HookForwardRecord rec = hook_forward(*cur, *params.hook);
            out.div += rec.div_loss;
            out.hook_rounds.push_back(std::move(rec));
            staged = out.hook_rounds.back().x_prime;
            cur = &staged;
        }
        out.div /= static_cast<double>(params.rounds);
    }
    auto [z, attn] = attention_pool(*cur, params.pool);
    out.pred.probs = classify(z, params.pool);
    out.pred.attention = std::move(attn);
    out.pred.z = std::move(z);
    return out;
}

ModelParams zeros_like(const ModelParams& params) {
    ModelParams z = params;
    for_each_param(z, [](const std::string&, Matrix& m) {
        m = Matrix::zeros_like(m);
    });
    return z;
}

std::size_t param_count(const ModelParams& params) {
    std::size_t n = 0;
    for_each_param(params,
                   [&n](const std::string&, const Matrix& m) { n += m.size(); });
    return n;
}

}  // namespace hookmil
