#include "hookmil/hook_block.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

#include "hookmil/bag_io.hpp"
#include "hookmil/errors.hpp"

namespace hookmil {

namespace {

void require_dim(const Matrix& instances, const HookParams& p,
                 const char* where) {
    if (instances.cols() != p.dim())
        throw DimensionError(std::string(where) + ": instance dim " +
                             std::to_string(instances.cols()) +
                             " does not match hook dim " +
                             std::to_string(p.dim()));
    if (instances.rows() == 0)
        throw DimensionError(std::string(where) + ": empty bag");
}

}  // namespace

// === construction ===========================================================

HookInitStrategy HookInitStrategy::trunc_normal(double stddev) {
    HookInitStrategy s;
    s.kind = Kind::TruncNormal;
    s.stddev = stddev;
    return s;
}

HookInitStrategy HookInitStrategy::external(std::string path) {
    HookInitStrategy s;
    s.kind = Kind::ExternalVectors;
    s.path = std::move(path);
    return s;
}

HookInitStrategy HookInitStrategy::parse(const std::string& text) {
    if (text == "trunc-normal") return trunc_normal();
    if (text.rfind("trunc-normal:", 0) == 0) {
        const std::string arg = text.substr(13);
        try {
            std::size_t used = 0;
            const double std = std::stod(arg, &used);
            if (used != arg.size() || !(std > 0.0))
                throw std::invalid_argument(arg);
            return trunc_normal(std);
        } catch (const std::exception&) {
            throw ConfigError("hook init: bad stddev '" + arg + "'");
        }
    }
    if (text.rfind("external:", 0) == 0) {
        const std::string path = text.substr(9);
        if (path.empty())
            throw ConfigError("hook init: external strategy needs a path");
        return external(path);
    }
    throw ConfigError("hook init: unknown strategy '" + text +
                      "' (expected trunc-normal[:std] or external:<path>)");
}

std::string HookInitStrategy::to_string() const {
    if (kind == Kind::ExternalVectors) return "external:" + path;
    return "trunc-normal:" + format_double(stddev);
}

Matrix init_hooks(const HookInitStrategy& strategy, std::size_t hook_count,
                  std::size_t dim, Rng& rng) {
    if (hook_count == 0 || dim == 0)
        throw ConfigError("init_hooks: hook_count and dim must be positive");
    if (strategy.kind == HookInitStrategy::Kind::ExternalVectors) {
        BagFeatures bag = read_bag(strategy.path);
        if (bag.features.rows() != hook_count || bag.features.cols() != dim)
            throw DimensionError(
                "init_hooks: external vectors in " + strategy.path + " are " +
                shape_str(bag.features) + ", expected " +
                std::to_string(hook_count) + "x" + std::to_string(dim));
        return std::move(bag.features);
    }
    return truncated_normal_fill(hook_count, dim, strategy.stddev, rng);
}

HookParams init_hook_params(std::size_t hook_count, std::size_t dim,
                            std::size_t heads, const HookInitStrategy& strategy,
                            Rng& rng) {
    if (heads == 0 || dim % heads != 0)
        throw ConfigError("init_hook_params: dim " + std::to_string(dim) +
                          " must be divisible by heads " +
                          std::to_string(heads));
    const std::size_t head_dim = dim / heads;
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));

    // Draw order is fixed so a seed pins every weight: tokens, aggregation
    // q/k/v, each head's q/k/v, output projection, feedback q/k/v.
    HookParams p;
    p.tokens = init_hooks(strategy, hook_count, dim, rng);
    p.agg_wq = uniform_fill(dim, dim, -bound, bound, rng);
    p.agg_wk = uniform_fill(dim, dim, -bound, bound, rng);
    p.agg_wv = uniform_fill(dim, dim, -bound, bound, rng);
    p.heads.resize(heads);
    for (HeadParams& h : p.heads) {
        h.w_q = uniform_fill(dim, head_dim, -bound, bound, rng);
        h.w_k = uniform_fill(dim, head_dim, -bound, bound, rng);
        h.w_v = uniform_fill(dim, head_dim, -bound, bound, rng);
    }
    p.inter_wo = uniform_fill(dim, dim, -bound, bound, rng);
    p.fb_wq = uniform_fill(dim, dim, -bound, bound, rng);
    p.fb_wk = uniform_fill(dim, dim, -bound, bound, rng);
    p.fb_wv = uniform_fill(dim, dim, -bound, bound, rng);

    auto unit_ln = [dim] {
        LayerNormParams ln;
        ln.gain = Matrix(1, dim, 1.0);
        ln.bias = Matrix(1, dim, 0.0);
        return ln;
    };
    p.ln_agg = unit_ln();
    p.ln_inter = unit_ln();
    p.ln_fb = unit_ln();
    return p;
}

// === forward =================================================================

HookAggregation hook_to_instance(const Matrix& instances, const HookParams& p,
                                 HookBlockTape* tape) {
    require_dim(instances, p, "hook_to_instance");
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.dim()));

    Matrix hook_q = matmul_nt(p.tokens, p.agg_wq);    // K x D
    Matrix inst_k = matmul_nt(instances, p.agg_wk);   // N x D
    Matrix inst_v = matmul_nt(instances, p.agg_wv);   // N x D

    Matrix logits = matmul_nt(hook_q, inst_k);        // K x N
    scale_inplace(logits, scale);
    Matrix attn = row_softmax(logits);

    Matrix pooled = matmul(attn, inst_v);             // K x D
    Matrix pre_ln = add(p.tokens, pooled);
    LayerNormTape ln_tape;
    Matrix h_tilde = layer_norm_rows(pre_ln, p.ln_agg.gain, p.ln_agg.bias,
                                     kLayerNormEps, tape ? &ln_tape : nullptr);

    if (tape) {
        tape->x = instances;
        tape->hook_q = hook_q;
        tape->inst_k = std::move(inst_k);
        tape->inst_v = std::move(inst_v);
        tape->logits = logits;
        tape->a_h2x = attn;
        tape->ln_agg = std::move(ln_tape);
        tape->h_tilde = h_tilde;
    }
    return {std::move(h_tilde), std::move(logits), std::move(attn)};
}

Matrix hook_intercomm(const Matrix& h_tilde, const HookParams& p,
                      HookBlockTape* tape) {
    if (h_tilde.cols() != p.dim())
        throw DimensionError("hook_intercomm: input dim mismatch");
    if (p.heads.empty() || p.dim() % p.heads.size() != 0)
        throw DimensionError("hook_intercomm: dim must be divisible by heads");
    const std::size_t K = h_tilde.rows();
    const std::size_t heads = p.heads.size();
    const std::size_t head_dim = p.dim() / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    Matrix concat(K, p.dim());
    if (tape) {
        tape->head_q.clear();
        tape->head_k.clear();
        tape->head_v.clear();
        tape->head_attn.clear();
    }
    for (std::size_t l = 0; l < heads; ++l) {
        Matrix q = matmul(h_tilde, p.heads[l].w_q);   // K x head_dim
        Matrix k = matmul(h_tilde, p.heads[l].w_k);
        Matrix v = matmul(h_tilde, p.heads[l].w_v);
        Matrix scores = matmul_nt(q, k);              // K x K
        scale_inplace(scores, scale);
        Matrix attn = row_softmax(scores);
        Matrix out = matmul(attn, v);                 // K x head_dim
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t j = 0; j < head_dim; ++j)
                concat.at(i, l * head_dim + j) = out.at(i, j);
        if (tape) {
            tape->head_q.push_back(std::move(q));
            tape->head_k.push_back(std::move(k));
            tape->head_v.push_back(std::move(v));
            tape->head_attn.push_back(std::move(attn));
        }
    }

    Matrix projected = matmul_nt(concat, p.inter_wo);
    Matrix pre_ln = add(h_tilde, projected);
    LayerNormTape ln_tape;
    Matrix h_prime = layer_norm_rows(pre_ln, p.ln_inter.gain, p.ln_inter.bias,
                                     kLayerNormEps, tape ? &ln_tape : nullptr);
    if (tape) {
        tape->concat_out = std::move(concat);
        tape->ln_inter = std::move(ln_tape);
        tape->h_prime = h_prime;
    }
    return h_prime;
}

std::pair<Matrix, Matrix> instance_feedback(const Matrix& instances,
                                            const Matrix& h_prime,
                                            const HookParams& p,
                                            HookBlockTape* tape) {
    require_dim(instances, p, "instance_feedback");
    if (h_prime.cols() != p.dim())
        throw DimensionError("instance_feedback: hook dim mismatch");
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.dim()));

    Matrix inst_q = matmul_nt(instances, p.fb_wq);    // N x D
    Matrix hook_k = matmul_nt(h_prime, p.fb_wk);      // K x D
    Matrix hook_v = matmul_nt(h_prime, p.fb_wv);      // K x D

    Matrix scores = matmul_nt(inst_q, hook_k);        // N x K
    scale_inplace(scores, scale);
    Matrix attn = row_softmax(scores);

    Matrix pulled = matmul(attn, hook_v);             // N x D
    Matrix pre_ln = add(instances, pulled);
    LayerNormTape ln_tape;
    Matrix x_prime = layer_norm_rows(pre_ln, p.ln_fb.gain, p.ln_fb.bias,
                                     kLayerNormEps, tape ? &ln_tape : nullptr);
    if (tape) {
        tape->inst_q = std::move(inst_q);
        tape->hook_k = std::move(hook_k);
        tape->hook_v = std::move(hook_v);
        tape->a_x2h = attn;
        tape->ln_fb = std::move(ln_tape);
    }
    return {std::move(x_prime), std::move(attn)};
}

double diversity_loss(const Matrix& logits, double eps) {
    const std::size_t K = logits.rows();
    if (K <= 1) return 0.0;
    Matrix g = frobenius_normalize(logits, eps);
    Matrix sim = matmul_nt(g, g);  // K x K cosine-like similarities
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j)
            if (i != j) sum_sq += sim.at(i, j) * sim.at(i, j);
    return sum_sq / (static_cast<double>(K) * static_cast<double>(K - 1));
}

HookForwardRecord hook_forward(const Matrix& instances, const HookParams& p,
                               double div_eps, HookBlockTape* tape) {
    HookAggregation agg = hook_to_instance(instances, p, tape);
    Matrix h_prime = hook_intercomm(agg.h_tilde, p, tape);
    auto [x_prime, a_x2h] = instance_feedback(instances, h_prime, p, tape);
    const double div = diversity_loss(agg.logits, div_eps);
    if (tape) {
        tape->div_loss = div;
        tape->div_eps = div_eps;
    }
    HookForwardRecord rec;
    rec.x_prime = std::move(x_prime);
    rec.h_tilde = std::move(agg.h_tilde);
    rec.h_prime = std::move(h_prime);
    rec.logits = std::move(agg.logits);
    rec.a_h2x = std::move(agg.attn);
    rec.a_x2h = std::move(a_x2h);
    rec.div_loss = div;
    return rec;
}

Matrix induced_dependency(const Matrix& a_x2h, const Matrix& a_h2x) {
    if (a_x2h.cols() != a_h2x.rows())
        throw DimensionError("induced_dependency: hook counts differ (" +
                             shape_str(a_x2h) + " vs " + shape_str(a_h2x) +
                             ")");
    return matmul(a_x2h, a_h2x);  // N x N, row-stochastic
}

}  // namespace hookmil
