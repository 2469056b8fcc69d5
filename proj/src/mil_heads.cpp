#include "hookmil/mil_heads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hookmil/errors.hpp"

namespace hookmil {

PoolParams init_pool_params(std::size_t dim, std::size_t attn_dim,
                            std::size_t num_classes, Rng& rng) {
    if (dim == 0 || attn_dim == 0 || num_classes < 2)
        throw ConfigError("init_pool_params: need dim, attn_dim > 0 and at "
                          "least 2 classes");
    const double b_in = 1.0 / std::sqrt(static_cast<double>(dim));
    const double b_attn = 1.0 / std::sqrt(static_cast<double>(attn_dim));
    PoolParams p;
    p.v_a = uniform_fill(attn_dim, dim, -b_in, b_in, rng);
    p.w_a = uniform_fill(1, attn_dim, -b_attn, b_attn, rng);
    p.clf_w = uniform_fill(num_classes, dim, -b_in, b_in, rng);
    p.clf_b = Matrix(1, num_classes, 0.0);
    return p;
}

std::pair<Matrix, Matrix> attention_pool(const Matrix& x,
                                         const PoolParams& params,
                                         PoolTape* tape) {
    if (x.rows() == 0) throw DimensionError("attention_pool: empty bag");
    if (x.cols() != params.dim())
        throw DimensionError("attention_pool: instance dim " +
                             std::to_string(x.cols()) + " vs pool dim " +
                             std::to_string(params.dim()));
    const std::size_t n = x.rows();

    Matrix t = matmul_nt(x, params.v_a);  // N x D_a
    for (std::size_t i = 0; i < t.size(); ++i)
        t.data()[i] = std::tanh(t.data()[i]);

    // Scores s_i = w_a . t_i, then softmax over instances with max shift.
    Matrix attn(n, 1);
    double max_s = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < t.cols(); ++j)
            s += params.w_a.at(0, j) * t.at(i, j);
        attn.at(i, 0) = s;
        max_s = std::max(max_s, s);
    }
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        attn.at(i, 0) = std::exp(attn.at(i, 0) - max_s);
        denom += attn.at(i, 0);
    }
    for (std::size_t i = 0; i < n; ++i) attn.at(i, 0) /= denom;

    Matrix z = matmul_tn(attn, x);  // 1 x D weighted sum of instances

    if (tape) {
        tape->x = x;
        tape->tanh_vals = std::move(t);
        tape->attention = attn;
        tape->z = z;
    }
    return {std::move(z), std::move(attn)};
}

Matrix classify_logits(const Matrix& z, const PoolParams& params) {
    if (z.rows() != 1 || z.cols() != params.dim())
        throw DimensionError("classify: embedding is " + shape_str(z) +
                             ", expected 1x" + std::to_string(params.dim()));
    Matrix logits = matmul_nt(z, params.clf_w);  // 1 x C
    add_inplace(logits, params.clf_b);
    return logits;
}

Matrix classify(const Matrix& z, const PoolParams& params) {
    return row_softmax(classify_logits(z, params));
}

double cross_entropy_from_logits(const Matrix& logits, int label) {
    if (logits.rows() != 1 || logits.cols() == 0)
        throw DimensionError("cross_entropy: logits must be a single row");
    if (label < 0 || static_cast<std::size_t>(label) >= logits.cols())
        throw ConfigError("cross_entropy: label " + std::to_string(label) +
                          " outside [0, " + std::to_string(logits.cols()) +
                          ")");
    double max_l = logits.at(0, 0);
    for (std::size_t j = 1; j < logits.cols(); ++j)
        max_l = std::max(max_l, logits.at(0, j));
    double sum_exp = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j)
        sum_exp += std::exp(logits.at(0, j) - max_l);
    // -log softmax[label] = logsumexp(logits) - logits[label]
    return (std::log(sum_exp) + max_l) -
           logits.at(0, static_cast<std::size_t>(label));
}

double total_loss(double ce, double div, double lambda) {
    if (lambda < 0.0)
        throw ConfigError("total_loss: lambda must be non-negative");
    return ce + lambda * div;
}

BagPrediction abmil_forward(const Matrix& x, const PoolParams& params,
                            PoolTape* tape) {
    auto [z, attn] = attention_pool(x, params, tape);
    BagPrediction pred;
    pred.probs = classify(z, params);
    pred.attention = std::move(attn);
    pred.z = std::move(z);
    return pred;
}

}  // namespace hookmil
