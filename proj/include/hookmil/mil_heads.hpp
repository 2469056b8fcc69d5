#pragma once

#include <cstddef>
#include <utility>

#include "hookmil/matrix.hpp"
#include "hookmil/rng.hpp"

namespace hookmil {

// Bag-level head: tanh attention pooling followed by a linear classifier.
struct PoolParams {
    Matrix v_a;    // D_a x D
    Matrix w_a;    // 1 x D_a
    Matrix clf_w;  // C x D
    Matrix clf_b;  // 1 x C

    std::size_t dim() const { return v_a.cols(); }
    std::size_t attn_dim() const { return v_a.rows(); }
    std::size_t num_classes() const { return clf_w.rows(); }
};

struct BagPrediction {
    Matrix probs;      // 1 x C, strictly positive, sums to 1
    Matrix attention;  // N x 1, sums to 1
    Matrix z;          // 1 x D bag embedding
};

// Intermediates the pooling/classifier backward needs.
struct PoolTape {
    Matrix x;          // N x D input the pool ran on
    Matrix tanh_vals;  // N x D_a
    Matrix attention;  // N x 1
    Matrix z;          // 1 x D
};

// v_a, w_a, clf_w uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] drawn in that
// order; bias starts at zero.
PoolParams init_pool_params(std::size_t dim, std::size_t attn_dim,
                            std::size_t num_classes, Rng& rng);

// a_i proportional to exp(w_a . tanh(v_a x_i)); z = sum_i a_i x_i.
// Returns (z, attention).
std::pair<Matrix, Matrix> attention_pool(const Matrix& x,
                                         const PoolParams& params,
                                         PoolTape* tape = nullptr);

Matrix classify_logits(const Matrix& z, const PoolParams& params);  // 1 x C

// softmax(W_c z + b_c).
Matrix classify(const Matrix& z, const PoolParams& params);

// -log p[label], evaluated from logits via log-sum-exp.
double cross_entropy_from_logits(const Matrix& logits, int label);

// ce + lambda * div.
double total_loss(double ce, double div, double lambda);

// Pool + classify on raw instances: the non-interactive baseline.
BagPrediction abmil_forward(const Matrix& x, const PoolParams& params,
                            PoolTape* tape = nullptr);

}  // namespace hookmil
