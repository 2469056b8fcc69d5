#pragma once

#include <string>

#include "hookmil/model.hpp"

namespace hookmil {

// Gradient of the total loss for every learnable matrix, stored in the same
// slots the parameters occupy so the two can be walked in lockstep.
struct GradSet {
    ModelParams g;

    static GradSet zeros_like(const ModelParams& params);

    // Unknown names fail loudly.
    Matrix& by_name(const std::string& name);
    const Matrix& by_name(const std::string& name) const;
};

// Reverse pass through classifier, pooling, and every hook round, including
// the diversity branch into the stage-1 logits. loss_scale is the upstream
// gradient of the total loss (1 for plain minimization).
//
// Throws SequencingError when the tape was recorded against a different
// parameter version than the one supplied.
GradSet backward(const ModelTape& tape, const ModelParams& params,
                 double loss_scale = 1.0);

// Central finite difference of the total loss w.r.t. one named parameter;
// the independent oracle the analytic rules are validated against.
Matrix finite_diff_grad(const std::string& param_name,
                        const ModelParams& model, const Matrix& features,
                        int label, double lambda, double h = 1e-5);

// --- layer-level rules (exposed for targeted tests) -------------------------

// d_scores for y = row_softmax(scores), given y and dL/dy.
Matrix softmax_rows_backward(const Matrix& probs, const Matrix& d_probs);

// d_input for layer_norm_rows; accumulates into d_gain / d_bias.
Matrix layer_norm_backward(const Matrix& d_out, const LayerNormTape& tape,
                           const Matrix& gain, Matrix& d_gain, Matrix& d_bias);

// dL/dlogits for the (unweighted) diversity loss.
Matrix diversity_loss_backward(const Matrix& logits, double eps);

}  // namespace hookmil
