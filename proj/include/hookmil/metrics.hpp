#pragma once

#include <string>
#include <vector>

#include "hookmil/hook_block.hpp"
#include "hookmil/matrix.hpp"

namespace hookmil {

// Fraction of exact argmax matches.
double accuracy(const std::vector<int>& labels, const std::vector<int>& preds);

// Unweighted mean of per-class F1; a class with TP+FP+FN == 0 counts as 0.
double macro_f1(const std::vector<int>& labels, const std::vector<int>& preds,
                int num_classes);

// Unweighted mean of one-vs-rest Mann-Whitney AUC per class, ties credited
// 0.5. probs is bags x classes. Classes absent from labels (or covering the
// whole split) have no defined AUC; they are skipped and reported in
// `warnings` when given.
double macro_auc(const std::vector<int>& labels, const Matrix& probs,
                 std::vector<std::string>* warnings = nullptr);

// Mean absolute off-diagonal entry of the same similarity matrix the
// diversity loss penalizes. 0 for a single hook.
double mean_offdiag_similarity(const Matrix& logits,
                               double eps = kDiversityEps);

// One validation-split snapshot per epoch.
struct EpochMetrics {
    int epoch = 0;
    double total_loss = 0.0;  // mean over bags: ce + lambda * div
    double ce = 0.0;
    double div = 0.0;
    double acc = 0.0;
    double macro_f1 = 0.0;
    double macro_auc = 0.0;
    double hook_sim = 0.0;  // mean over bags of mean_offdiag_similarity
};

std::string metrics_csv_header();

// Values rendered with 9 significant digits.
std::string metrics_csv_row(const EpochMetrics& m);

void write_metrics_csv(const std::string& path,
                       const std::vector<EpochMetrics>& history);

}  // namespace hookmil
