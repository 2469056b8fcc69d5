#include "hookmil/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hookmil/errors.hpp"

namespace hookmil {

double accuracy(const std::vector<int>& labels,
                const std::vector<int>& preds) {
    if (labels.size() != preds.size() || labels.empty())
        throw DimensionError("accuracy: need equal-length non-empty label "
                             "and prediction lists");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == preds[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double macro_f1(const std::vector<int>& labels, const std::vector<int>& preds,
                int num_classes) {
    if (labels.size() != preds.size() || labels.empty())
        throw DimensionError("macro_f1: need equal-length non-empty label "
                             "and prediction lists");
    if (num_classes < 2) throw ConfigError("macro_f1: need at least 2 classes");
    double sum = 0.0;
    for (int c = 0; c < num_classes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const bool is_c = labels[i] == c;
            const bool pred_c = preds[i] == c;
            if (is_c && pred_c) ++tp;
            else if (!is_c && pred_c) ++fp;
            else if (is_c && !pred_c) ++fn;
        }
        // No instances and no predictions for this class: F1 recorded as 0.
        const double denom = static_cast<double>(2 * tp + fp + fn);
        sum += denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
    }
    return sum / static_cast<double>(num_classes);
}

double macro_auc(const std::vector<int>& labels, const Matrix& probs,
                 std::vector<std::string>* warnings) {
    if (labels.size() != probs.rows() || labels.empty())
        throw DimensionError("macro_auc: labels and probability rows differ");
    const std::size_t classes = probs.cols();

    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        std::size_t n_pos = 0;
        for (int l : labels) if (static_cast<std::size_t>(l) == c) ++n_pos;
        const std::size_t n_neg = labels.size() - n_pos;
        if (n_pos == 0 || n_neg == 0) {
            if (warnings)
                warnings->push_back(
                    "macro_auc: class " + std::to_string(c) +
                    (n_pos == 0 ? " has no positives" : " has no negatives") +
                    "; skipped from the macro mean");
            continue;
        }
        // Mann-Whitney over all (positive, negative) pairs; ties score 0.5.
        double wins = 0.0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (static_cast<std::size_t>(labels[i]) != c) continue;
            for (std::size_t j = 0; j < labels.size(); ++j) {
                if (static_cast<std::size_t>(labels[j]) == c) continue;
                const double a = probs.at(i, c), b = probs.at(j, c);
                if (a > b) wins += 1.0;
                else if (a == b) wins += 0.5;
            }
        }
        sum += wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
        ++counted;
    }
    if (counted == 0)
        throw TrainingError("macro_auc: no class has both positives and "
                            "negatives in this split");
    return sum / static_cast<double>(counted);
}

double mean_offdiag_similarity(const Matrix& logits, double eps) {
    const std::size_t k = logits.rows();
    if (k <= 1) return 0.0;
    const Matrix g = frobenius_normalize(logits, eps);
    const Matrix sim = matmul_nt(g, g);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            if (i != j) sum += std::abs(sim.at(i, j));
    return sum / (static_cast<double>(k) * static_cast<double>(k - 1));
}

std::string metrics_csv_header() {
    return "epoch,total_loss,ce,div,acc,macro_f1,macro_auc,hook_sim";
}

std::string metrics_csv_row(const EpochMetrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", m.epoch,
                  m.total_loss, m.ce, m.div, m.acc, m.macro_f1, m.macro_auc,
                  m.hook_sim);
    return buf;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<EpochMetrics>& history) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec)
            throw IoError("write_metrics_csv: cannot create directory " +
                          p.parent_path().string());
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << metrics_csv_header() << '\n';
    for (const EpochMetrics& m : history) f << metrics_csv_row(m) << '\n';
    if (!f.good()) throw IoError("write failed on " + path);
}

}  // namespace hookmil
