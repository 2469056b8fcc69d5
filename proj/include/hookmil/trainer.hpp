#pragma once

#include <string>
#include <vector>

#include "hookmil/adam.hpp"
#include "hookmil/bag_io.hpp"
#include "hookmil/config.hpp"
#include "hookmil/metrics.hpp"
#include "hookmil/model.hpp"

namespace hookmil {

// Training knobs live in RunConfig (one flat namespace shared with the CLI
// and checkpoints); this module consumes the training subset.

struct TrainResult {
    ModelParams params;       // state after the last epoch
    ModelParams best_params;  // highest validation macro AUC, earliest epoch
    int best_epoch = 0;       // 1-based
    std::vector<EpochMetrics> history;  // one row per epoch, validation split
    std::vector<std::string> warnings;
};

// Per-bag SGD (batch size 1): forward, total loss, backward, Adam step.
// Bag order reshuffles each epoch from a stream derived of (seed, epoch), so
// runs differing only in lambda see identical init and identical order.
// A non-finite loss aborts, naming the bag and epoch.
TrainResult train(const RunConfig& cfg,
                  const std::vector<BagFeatures>& train_split,
                  const std::vector<BagFeatures>& val_split);

// Metrics over one split at fixed parameters.
EpochMetrics evaluate(const ModelParams& params,
                      const std::vector<BagFeatures>& split, double lambda,
                      int epoch = 0,
                      std::vector<std::string>* warnings = nullptr);

struct PredictionRow {
    std::string bag_id;
    int label = 0;
    int predicted = 0;
    std::vector<double> probs;
};

std::vector<PredictionRow> predict_split(
    const ModelParams& params, const std::vector<BagFeatures>& split);

// One sweep cell = one full training run; failures are recorded, not fatal,
// and the sweep continues.
struct SweepCell {
    double lambda = 0.0;
    std::size_t hooks = 0;
    bool ok = false;
    std::string error;
    EpochMetrics final_metrics;  // last epoch on the validation split
    int best_epoch = 0;
};

// Trains one model per lambda. Every cell starts from the same seed, so
// initialization and bag order are matched across the grid.
std::vector<SweepCell> lambda_sweep(const RunConfig& cfg,
                                    const std::vector<BagFeatures>& train_split,
                                    const std::vector<BagFeatures>& val_split,
                                    const std::vector<double>& lambdas);

// Same protocol over the hook-count grid.
std::vector<SweepCell> hooks_sweep(const RunConfig& cfg,
                                   const std::vector<BagFeatures>& train_split,
                                   const std::vector<BagFeatures>& val_split,
                                   const std::vector<std::size_t>& hook_grid);

}  // namespace hookmil
