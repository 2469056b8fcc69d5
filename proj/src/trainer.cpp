#include "hookmil/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hookmil/grad.hpp"

namespace hookmil {

namespace {

// Derived-stream layout for one training run: stream 0 initializes the
// model, stream e (1-based epoch) shuffles that epoch's bag order. Lambda
// never enters the derivation, so sweep cells share init and order.
constexpr std::uint64_t kInitStream = 0;

std::size_t check_split_dim(const std::vector<BagFeatures>& split,
                            std::size_t expected, const char* name) {
    for (const BagFeatures& bag : split) {
        if (expected == 0) expected = bag.features.cols();
        if (bag.features.cols() != expected)
            throw DimensionError(std::string("train: bag ") + bag.bag_id +
                                 " in " + name + " split has dim " +
                                 std::to_string(bag.features.cols()) +
                                 ", expected " + std::to_string(expected));
    }
    return expected;
}

void fisher_yates(std::vector<std::size_t>& order, Rng& rng) {
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(order[i - 1], order[j]);
    }
}

}  // namespace

EpochMetrics evaluate(const ModelParams& params,
                      const std::vector<BagFeatures>& split, double lambda,
                      int epoch, std::vector<std::string>* warnings) {
    if (split.empty()) throw TrainingError("evaluate: empty split");
    const std::size_t classes = params.pool.num_classes();

    EpochMetrics m;
    m.epoch = epoch;
    std::vector<int> labels, preds;
    Matrix probs(split.size(), classes);
    for (std::size_t b = 0; b < split.size(); ++b) {
        const BagFeatures& bag = split[b];
        const ForwardResult r =
            model_forward(params, bag.features, bag.label, lambda);
        if (!std::isfinite(r.total))
            throw TrainingError("evaluate: non-finite loss on bag " +
                                bag.bag_id);
        m.total_loss += r.total;
        m.ce += r.ce;
        m.div += r.div;
        m.hook_sim += r.hook_sim;
        labels.push_back(bag.label);
        int argmax = 0;
        for (std::size_t c = 0; c < classes; ++c) {
            probs.at(b, c) = r.pred.probs.at(0, c);
            if (probs.at(b, c) > probs.at(b, static_cast<std::size_t>(argmax)))
                argmax = static_cast<int>(c);
        }
        preds.push_back(argmax);
    }
    const double n = static_cast<double>(split.size());
    m.total_loss /= n;
    m.ce /= n;
    m.div /= n;
    m.hook_sim /= n;
    m.acc = accuracy(labels, preds);
    m.macro_f1 = macro_f1(labels, preds, static_cast<int>(classes));
    m.macro_auc = macro_auc(labels, probs, warnings);
    return m;
}

TrainResult train(const RunConfig& cfg,
                  const std::vector<BagFeatures>& train_split,
                  const std::vector<BagFeatures>& val_split) {
    if (cfg.epochs < 1) throw ConfigError("train: epochs must be at least 1");
    if (cfg.lambda < 0.0)
        throw ConfigError("train: lambda must be non-negative");
    if (train_split.empty())
        throw TrainingError("train: no bags in training split");
    if (val_split.empty())
        throw TrainingError("train: no bags in validation split");

    std::size_t dim = check_split_dim(train_split, 0, "train");
    dim = check_split_dim(val_split, dim, "val");
    if (cfg.model == ModelKind::HookMil &&
        (cfg.heads == 0 || dim % cfg.heads != 0))
        throw ConfigError("train: data dim " + std::to_string(dim) +
                          " is not divisible by heads " +
                          std::to_string(cfg.heads));
    for (const BagFeatures& bag : train_split)
        if (bag.label < 0 || bag.label >= cfg.classes)
            throw ConfigError("train: bag " + bag.bag_id + " has label " +
                              std::to_string(bag.label) + " outside [0, " +
                              std::to_string(cfg.classes) + ")");

    ModelShape shape;
    shape.dim = dim;
    shape.hooks = cfg.hooks;
    shape.heads = cfg.heads;
    shape.attn_dim = cfg.attn_dim;
    shape.classes = static_cast<std::size_t>(cfg.classes);
    shape.rounds = cfg.rounds;
    shape.kind = cfg.model;

    Rng init_rng = Rng::derive(cfg.seed, kInitStream);
    ModelParams params = init_model(shape, cfg.hook_init, init_rng);
    AdamState adam = AdamState::init(params);
    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.lr;
    adam_cfg.weight_decay = cfg.weight_decay;

    TrainResult result;
    double best_auc = -1.0;
    std::vector<std::size_t> order(train_split.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle_rng =
            Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch));
        std::iota(order.begin(), order.end(), std::size_t{0});
        fisher_yates(order, shuffle_rng);

        for (const std::size_t idx : order) {
            const BagFeatures& bag = train_split[idx];
            ModelTape tape;
            const ForwardResult r = model_forward(params, bag.features,
                                                  bag.label, cfg.lambda, &tape);
            if (!std::isfinite(r.total))
                throw TrainingError("train: non-finite loss at epoch " +
                                    std::to_string(epoch) + " on bag " +
                                    bag.bag_id);
            const GradSet grads = backward(tape, params);
            adam_step(params, grads, adam, adam_cfg);
        }

        EpochMetrics m =
            evaluate(params, val_split, cfg.lambda, epoch, &result.warnings);
        result.history.push_back(m);
        if (m.macro_auc > best_auc) {  // strict: ties keep the earlier epoch
            best_auc = m.macro_auc;
            result.best_epoch = epoch;
            result.best_params = params;
        }
    }
    result.params = std::move(params);
    return result;
}

std::vector<PredictionRow> predict_split(
    const ModelParams& params, const std::vector<BagFeatures>& split) {
    std::vector<PredictionRow> rows;
    rows.reserve(split.size());
    for (const BagFeatures& bag : split) {
        const ModelInspection ins = model_inspect(params, bag.features);
        PredictionRow row;
        row.bag_id = bag.bag_id;
        row.label = bag.label;
        row.predicted = 0;
        for (std::size_t c = 0; c < ins.pred.probs.cols(); ++c) {
            row.probs.push_back(ins.pred.probs.at(0, c));
            if (ins.pred.probs.at(0, c) >
                ins.pred.probs.at(0, static_cast<std::size_t>(row.predicted)))
                row.predicted = static_cast<int>(c);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

template <typename Value, typename Apply>
std::vector<SweepCell> run_sweep(const RunConfig& cfg,
                                 const std::vector<BagFeatures>& train_split,
                                 const std::vector<BagFeatures>& val_split,
                                 const std::vector<Value>& grid,
                                 Apply&& apply_value) {
    std::vector<SweepCell> cells;
    for (const Value v : grid) {
        RunConfig cell_cfg = cfg;
        SweepCell cell;
        apply_value(cell_cfg, cell, v);
        try {
            const TrainResult r = train(cell_cfg, train_split, val_split);
            cell.ok = true;
            cell.final_metrics = r.history.back();
            cell.best_epoch = r.best_epoch;
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();  // recorded; the sweep continues
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

}  // namespace

std::vector<SweepCell> lambda_sweep(const RunConfig& cfg,
                                    const std::vector<BagFeatures>& train_split,
                                    const std::vector<BagFeatures>& val_split,
                                    const std::vector<double>& lambdas) {
    if (lambdas.size() < 2)
        throw ConfigError("lambda_sweep: need at least 2 lambda values");
    return run_sweep(cfg, train_split, val_split, lambdas,
                     [](RunConfig& c, SweepCell& cell, double v) {
                         c.lambda = v;
                         cell.lambda = v;
                         cell.hooks = c.hooks;
                     });
}

std::vector<SweepCell> hooks_sweep(const RunConfig& cfg,
                                   const std::vector<BagFeatures>& train_split,
                                   const std::vector<BagFeatures>& val_split,
                                   const std::vector<std::size_t>& hook_grid) {
    if (hook_grid.empty()) throw ConfigError("hooks_sweep: empty grid");
    return run_sweep(cfg, train_split, val_split, hook_grid,
                     [](RunConfig& c, SweepCell& cell, std::size_t v) {
                         c.hooks = v;
                         cell.hooks = v;
                         cell.lambda = c.lambda;
                     });
}

}  // namespace hookmil
