#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "hookmil/errors.hpp"
#include "hookmil/metrics.hpp"
#include "hookmil/model.hpp"
#include "hookmil/synth.hpp"
#include "hookmil/trainer.hpp"

using namespace hookmil;

namespace {

// small co-occurrence problem that trains in well under a second
Dataset tiny_dataset(std::uint64_t seed = 3) {
    SynthTaskConfig scfg;
    scfg.dim = 8;
    scfg.n_min = 8;
    scfg.n_max = 16;
    scfg.bags = {16, 8, 8};
    scfg.seed = seed;
    return generate_dataset(scfg);
}

RunConfig tiny_config() {
    RunConfig cfg;
    cfg.dim = 8;
    cfg.hooks = 2;
    cfg.heads = 2;
    cfg.attn_dim = 8;
    cfg.epochs = 3;
    cfg.lr = 1e-3;
    cfg.seed = 7;
    return cfg;
}

bool same_history(const std::vector<EpochMetrics>& a,
                  const std::vector<EpochMetrics>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (metrics_csv_row(a[i]) != metrics_csv_row(b[i])) return false;
    return true;
}

}  // namespace

// ==== training loop ==========================================================

TEST_CASE("training is deterministic and decomposes its loss") {
    Dataset ds = tiny_dataset();
    RunConfig cfg = tiny_config();

    TrainResult a = train(cfg, ds.train, ds.val);
    TrainResult b = train(cfg, ds.train, ds.val);

    REQUIRE(a.history.size() == 3);
    CHECK(same_history(a.history, b.history));
    CHECK(a.best_epoch == b.best_epoch);

    for (const EpochMetrics& m : a.history) {
        CHECK(std::abs(m.total_loss - (m.ce + cfg.lambda * m.div)) < 1e-10);
        CHECK(m.epoch >= 1);
        CHECK(m.macro_auc >= 0.0);
        CHECK(m.macro_auc <= 1.0);
    }

    // best epoch is the earliest validation-AUC argmax
    double best = -1.0;
    int expected = 0;
    for (const EpochMetrics& m : a.history)
        if (m.macro_auc > best) {
            best = m.macro_auc;
            expected = m.epoch;
        }
    CHECK(a.best_epoch == expected);

    // the snapshot actually reproduces that epoch's validation metrics
    EpochMetrics replay = evaluate(a.best_params, ds.val, cfg.lambda,
                                   a.best_epoch);
    CHECK(metrics_csv_row(replay) ==
          metrics_csv_row(a.history[static_cast<std::size_t>(a.best_epoch) -
                                    1]));
}

TEST_CASE("disabling the diversity weight zeroes div but keeps hook_sim") {
    Dataset ds = tiny_dataset();
    RunConfig cfg = tiny_config();
    cfg.lambda = 0.0;
    TrainResult r = train(cfg, ds.train, ds.val);
    for (const EpochMetrics& m : r.history) {
        CHECK(m.div == 0.0);
        CHECK(m.total_loss == m.ce);
        CHECK(m.hook_sim > 0.0);  // similarity is still measured
    }
}

TEST_CASE("the abmil baseline reports no hook quantities") {
    Dataset ds = tiny_dataset();
    RunConfig cfg = tiny_config();
    cfg.model = ModelKind::Abmil;
    TrainResult r = train(cfg, ds.train, ds.val);
    for (const EpochMetrics& m : r.history) {
        CHECK(m.div == 0.0);
        CHECK(m.hook_sim == 0.0);
    }
}

// ==== guard rails ============================================================

TEST_CASE("unusable training inputs fail before the first epoch") {
    Dataset ds = tiny_dataset();
    RunConfig cfg = tiny_config();

    CHECK_THROWS_AS(train(cfg, {}, ds.val), TrainingError);
    CHECK_THROWS_AS(train(cfg, ds.train, {}), TrainingError);

    RunConfig bad = cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(train(bad, ds.train, ds.val), ConfigError);

    bad = cfg;
    bad.heads = 3;  // 8 % 3 != 0
    CHECK_THROWS_AS(train(bad, ds.train, ds.val), ConfigError);

    // a bag of the wrong width is named
    auto mixed = ds.train;
    mixed[2].features = Matrix(4, 5, 1.0);
    CHECK_THROWS_WITH_AS(train(cfg, mixed, ds.val),
                         doctest::Contains(mixed[2].bag_id.c_str()),
                         DimensionError);

    // labels outside [0, classes)
    auto relabeled = ds.train;
    relabeled[1].label = 2;
    CHECK_THROWS_AS(train(cfg, relabeled, ds.val), ConfigError);
}

TEST_CASE("a single-class validation split cannot be scored") {
    Dataset ds = tiny_dataset();
    std::vector<BagFeatures> val_pos;
    for (const BagFeatures& bag : ds.val)
        if (bag.label == 1) val_pos.push_back(bag);
    RunConfig cfg = tiny_config();
    CHECK_THROWS_AS(train(cfg, ds.train, val_pos), TrainingError);
}

TEST_CASE("a non-finite loss aborts naming the bag and epoch") {
    Dataset ds = tiny_dataset();
    auto poisoned = ds.train;
    poisoned[3].features.at(0, 0) = std::numeric_limits<double>::infinity();
    RunConfig cfg = tiny_config();
    try {
        train(cfg, poisoned, ds.val);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        std::string msg = e.what();
        CHECK(msg.find(poisoned[3].bag_id) != std::string::npos);
        CHECK(msg.find("epoch 1") != std::string::npos);
    }
}

// ==== evaluation and prediction ==============================================

TEST_CASE("evaluate averages per-bag losses") {
    Dataset ds = tiny_dataset();
    RunConfig cfg = tiny_config();
    cfg.epochs = 1;
    TrainResult r = train(cfg, ds.train, ds.val);

    EpochMetrics m = evaluate(r.params, ds.val, cfg.lambda);
    double total = 0.0;
    for (const BagFeatures& bag : ds.val)
        total += model_forward(r.params, bag.features, bag.label,
                               cfg.lambda)
                     .total;
    CHECK(m.total_loss ==
          doctest::Approx(total / static_cast<double>(ds.val.size()))
              .epsilon(1e-12));
    CHECK_THROWS_AS(evaluate(r.params, {}, cfg.lambda), TrainingError);
}

TEST_CASE("predictions are well-formed probabilities, one row per bag") {
    Dataset ds = tiny_dataset();
    RunConfig cfg = tiny_config();
    cfg.epochs = 1;
    TrainResult r = train(cfg, ds.train, ds.val);

    std::vector<PredictionRow> rows = predict_split(r.best_params, ds.test);
    REQUIRE(rows.size() == ds.test.size());
    for (std::size_t b = 0; b < rows.size(); ++b) {
        CHECK(rows[b].bag_id == ds.test[b].bag_id);
        CHECK(rows[b].label == ds.test[b].label);
        REQUIRE(rows[b].probs.size() == 2);
        double sum = rows[b].probs[0] + rows[b].probs[1];
        CHECK(std::abs(sum - 1.0) < 1e-9);
        int argmax = rows[b].probs[1] > rows[b].probs[0] ? 1 : 0;
        CHECK(rows[b].predicted == argmax);
    }
}

TEST_CASE("bag predictions ignore instance order") {
    Dataset ds = tiny_dataset();
    RunConfig cfg = tiny_config();
    cfg.epochs = 2;
    TrainResult r = train(cfg, ds.train, ds.val);

    for (const BagFeatures& bag : ds.test) {
        const std::size_t n = bag.features.rows();
        Matrix reversed(n, bag.features.cols());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < bag.features.cols(); ++j)
                reversed.at(i, j) = bag.features.at(n - 1 - i, j);

        ForwardResult a = model_forward(r.best_params, bag.features,
                                        bag.label, cfg.lambda);
        ForwardResult b = model_forward(r.best_params, reversed, bag.label,
                                        cfg.lambda);
        for (std::size_t c = 0; c < 2; ++c)
            CHECK(std::abs(a.pred.probs.at(0, c) - b.pred.probs.at(0, c)) <
                  1e-12);
        CHECK(std::abs(a.total - b.total) < 1e-12);
    }
}

// ==== sweeps =================================================================

TEST_CASE("lambda sweep trains matched cells and echoes the grid") {
    Dataset ds = tiny_dataset();
    RunConfig cfg = tiny_config();
    cfg.epochs = 2;

    std::vector<SweepCell> cells =
        lambda_sweep(cfg, ds.train, ds.val, {0.0, 0.2});
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].lambda == 0.0);
    CHECK(cells[1].lambda == 0.2);
    for (const SweepCell& c : cells) {
        CHECK(c.ok);
        CHECK(c.error.empty());
        CHECK(c.best_epoch >= 1);
    }
    // matched seeds: the lambda=0 cell reports zero diversity loss
    CHECK(cells[0].final_metrics.div == 0.0);

    CHECK_THROWS_AS(lambda_sweep(cfg, ds.train, ds.val, {0.2}), ConfigError);
}

TEST_CASE("a failing sweep cell is recorded without stopping the sweep") {
    Dataset ds = tiny_dataset();
    RunConfig cfg = tiny_config();
    cfg.epochs = 1;

    std::vector<SweepCell> cells =
        lambda_sweep(cfg, ds.train, ds.val, {-1.0, 0.2});
    REQUIRE(cells.size() == 2);
    CHECK_FALSE(cells[0].ok);
    CHECK_FALSE(cells[0].error.empty());
    CHECK(cells[1].ok);
}

TEST_CASE("hooks sweep covers its grid and records bad cells") {
    Dataset ds = tiny_dataset();
    RunConfig cfg = tiny_config();
    cfg.epochs = 1;

    std::vector<SweepCell> ok = hooks_sweep(cfg, ds.train, ds.val, {2, 4});
    REQUIRE(ok.size() == 2);
    CHECK(ok[0].hooks == 2);
    CHECK(ok[1].hooks == 4);
    CHECK(ok[0].ok);
    CHECK(ok[1].ok);

    std::vector<SweepCell> mixed = hooks_sweep(cfg, ds.train, ds.val, {0, 2});
    REQUIRE(mixed.size() == 2);
    CHECK_FALSE(mixed[0].ok);         // zero hooks cannot be built
    CHECK_FALSE(mixed[0].error.empty());
    CHECK(mixed[1].ok);

    CHECK_THROWS_AS(hooks_sweep(cfg, ds.train, ds.val, {}), ConfigError);
}
