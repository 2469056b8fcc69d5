#include "hookmil/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "hookmil/errors.hpp"

namespace hookmil {

SynthTask parse_synth_task(const std::string& text) {
    if (text == "witness") return SynthTask::Witness;
    if (text == "cooccurrence") return SynthTask::Cooccurrence;
    throw ConfigError("unknown task '" + text +
                      "' (expected witness or cooccurrence)");
}

std::string to_string(SynthTask task) {
    return task == SynthTask::Witness ? "witness" : "cooccurrence";
}

void SynthTaskConfig::validate() const {
    if (dim == 0) throw ConfigError("synth: dim must be positive");
    if (n_min < 2) throw ConfigError("synth: n_min must be at least 2");
    if (n_max < n_min) throw ConfigError("synth: n_max must be >= n_min");
    if (separation < 0.0)
        throw ConfigError("synth: separation must be non-negative");
    if (bags.train < 0 || bags.val < 0 || bags.test < 0)
        throw ConfigError("synth: split counts must be non-negative");
    const std::size_t expected =
        task == SynthTask::Witness ? 1 : 2;
    if (n_clusters != expected)
        throw ConfigError("synth: " + to_string(task) + " task uses " +
                          std::to_string(expected) + " signal cluster(s), got " +
                          std::to_string(n_clusters));
}

namespace {

Matrix unit_direction(std::size_t dim, Rng& rng) {
    Matrix u(1, dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            u.at(0, j) = rng.normal();
            norm += u.at(0, j) * u.at(0, j);
        }
        norm = std::sqrt(norm);
    } while (norm == 0.0);
    for (std::size_t j = 0; j < dim; ++j) u.at(0, j) /= norm;
    return u;
}

void fill_background_row(Matrix& m, std::size_t row, Rng& rng) {
    for (std::size_t j = 0; j < m.cols(); ++j) m.at(row, j) = rng.normal();
}

void fill_signal_row(Matrix& m, std::size_t row, const Matrix& center,
                     Rng& rng) {
    for (std::size_t j = 0; j < m.cols(); ++j)
        m.at(row, j) = center.at(0, j) + rng.normal();
}

// Storage is float32; quantizing here makes in-memory and on-disk values
// identical, so generation is bit-exactly reproducible through file I/O.
void quantize_to_f32(Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
}

std::string padded_id(const char* split, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%04d", split, index);
    return buf;
}

std::vector<BagFeatures> gen_split(const SynthTaskConfig& cfg,
                                   const std::vector<Matrix>& centers,
                                   const char* split_name, int count,
                                   Rng& rng) {
    std::vector<BagFeatures> bags;
    bags.reserve(static_cast<std::size_t>(count));
    int negatives_seen = 0;
    for (int b = 0; b < count; ++b) {
        const std::size_t n =
            cfg.n_min + static_cast<std::size_t>(
                            rng.below(cfg.n_max - cfg.n_min + 1));
        const std::size_t signal_cap = std::max<std::size_t>(1, n / 20);
        const int label = b % 2;

        Matrix feats(n, cfg.dim);
        std::size_t next_row = 0;
        auto place_cluster = [&](const Matrix& center) {
            const std::size_t m =
                1 + static_cast<std::size_t>(rng.below(signal_cap));
            for (std::size_t i = 0; i < m && next_row < n; ++i, ++next_row)
                fill_signal_row(feats, next_row, center, rng);
        };

        if (cfg.task == SynthTask::Witness) {
            if (label == 1) place_cluster(centers[0]);
        } else {
            if (label == 1) {
                place_cluster(centers[0]);
                place_cluster(centers[1]);
            } else {
                // Negatives cycle A-only, B-only, neither in equal shares.
                const int variant = negatives_seen % 3;
                if (variant == 0) place_cluster(centers[0]);
                else if (variant == 1) place_cluster(centers[1]);
                ++negatives_seen;
            }
        }
        for (; next_row < n; ++next_row)
            fill_background_row(feats, next_row, rng);
        quantize_to_f32(feats);

        BagFeatures bag;
        bag.features = std::move(feats);
        bag.label = label;
        bag.bag_id = padded_id(split_name, b);
        bags.push_back(std::move(bag));
    }
    return bags;
}

}  // namespace

Dataset generate_dataset(const SynthTaskConfig& cfg) {
    cfg.validate();

    Rng dir_rng = Rng::derive(cfg.seed, 0);
    std::vector<Matrix> centers;
    for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
        Matrix u = unit_direction(cfg.dim, dir_rng);
        // Separation counts multiples of the background RMS norm sqrt(D),
        // not the per-coordinate std. At per-coordinate scale a ~2% per
        // instance false-claim rate times up to 256 instances would plant
        // phantom clusters in every bag and cap even the known-centroid
        // oracle near chance.
        scale_inplace(u, cfg.separation * std::sqrt(static_cast<double>(
                             cfg.dim)));
        centers.push_back(std::move(u));
    }

    Dataset ds;
    Rng train_rng = Rng::derive(cfg.seed, 1);
    Rng val_rng = Rng::derive(cfg.seed, 2);
    Rng test_rng = Rng::derive(cfg.seed, 3);
    ds.train = gen_split(cfg, centers, "train", cfg.bags.train, train_rng);
    ds.val = gen_split(cfg, centers, "val", cfg.bags.val, val_rng);
    ds.test = gen_split(cfg, centers, "test", cfg.bags.test, test_rng);
    return ds;
}

std::vector<std::string> write_dataset(const Dataset& ds,
                                       const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path root(out_dir);

    auto write_split = [&root](const std::vector<BagFeatures>& bags,
                               const char* name) {
        std::vector<ManifestEntry> entries;
        entries.reserve(bags.size());
        for (const BagFeatures& bag : bags) {
            const std::string rel = "bags/" + bag.bag_id + ".hkb";
            write_bag((root / rel).string(), bag.features);
            entries.push_back({rel, bag.label, bag.bag_id});
        }
        const std::string manifest =
            (root / (std::string(name) + ".tsv")).string();
        write_manifest(manifest, entries);
        return manifest;
    };

    return {write_split(ds.train, "train"), write_split(ds.val, "val"),
            write_split(ds.test, "test")};
}

}  // namespace hookmil
