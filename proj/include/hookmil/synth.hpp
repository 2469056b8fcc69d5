#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hookmil/bag_io.hpp"
#include "hookmil/rng.hpp"

namespace hookmil {

enum class SynthTask { Witness, Cooccurrence };

SynthTask parse_synth_task(const std::string& text);
std::string to_string(SynthTask task);

struct SplitCounts {
    int train = 200;
    int val = 50;
    int test = 100;
};

struct SynthTaskConfig {
    SynthTask task = SynthTask::Cooccurrence;
    std::size_t dim = 32;
    std::size_t n_min = 64;
    std::size_t n_max = 256;
    // Witness uses one signal cluster, cooccurrence uses two.
    std::size_t n_clusters = 2;
    // Cluster-mean distance from the background mean, in units of the
    // background RMS norm sqrt(D). 4 gives near-perfect per-instance
    // separability; 0 removes the signal entirely.
    double separation = 4.0;
    SplitCounts bags;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Dataset {
    std::vector<BagFeatures> train, val, test;
};

// Pure function of the config (fixed RNG); features arrive already quantized
// to float32 precision so file round-trips are exact.
//
// Witness: background instances ~ N(0, I); a positive bag swaps 1..5% of
// them for draws around separation * sqrt(D) * u along a fixed random unit
// direction u.
// Labels alternate, so each split is balanced up to rounding.
//
// Cooccurrence: two clusters A and B; a bag is positive iff it contains
// instances of both types. Negatives cycle through A-only, B-only, neither.
Dataset generate_dataset(const SynthTaskConfig& cfg);

// Writes bags/<split>_<index>.hkb plus train.tsv / val.tsv / test.tsv
// manifests under out_dir. Returns the three manifest paths.
std::vector<std::string> write_dataset(const Dataset& ds,
                                       const std::string& out_dir);

}  // namespace hookmil
