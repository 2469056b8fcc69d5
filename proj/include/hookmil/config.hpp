#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hookmil/hook_block.hpp"
#include "hookmil/model.hpp"
#include "hookmil/synth.hpp"

namespace hookmil {

// Every tunable of the artifact in one flat namespace. The same keys appear
// in config files (key=value lines), CLI flags, and the config text embedded
// in checkpoints. Precedence: CLI flag > config file > default.
struct RunConfig {
    // model / training
    std::size_t hooks = 8;
    std::size_t heads = 4;
    std::size_t rounds = 1;
    double lambda = 0.2;
    std::size_t attn_dim = 128;  // clipped to dim at model init
    double lr = 1e-4;
    double weight_decay = 1e-5;
    int epochs = 30;
    std::uint64_t seed = 0;
    HookInitStrategy hook_init = HookInitStrategy::trunc_normal();
    ModelKind model = ModelKind::HookMil;
    int classes = 2;

    // synthetic task
    SynthTask task = SynthTask::Cooccurrence;
    std::size_t dim = 32;
    std::size_t n_min = 64;
    std::size_t n_max = 256;
    std::size_t n_clusters = 0;  // 0 = derived from task (1 or 2)
    double separation = 4.0;
    int bags_train = 200;
    int bags_val = 50;
    int bags_test = 100;

    // Applies one key=value pair; unknown keys and malformed values fail
    // naming the key.
    void apply(const std::string& key, const std::string& value);

    void validate() const;

    // Canonical rendering: every key once, fixed order; parses back exactly.
    std::string to_text() const;

    SynthTaskConfig synth_config() const;
};

// Parses key=value lines ('#' comments, blank lines allowed). A key given
// twice is an error.
std::vector<std::pair<std::string, std::string>> parse_config_text(
    const std::string& text, const std::string& origin);

// defaults -> file (optional) -> overrides, validated at the end.
RunConfig load_run_config(
    const std::string& config_path,
    const std::vector<std::pair<std::string, std::string>>& overrides);

RunConfig config_from_text(const std::string& text,
                           const std::string& origin);

}  // namespace hookmil
