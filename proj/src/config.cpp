#include "hookmil/config.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "hookmil/errors.hpp"
#include "wire.hpp"

namespace hookmil {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

long long parse_ll(const std::string& key, const std::string& value) {
    long long out = 0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end)
        throw ConfigError("config key '" + key + "': bad integer '" + value +
                          "'");
    return out;
}

std::size_t parse_positive(const std::string& key, const std::string& value) {
    const long long v = parse_ll(key, value);
    if (v < 1)
        throw ConfigError("config key '" + key + "': must be at least 1");
    return static_cast<std::size_t>(v);
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': bad number '" + value +
                          "'");
    }
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value) {
    if (key == "hooks") hooks = parse_positive(key, value);
    else if (key == "heads") heads = parse_positive(key, value);
    else if (key == "rounds") rounds = parse_positive(key, value);
    else if (key == "lambda") lambda = parse_real(key, value);
    else if (key == "attn_dim") attn_dim = parse_positive(key, value);
    else if (key == "lr") lr = parse_real(key, value);
    else if (key == "weight_decay") weight_decay = parse_real(key, value);
    else if (key == "epochs") epochs = static_cast<int>(parse_ll(key, value));
    else if (key == "seed")
        seed = static_cast<std::uint64_t>(parse_ll(key, value));
    else if (key == "hook_init") hook_init = HookInitStrategy::parse(value);
    else if (key == "model") model = parse_model_kind(value);
    else if (key == "classes")
        classes = static_cast<int>(parse_ll(key, value));
    else if (key == "task") task = parse_synth_task(value);
    else if (key == "dim") dim = parse_positive(key, value);
    else if (key == "n_min") n_min = parse_positive(key, value);
    else if (key == "n_max") n_max = parse_positive(key, value);
    else if (key == "n_clusters") n_clusters = parse_positive(key, value);
    else if (key == "separation") separation = parse_real(key, value);
    else if (key == "bags_train")
        bags_train = static_cast<int>(parse_ll(key, value));
    else if (key == "bags_val")
        bags_val = static_cast<int>(parse_ll(key, value));
    else if (key == "bags_test")
        bags_test = static_cast<int>(parse_ll(key, value));
    else
        throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
    if (epochs < 1) throw ConfigError("config: epochs must be at least 1");
    if (lambda < 0.0) throw ConfigError("config: lambda must be non-negative");
    if (!(lr > 0.0)) throw ConfigError("config: lr must be positive");
    if (weight_decay < 0.0)
        throw ConfigError("config: weight_decay must be non-negative");
    if (classes < 2) throw ConfigError("config: classes must be at least 2");
    if (heads == 0 || dim % heads != 0)
        throw ConfigError("config: dim " + std::to_string(dim) +
                          " must be divisible by heads " +
                          std::to_string(heads));
    synth_config().validate();
}

SynthTaskConfig RunConfig::synth_config() const {
    SynthTaskConfig s;
    s.task = task;
    s.dim = dim;
    s.n_min = n_min;
    s.n_max = n_max;
    s.n_clusters =
        n_clusters != 0 ? n_clusters
                        : (task == SynthTask::Witness ? std::size_t{1}
                                                      : std::size_t{2});
    s.separation = separation;
    s.bags.train = bags_train;
    s.bags.val = bags_val;
    s.bags.test = bags_test;
    s.seed = seed;
    return s;
}

std::string RunConfig::to_text() const {
    std::ostringstream out;
    out << "hooks=" << hooks << '\n'
        << "heads=" << heads << '\n'
        << "rounds=" << rounds << '\n'
        << "lambda=" << format_double(lambda) << '\n'
        << "attn_dim=" << attn_dim << '\n'
        << "lr=" << format_double(lr) << '\n'
        << "weight_decay=" << format_double(weight_decay) << '\n'
        << "epochs=" << epochs << '\n'
        << "seed=" << seed << '\n'
        << "hook_init=" << hook_init.to_string() << '\n'
        << "model=" << to_string(model) << '\n'
        << "classes=" << classes << '\n'
        << "task=" << to_string(task) << '\n'
        << "dim=" << dim << '\n'
        << "n_min=" << n_min << '\n'
        << "n_max=" << n_max << '\n'
        << "n_clusters=" << synth_config().n_clusters << '\n'
        << "separation=" << format_double(separation) << '\n'
        << "bags_train=" << bags_train << '\n'
        << "bags_val=" << bags_val << '\n'
        << "bags_test=" << bags_test << '\n';
    return out.str();
}

std::vector<std::pair<std::string, std::string>> parse_config_text(
    const std::string& text, const std::string& origin) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + " line " + std::to_string(line_no) +
                             ": expected key=value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ParseError(origin + " line " + std::to_string(line_no) +
                             ": empty key");
        if (!seen.insert(key).second)
            throw ParseError(origin + " line " + std::to_string(line_no) +
                             ": key '" + key + "' given twice");
        pairs.emplace_back(key, value);
    }
    return pairs;
}

RunConfig load_run_config(
    const std::string& config_path,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
    RunConfig cfg;
    if (!config_path.empty()) {
        const std::string text = wire::read_file_bytes(config_path);
        for (const auto& [key, value] :
             parse_config_text(text, "config file " + config_path))
            cfg.apply(key, value);
    }
    for (const auto& [key, value] : overrides) cfg.apply(key, value);
    cfg.validate();
    return cfg;
}

RunConfig config_from_text(const std::string& text,
                           const std::string& origin) {
    RunConfig cfg;
    for (const auto& [key, value] : parse_config_text(text, origin))
        cfg.apply(key, value);
    cfg.validate();
    return cfg;
}

}  // namespace hookmil
