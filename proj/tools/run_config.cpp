#include "run_config.hpp"

#include <algorithm>
#include <sstream>

#include "vibench/errors.hpp"
#include "vibench/io_util.hpp"
#include "vibench/rng.hpp"

namespace vibench::cli {

namespace io = ioutil;

namespace {

/// key -> default value. Empty string = unset.
const std::map<std::string, std::string>& schema() {
    static const std::map<std::string, std::string> kSchema = {
        // shared
        {"data", ""},
        {"out", "."},
        {"seed", "0"},
        {"workers", "0"}, // 0 = VIBENCH_WORKERS env var, else 1
        {"record_wall_ms", "false"},
        // sweep lists
        {"models", "iforest,knn,cblof,copod,autoenc,deepsvdd"},
        {"selections", "impeller"},
        {"paths", "stat"},
        {"taus", "0.25,0.5,1,3"},
        {"overlaps", "0.9,0.75,0.5,0"},
        {"thresholds", "0.001,0.01,0.05,0.1,0.2"},
        {"folds", ""}, // fold-spec path, default = the dataset index entry
        // single-cell commands (window/featurize/train/score)
        {"tau", "1"},
        {"overlap", "0"},
        {"selection", "impeller"},
        {"path", "stat"},
        {"model", "iforest"},
        {"fold", "0"}, // 0 = train on every normal segment
        {"model_file", ""}, // trained bundle to score with
        {"norm_file", ""},  // default = the bundle's own reference
        // detector hyperparameters
        {"iforest.trees", "100"},
        {"iforest.subsample", "256"},
        {"knn.k", "5"},
        {"cblof.clusters", "8"},
        {"cblof.alpha", "0.9"},
        {"cblof.beta", "5"},
        {"cblof.max_iters", "300"},
        {"cblof.tol", "1e-4"},
        {"neural.epochs", "100"},
        {"neural.batch", "32"},
        {"neural.lr", "0.001"},
        {"neural.beta1", "0.9"},
        {"neural.beta2", "0.999"},
        {"neural.epsilon", "1e-8"},
        {"autoenc.bottleneck", "0"},
        {"svdd.embed", "0"},
        // compare / report inputs
        {"report", ""},
        {"group_a", ""},
        {"group_b", ""},
        {"metric", "auc"}, // auc | acc
    };
    return kSchema;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

RunConfig::RunConfig() : values_(schema()) {}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError("BadConfig: unknown config key '" + key + "'");
    it->second = value;
}

void RunConfig::load_file(const std::string& path) {
    std::istringstream in(io::read_file(path));
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("BadConfig: " + path + ":" + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw ConfigError("BadConfig: " + path + ":" + std::to_string(lineno) +
                              ": duplicate key '" + key + "'");
        seen.push_back(key);
        try {
            set(key, trim(t.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("BadConfig: " + path + ":" + std::to_string(lineno) + ": " +
                              e.what());
        }
    }
}

const std::string& RunConfig::raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError("BadConfig: unknown config key '" + key + "'");
    return it->second;
}

std::string RunConfig::get_string(const std::string& key) const { return raw(key); }

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& v = raw(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("BadConfig: key '" + key + "': expected a boolean, got '" + v + "'");
}

double RunConfig::get_double(const std::string& key) const {
    try {
        return io::parse_double(raw(key), key.c_str());
    } catch (const Error&) {
        throw ConfigError("BadConfig: key '" + key + "': expected a number, got '" + raw(key) +
                          "'");
    }
}

std::int64_t RunConfig::get_int(const std::string& key) const {
    try {
        return io::parse_int(raw(key), key.c_str());
    } catch (const Error&) {
        throw ConfigError("BadConfig: key '" + key + "': expected an integer, got '" + raw(key) +
                          "'");
    }
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    const std::int64_t v = get_int(key);
    if (v < 0) throw ConfigError("BadConfig: key '" + key + "' must be non-negative");
    return static_cast<std::uint64_t>(v);
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream in(raw(key));
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& item : get_list(key)) {
        try {
            out.push_back(io::parse_double(item, key.c_str()));
        } catch (const Error&) {
            throw ConfigError("BadConfig: key '" + key + "': expected numbers, got '" + item +
                              "'");
        }
    }
    return out;
}

std::string RunConfig::canonical() const {
    std::string out;
    for (const auto& [key, value] : values_) {
        if (key == "out") continue; // output location never changes results
        out += key;
        out += '=';
        out += value;
        out += '\n';
    }
    return out;
}

std::string RunConfig::hash() const {
    const std::uint64_t h = stable_hash(canonical());
    static const char* kHex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) out[15 - i] = kHex[(h >> (4 * i)) & 0xf];
    return out;
}

DetectorSettings detector_settings(const RunConfig& cfg) {
    auto positive = [&](const std::string& key) {
        const std::int64_t v = cfg.get_int(key);
        if (v <= 0) throw ConfigError("BadConfig: key '" + key + "' must be positive");
        return static_cast<std::size_t>(v);
    };
    DetectorSettings s;
    s.iforest.n_trees = positive("iforest.trees");
    s.iforest.subsample = positive("iforest.subsample");
    s.knn.k = positive("knn.k");
    s.cblof.n_clusters = positive("cblof.clusters");
    s.cblof.alpha = cfg.get_double("cblof.alpha");
    s.cblof.beta = cfg.get_double("cblof.beta");
    s.cblof.max_iters = positive("cblof.max_iters");
    s.cblof.tol = cfg.get_double("cblof.tol");
    s.neural.epochs = positive("neural.epochs");
    s.neural.batch = positive("neural.batch");
    s.neural.learning_rate = cfg.get_double("neural.lr");
    s.neural.beta1 = cfg.get_double("neural.beta1");
    s.neural.beta2 = cfg.get_double("neural.beta2");
    s.neural.epsilon = cfg.get_double("neural.epsilon");
    s.autoenc_bottleneck = static_cast<std::size_t>(cfg.get_u64("autoenc.bottleneck"));
    s.svdd_embed = static_cast<std::size_t>(cfg.get_u64("svdd.embed"));
    return s;
}

SweepConfig sweep_config(const RunConfig& cfg, const std::vector<std::string>& channel_names) {
    SweepConfig sc;
    const auto taus = cfg.get_double_list("taus");
    const auto overlaps = cfg.get_double_list("overlaps");
    for (double tau : taus)
        for (double o : overlaps) sc.grid.push_back({tau, o});
    for (const std::string& name : cfg.get_list("models"))
        sc.models.push_back(parse_model_kind(name));
    for (const std::string& name : cfg.get_list("selections"))
        sc.selections.push_back(parse_selection(name, channel_names));
    for (const std::string& name : cfg.get_list("paths"))
        sc.paths.push_back(parse_feature_path(name));
    sc.thresholds = cfg.get_double_list("thresholds");
    sc.detectors = detector_settings(cfg);
    sc.master_seed = cfg.get_u64("seed");
    sc.workers = static_cast<int>(cfg.get_int("workers"));
    sc.record_wall_ms = cfg.get_bool("record_wall_ms");
    return sc;
}

} // namespace vibench::cli
