#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vibench/eval.hpp"

namespace vibench::cli {

/// Flat key=value run configuration. Values come from an optional config
/// file first, then from flag overrides; every key is validated against the
/// documented schema. The canonical form (sorted key=value lines, the
/// location-only "out" key excluded) feeds the config hash embedded in every
/// output file.
class RunConfig {
public:
    /// Schema defaults only.
    RunConfig();

    /// Throws ConfigError on unknown keys, duplicates or malformed lines.
    void load_file(const std::string& path);

    /// Flag override, same validation.
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return !values_.at(key).empty(); }
    const std::string& raw(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;

    std::string canonical() const;
    /// 16 hex digits of the canonical form.
    std::string hash() const;

private:
    std::map<std::string, std::string> values_; // full schema, defaults prefilled
};

/// Detector hyperparameters from the iforest.* / knn.* / cblof.* / neural.*
/// keys.
DetectorSettings detector_settings(const RunConfig& cfg);

/// Sweep assembled from the list keys (models, selections, paths, taus,
/// overlaps, thresholds) plus seed / workers / record_wall_ms.
SweepConfig sweep_config(const RunConfig& cfg, const std::vector<std::string>& channel_names);

} // namespace vibench::cli
