#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vibench/eval.hpp"
#include "vibench/signal.hpp"

namespace vibench {

/// Operating-condition change injected into a generated recording.
/// Severity ramps from 0 to its plateau according to the kind; the plateau
/// value is the valve fraction for valve faults and `severity` for LevelDrop.
struct FaultSpec {
    enum class Kind { None, AbruptValve, GradualValve, LevelDrop };

    Kind kind = Kind::None;
    double fraction = 0.5;  // valve closure fraction, one of 0.25 / 0.5 / 0.75
    double t_onset_s = 0.0; // AbruptValve, LevelDrop
    double t_start_s = 0.0; // GradualValve ramp start
    double t_end_s = 0.0;   // GradualValve ramp end (plateau from here on)
    double severity = 1.0;  // LevelDrop plateau, > 0

    static FaultSpec none() { return {}; }
    static FaultSpec abrupt_valve(double fraction, double t_onset_s);
    static FaultSpec gradual_valve(double fraction, double t_start_s, double t_end_s);
    static FaultSpec level_drop(double t_onset_s, double severity = 1.0);
};

/// Synthetic pump-vibration recording recipe. The base signal per channel is
/// attenuation * sum of rotation harmonics (random phases) + Gaussian noise;
/// an active fault scales the harmonic envelope, injects broadband noise and
/// widens the noise floor, all proportional to severity * attenuation, so the
/// impeller channel (attenuation 1) always sees the largest change.
struct SynthConfig {
    double duration_s = 60.0;
    double nu_hz = 4000.0;
    std::size_t n_channels = 8;
    int impeller_channel = 7;
    double rotation_hz = 29.5; // 1770 RPM
    std::vector<double> harmonic_amplitudes = {1.0, 0.55, 0.3, 0.18, 0.1};
    double noise_sigma = 0.35;
    /// Per-channel gain, empty = default_attenuation(). Doubles as the fault
    /// locality profile.
    std::vector<double> channel_attenuation;
    /// Channel names, empty = pump naming for the default 8-channel layout,
    /// "ch<i>" plus "impeller" otherwise.
    std::vector<std::string> channel_names;
    FaultSpec fault;
    double fault_amp_gain = 0.8;       // harmonic envelope: 1 + gain * s * atten
    double fault_broadband_gain = 1.2; // extra white noise sigma: gain * s * atten
    double fault_noise_gain = 0.6;     // noise floor: sigma * (1 + gain * s * atten)
    std::uint64_t seed = 0;
    std::string id_prefix = "synth"; // segment ids become "<prefix>-n" / "<prefix>-a"
};

/// Impeller channel gets 1.0, the others ramp 0.4 .. 0.7 in index order.
std::vector<double> default_attenuation(std::size_t n_channels, int impeller_channel);

/// Deterministic generation; throws ConfigError("BadConfig: ...") on invalid
/// recipes. Segments: normal before fault onset, abnormal from onset on.
LabeledSignal generate(const SynthConfig& config);

/// File layout emitted by generate_benchmark_suite.
struct BenchmarkSuite {
    std::string dir;
    std::vector<std::string> data_paths;     // .f32, one per recording
    std::vector<std::string> manifest_paths; // matching manifest JSON
    std::string fold_spec_path;              // folds.json
    std::string dataset_path;                // dataset.json index
    std::vector<FoldSpec> folds;
};

/// Write the eight-recording benchmark suite (three abrupt valve closures,
/// one gradual closure, MSL / constant-flow normals, BMSL / no-flow
/// abnormals) plus fold spec and dataset index into dir. Per-recording seeds
/// derive from master_seed, so output bytes depend only on master_seed and
/// the optional provenance stamp (a non-empty config_hash is embedded in
/// every manifest and the index).
BenchmarkSuite generate_benchmark_suite(std::uint64_t master_seed, const std::string& dir,
                                        const std::string& config_hash = "");

/// Parsed dataset.json with every path resolved against the index location.
struct DatasetIndex {
    std::vector<std::string> data_paths;
    std::vector<std::string> manifest_paths;
    std::string fold_spec_path; // empty when the index names none
    std::uint64_t master_seed = 0;
};

DatasetIndex read_dataset_index(const std::string& dataset_path);

/// Load every recording listed in a dataset.json (paths resolve relative to
/// the index file's directory).
std::vector<std::shared_ptr<const LabeledSignal>> load_dataset(const std::string& dataset_path);

} // namespace vibench
