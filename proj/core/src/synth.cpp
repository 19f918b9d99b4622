#include "vibench/synth.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

#include <json.hpp>

#include "vibench/errors.hpp"
#include "vibench/io_util.hpp"
#include "vibench/rng.hpp"

namespace vibench {

using nlohmann::json;
namespace io = ioutil;
namespace fs = std::filesystem;

FaultSpec FaultSpec::abrupt_valve(double fraction, double t_onset_s) {
    FaultSpec f;
    f.kind = Kind::AbruptValve;
    f.fraction = fraction;
    f.t_onset_s = t_onset_s;
    return f;
}

FaultSpec FaultSpec::gradual_valve(double fraction, double t_start_s, double t_end_s) {
    FaultSpec f;
    f.kind = Kind::GradualValve;
    f.fraction = fraction;
    f.t_start_s = t_start_s;
    f.t_end_s = t_end_s;
    return f;
}

FaultSpec FaultSpec::level_drop(double t_onset_s, double severity) {
    FaultSpec f;
    f.kind = Kind::LevelDrop;
    f.t_onset_s = t_onset_s;
    f.severity = severity;
    return f;
}

std::vector<double> default_attenuation(std::size_t n_channels, int impeller_channel) {
    std::vector<double> atten(n_channels, 0.55);
    std::size_t others = n_channels > 0 ? n_channels - 1 : 0;
    std::size_t pos = 0;
    for (std::size_t c = 0; c < n_channels; ++c) {
        if (static_cast<int>(c) == impeller_channel) {
            atten[c] = 1.0;
        } else if (others > 1) {
            atten[c] = 0.4 + 0.3 * static_cast<double>(pos++) / static_cast<double>(others - 1);
        }
    }
    return atten;
}

namespace {

const std::vector<std::string>& pump_channel_names() {
    static const std::vector<std::string> names = {
        "motor_outboard_x", "motor_outboard_y", "motor_inboard_x", "motor_inboard_y",
        "bearing_x",        "bearing_y",        "bearing_axial",   "impeller"};
    return names;
}

void validate(const SynthConfig& c) {
    if (c.nu_hz <= 0.0) throw ConfigError("BadConfig: sampling rate must be positive");
    if (c.duration_s * c.nu_hz < 1.0)
        throw ConfigError("BadConfig: duration * rate must cover at least one sample");
    if (c.n_channels == 0) throw ConfigError("BadConfig: need at least one channel");
    if (c.impeller_channel < 0 || static_cast<std::size_t>(c.impeller_channel) >= c.n_channels)
        throw ConfigError("BadConfig: impeller channel out of range");
    if (c.rotation_hz <= 0.0) throw ConfigError("BadConfig: rotation rate must be positive");
    if (c.harmonic_amplitudes.empty())
        throw ConfigError("BadConfig: need at least one harmonic amplitude");
    double top = c.rotation_hz * static_cast<double>(c.harmonic_amplitudes.size());
    if (top >= c.nu_hz / 2.0)
        throw ConfigError("BadConfig: highest harmonic " + io::format_double(top) +
                          " Hz at or above Nyquist");
    if (c.noise_sigma < 0.0) throw ConfigError("BadConfig: noise sigma must be >= 0");
    if (c.fault_amp_gain < 0.0 || c.fault_broadband_gain < 0.0 || c.fault_noise_gain < 0.0)
        throw ConfigError("BadConfig: fault gains must be >= 0");
    if (!c.channel_attenuation.empty()) {
        if (c.channel_attenuation.size() != c.n_channels)
            throw ConfigError("BadConfig: attenuation size != channel count");
        for (double a : c.channel_attenuation)
            if (!(a > 0.0)) throw ConfigError("BadConfig: attenuation entries must be > 0");
    }
    if (!c.channel_names.empty() && c.channel_names.size() != c.n_channels)
        throw ConfigError("BadConfig: channel name count != channel count");
    if (c.id_prefix.empty()) throw ConfigError("BadConfig: empty id prefix");

    const FaultSpec& f = c.fault;
    auto check_fraction = [&] {
        if (f.fraction != 0.25 && f.fraction != 0.5 && f.fraction != 0.75)
            throw ConfigError("BadConfig: valve fraction must be 0.25, 0.5 or 0.75");
    };
    switch (f.kind) {
    case FaultSpec::Kind::None:
        break;
    case FaultSpec::Kind::AbruptValve:
        check_fraction();
        if (f.t_onset_s < 0.0 || f.t_onset_s >= c.duration_s)
            throw ConfigError("BadConfig: fault onset outside the recording");
        break;
    case FaultSpec::Kind::GradualValve:
        check_fraction();
        if (f.t_start_s < 0.0 || f.t_start_s >= f.t_end_s || f.t_end_s > c.duration_s)
            throw ConfigError("BadConfig: gradual ramp must satisfy 0 <= start < end <= duration");
        break;
    case FaultSpec::Kind::LevelDrop:
        if (f.t_onset_s < 0.0 || f.t_onset_s >= c.duration_s)
            throw ConfigError("BadConfig: fault onset outside the recording");
        if (!(f.severity > 0.0)) throw ConfigError("BadConfig: level-drop severity must be > 0");
        break;
    }
}

} // namespace

LabeledSignal generate(const SynthConfig& config) {
    validate(config);

    const std::int64_t total = std::llround(config.duration_s * config.nu_hz);
    const std::size_t nch = config.n_channels;
    const std::size_t nharm = config.harmonic_amplitudes.size();

    std::vector<double> atten = config.channel_attenuation.empty()
                                    ? default_attenuation(nch, config.impeller_channel)
                                    : config.channel_attenuation;

    // Severity profile over sample index: 0 before onset, plateau after.
    std::int64_t onset = 0;
    std::int64_t ramp_end = 0;
    double plateau = 0.0;
    switch (config.fault.kind) {
    case FaultSpec::Kind::None:
        onset = total; // never active
        break;
    case FaultSpec::Kind::AbruptValve:
        onset = ramp_end = std::llround(config.fault.t_onset_s * config.nu_hz);
        plateau = config.fault.fraction;
        break;
    case FaultSpec::Kind::GradualValve:
        onset = std::llround(config.fault.t_start_s * config.nu_hz);
        ramp_end = std::llround(config.fault.t_end_s * config.nu_hz);
        plateau = config.fault.fraction;
        break;
    case FaultSpec::Kind::LevelDrop:
        onset = ramp_end = std::llround(config.fault.t_onset_s * config.nu_hz);
        plateau = config.fault.severity;
        break;
    }
    auto severity_at = [&](std::int64_t t) -> double {
        if (t < onset) return 0.0;
        if (t >= ramp_end) return plateau;
        return plateau * static_cast<double>(t - onset) / static_cast<double>(ramp_end - onset);
    };

    Rng rng(config.seed);
    const double two_pi = 2.0 * std::numbers::pi;

    // Fixed random phase per (channel, harmonic), drawn before the sample stream.
    std::vector<double> phase(nch * nharm);
    for (double& p : phase) p = two_pi * rng.uniform();

    std::vector<double> omega(nharm);
    for (std::size_t h = 0; h < nharm; ++h)
        omega[h] = two_pi * config.rotation_hz * static_cast<double>(h + 1) / config.nu_hz;

    LabeledSignal sig;
    sig.samples = Matrix(static_cast<std::size_t>(total), nch);
    sig.sampling_rate_hz = config.nu_hz;
    sig.impeller_channel = config.impeller_channel;
    if (!config.channel_names.empty()) {
        sig.channel_names = config.channel_names;
    } else if (nch == 8 && config.impeller_channel == 7) {
        sig.channel_names = pump_channel_names();
    } else {
        sig.channel_names.reserve(nch);
        for (std::size_t c = 0; c < nch; ++c)
            sig.channel_names.push_back(static_cast<int>(c) == config.impeller_channel
                                            ? "impeller"
                                            : "ch" + std::to_string(c));
    }

    for (std::int64_t t = 0; t < total; ++t) {
        const double s = severity_at(t);
        for (std::size_t c = 0; c < nch; ++c) {
            const double local = s * atten[c];
            double v = 0.0;
            for (std::size_t h = 0; h < nharm; ++h)
                v += config.harmonic_amplitudes[h] *
                     std::sin(omega[h] * static_cast<double>(t) + phase[c * nharm + h]);
            v *= atten[c] * (1.0 + config.fault_amp_gain * local);
            v += config.noise_sigma * (1.0 + config.fault_noise_gain * local) * rng.normal();
            if (s > 0.0) v += config.fault_broadband_gain * local * rng.normal();
            sig.samples.at(static_cast<std::size_t>(t), c) = v;
        }
    }

    const std::int64_t split = config.fault.kind == FaultSpec::Kind::None ? total : onset;
    if (split > 0)
        sig.segments.push_back(
            {config.id_prefix + "-n", Label::Normal, 0, split, config.id_prefix});
    if (split < total)
        sig.segments.push_back(
            {config.id_prefix + "-a", Label::Abnormal, split, total, config.id_prefix});
    return sig;
}

BenchmarkSuite generate_benchmark_suite(std::uint64_t master_seed, const std::string& dir,
                                        const std::string& config_hash) {
    struct FileSpec {
        const char* prefix;
        double duration_s;
        FaultSpec fault;
    };
    const std::vector<FileSpec> files = {
        {"abrupt-25", 60.0, FaultSpec::abrupt_valve(0.25, 30.0)},
        {"abrupt-50", 60.0, FaultSpec::abrupt_valve(0.5, 30.0)},
        {"abrupt-75", 60.0, FaultSpec::abrupt_valve(0.75, 30.0)},
        {"gradual", 60.0, FaultSpec::gradual_valve(0.75, 30.0, 35.0)},
        {"msl", 30.0, FaultSpec::none()},
        {"bmsl", 30.0, FaultSpec::level_drop(0.0, 1.0)},
        {"no-flow", 30.0, FaultSpec::level_drop(0.0, 1.4)},
        {"const-flow", 30.0, FaultSpec::none()},
    };

    fs::create_directories(dir);

    BenchmarkSuite suite;
    suite.dir = dir;
    json index;
    index["files"] = json::array();
    for (const FileSpec& fsp : files) {
        SynthConfig cfg;
        cfg.duration_s = fsp.duration_s;
        cfg.fault = fsp.fault;
        cfg.id_prefix = fsp.prefix;
        cfg.seed = mix_seed(master_seed, stable_hash(fsp.prefix));
        LabeledSignal sig = generate(cfg);

        std::string data_name = std::string(fsp.prefix) + ".f32";
        std::string manifest_name = std::string(fsp.prefix) + ".manifest.json";
        std::string data_path = (fs::path(dir) / data_name).string();
        std::string manifest_path = (fs::path(dir) / manifest_name).string();
        save_signal_f32(sig, data_path);
        json extra;
        extra["seed"] = cfg.seed;
        extra["master_seed"] = master_seed;
        if (!config_hash.empty()) extra["config_hash"] = config_hash;
        save_manifest(sig, manifest_path, extra.dump());

        suite.data_paths.push_back(data_path);
        suite.manifest_paths.push_back(manifest_path);
        index["files"].push_back({{"data", data_name}, {"manifest", manifest_name}});
    }

    suite.folds = {
        {1, {"abrupt-25-n", "abrupt-50-n"}},
        {2, {"abrupt-75-n"}},
        {3, {"gradual-n"}},
        {4, {"msl-n"}},
        {5, {"const-flow-n"}},
    };
    suite.fold_spec_path = (fs::path(dir) / "folds.json").string();
    save_fold_spec(suite.folds, suite.fold_spec_path);

    index["fold_spec"] = "folds.json";
    index["master_seed"] = master_seed;
    if (!config_hash.empty()) index["config_hash"] = config_hash;
    suite.dataset_path = (fs::path(dir) / "dataset.json").string();
    io::write_file(suite.dataset_path, index.dump(2) + "\n");
    return suite;
}

DatasetIndex read_dataset_index(const std::string& dataset_path) {
    json index;
    try {
        index = json::parse(io::read_file(dataset_path));
        if (!index.is_object() || !index.at("files").is_array())
            throw DataError("ParseError: dataset index " + dataset_path +
                            ": expected an object with a 'files' array");
    } catch (const json::exception& e) {
        throw DataError("ParseError: dataset index " + dataset_path + ": " + e.what());
    }

    const fs::path base = fs::path(dataset_path).parent_path();
    DatasetIndex out;
    try {
        for (const json& entry : index.at("files")) {
            out.data_paths.push_back((base / entry.at("data").get<std::string>()).string());
            out.manifest_paths.push_back(
                (base / entry.at("manifest").get<std::string>()).string());
        }
        if (index.contains("fold_spec"))
            out.fold_spec_path = (base / index.at("fold_spec").get<std::string>()).string();
        if (index.contains("master_seed"))
            out.master_seed = index.at("master_seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw DataError("ParseError: dataset index " + dataset_path + ": " + e.what());
    }
    return out;
}

std::vector<std::shared_ptr<const LabeledSignal>> load_dataset(const std::string& dataset_path) {
    const DatasetIndex index = read_dataset_index(dataset_path);
    std::vector<std::shared_ptr<const LabeledSignal>> out;
    for (std::size_t i = 0; i < index.data_paths.size(); ++i)
        out.push_back(std::make_shared<const LabeledSignal>(
            load_signal(index.data_paths[i], index.manifest_paths[i])));
    return out;
}

} // namespace vibench
