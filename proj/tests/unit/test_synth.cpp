#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vibench/errors.hpp"
#include "vibench/eval.hpp"
#include "vibench/features.hpp"
#include "vibench/io_util.hpp"
#include "vibench/signal.hpp"
#include "vibench/statlab.hpp"
#include "vibench/synth.hpp"

using namespace vibench;
namespace fs = std::filesystem;

namespace {

double rms_of(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s / static_cast<double>(x.size()));
}

std::size_t name_index(const std::vector<std::string>& names, const std::string& want) {
    auto it = std::find(names.begin(), names.end(), want);
    REQUIRE(it != names.end());
    return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> channel_slice(const LabeledSignal& sig, std::size_t ch, std::int64_t lo,
                                  std::int64_t hi) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(hi - lo));
    for (std::int64_t t = lo; t < hi; ++t)
        out.push_back(sig.samples.at(static_cast<std::size_t>(t), ch));
    return out;
}

} // namespace

TEST_CASE("generate: segment layout follows the fault") {
    SynthConfig cfg;
    cfg.duration_s = 2.0;
    cfg.nu_hz = 500.0;
    cfg.id_prefix = "probe";

    SUBCASE("no fault, one normal segment spanning the file") {
        LabeledSignal sig = generate(cfg);
        REQUIRE(sig.segments.size() == 1);
        CHECK(sig.segments[0].id == "probe-n");
        CHECK(sig.segments[0].label == Label::Normal);
        CHECK(sig.segments[0].start_sample == 0);
        CHECK(sig.segments[0].end_sample == 1000);
        CHECK(sig.segments[0].experiment == "probe");
        CHECK(sig.length() == 1000);
        CHECK(sig.channels() == 8);
        CHECK(sig.impeller_channel == 7);
        CHECK(sig.sampling_rate_hz == 500.0);
        CHECK(sig.channel_names[7] == "impeller");
        CHECK(sig.channel_names[0] == "motor_outboard_x");
    }

    SUBCASE("abrupt closure at 60 s in a 120 s file splits at the onset") {
        cfg.duration_s = 120.0;
        cfg.nu_hz = 100.0;
        cfg.rotation_hz = 2.0; // keep harmonics under the 50 Hz Nyquist
        cfg.fault = FaultSpec::abrupt_valve(0.75, 60.0);
        LabeledSignal sig = generate(cfg);
        REQUIRE(sig.segments.size() == 2);
        CHECK(sig.segments[0].id == "probe-n");
        CHECK(sig.segments[0].label == Label::Normal);
        CHECK(sig.segments[0].start_sample == 0);
        CHECK(sig.segments[0].end_sample == 6000);
        CHECK(sig.segments[1].id == "probe-a");
        CHECK(sig.segments[1].label == Label::Abnormal);
        CHECK(sig.segments[1].start_sample == 6000);
        CHECK(sig.segments[1].end_sample == 12000);
    }

    SUBCASE("gradual closure goes abnormal at ramp start") {
        cfg.fault = FaultSpec::gradual_valve(0.5, 0.8, 1.2);
        LabeledSignal sig = generate(cfg);
        REQUIRE(sig.segments.size() == 2);
        CHECK(sig.segments[0].end_sample == 400);
        CHECK(sig.segments[1].start_sample == 400);
        CHECK(sig.segments[1].label == Label::Abnormal);
    }

    SUBCASE("onset zero means a fully abnormal recording") {
        cfg.fault = FaultSpec::level_drop(0.0);
        LabeledSignal sig = generate(cfg);
        REQUIRE(sig.segments.size() == 1);
        CHECK(sig.segments[0].id == "probe-a");
        CHECK(sig.segments[0].label == Label::Abnormal);
        CHECK(sig.segments[0].start_sample == 0);
        CHECK(sig.segments[0].end_sample == 1000);
    }

    SUBCASE("custom channel layout gets generic names") {
        cfg.n_channels = 3;
        cfg.impeller_channel = 1;
        LabeledSignal sig = generate(cfg);
        CHECK(sig.channel_names == std::vector<std::string>{"ch0", "impeller", "ch2"});
    }
}

TEST_CASE("generate: recipe validation") {
    SynthConfig ok;
    ok.duration_s = 1.0;
    ok.nu_hz = 400.0;
    CHECK_NOTHROW(generate(ok));

    auto expect_bad = [](SynthConfig c) {
        CHECK_THROWS_WITH_AS(generate(c), doctest::Contains("BadConfig"), ConfigError);
    };

    SynthConfig c = ok;
    c.duration_s = 0.001; // under one sample
    expect_bad(c);

    c = ok;
    c.nu_hz = 0.0;
    expect_bad(c);

    c = ok;
    c.n_channels = 0;
    expect_bad(c);

    c = ok;
    c.impeller_channel = 8;
    expect_bad(c);

    c = ok;
    c.rotation_hz = 45.0; // 5th harmonic = 225 Hz >= Nyquist 200
    expect_bad(c);

    c = ok;
    c.harmonic_amplitudes.clear();
    expect_bad(c);

    c = ok;
    c.noise_sigma = -0.1;
    expect_bad(c);

    c = ok;
    c.channel_attenuation = {1.0, 1.0}; // wrong size
    expect_bad(c);

    c = ok;
    c.channel_names = {"a", "b"}; // wrong size
    expect_bad(c);

    c = ok;
    c.fault = FaultSpec::abrupt_valve(0.3, 0.5); // fraction off-grid
    expect_bad(c);

    c = ok;
    c.fault = FaultSpec::abrupt_valve(0.5, 1.0); // onset at end
    expect_bad(c);

    c = ok;
    c.fault = FaultSpec::abrupt_valve(0.5, -0.1);
    expect_bad(c);

    c = ok;
    c.fault = FaultSpec::gradual_valve(0.5, 0.6, 0.6); // empty ramp
    expect_bad(c);

    c = ok;
    c.fault = FaultSpec::gradual_valve(0.5, 0.2, 1.5); // ramp past the end
    expect_bad(c);

    c = ok;
    c.fault = FaultSpec::level_drop(0.2, 0.0); // zero severity
    expect_bad(c);

    c = ok;
    c.fault_broadband_gain = -1.0;
    expect_bad(c);
}

TEST_CASE("default attenuation ramps toward the impeller") {
    auto a8 = default_attenuation(8, 7);
    REQUIRE(a8.size() == 8);
    CHECK(a8[0] == doctest::Approx(0.4));
    CHECK(a8[6] == doctest::Approx(0.7));
    CHECK(a8[7] == 1.0);
    for (std::size_t c = 0; c + 1 < 7; ++c) CHECK(a8[c] < a8[c + 1]);

    auto a3 = default_attenuation(3, 1);
    REQUIRE(a3.size() == 3);
    CHECK(a3[1] == 1.0);
    CHECK(a3[0] == doctest::Approx(0.4));
    CHECK(a3[2] == doctest::Approx(0.7));
}

TEST_CASE("spectrum: rotation line dominates, harmonics stay on their bins") {
    SUBCASE("noisy default recording peaks at the rotation bin") {
        SynthConfig cfg;
        cfg.duration_s = 1.0; // 4000 samples, 1 Hz bins
        cfg.seed = 11;
        LabeledSignal sig = generate(cfg);
        for (std::size_t ch : {std::size_t{0}, std::size_t{7}}) {
            auto x = channel_slice(sig, ch, 0, sig.length());
            auto spec = oracle::one_sided_spectrum(x, cfg.nu_hz);
            std::size_t best = 1;
            for (std::size_t k = 2; k < spec.power.size(); ++k)
                if (spec.power[k] > spec.power[best]) best = k;
            // 29.5 Hz straddles the 29 / 30 Hz bins
            CHECK(std::abs(spec.freq[best] - cfg.rotation_hz) <= 1.0);
        }
    }

    SUBCASE("harmonics-only config has power only at harmonic bins") {
        SynthConfig cfg;
        cfg.duration_s = 1.0;
        cfg.nu_hz = 1000.0;
        cfg.rotation_hz = 25.0; // exact bins at N = 1000
        cfg.harmonic_amplitudes = {1.0, 0.5, 0.25};
        cfg.noise_sigma = 0.0;
        cfg.n_channels = 2;
        cfg.impeller_channel = 1;
        cfg.seed = 3;
        LabeledSignal sig = generate(cfg);
        auto x = channel_slice(sig, 1, 0, sig.length());
        auto spec = oracle::one_sided_spectrum(x, cfg.nu_hz);
        double peak = 0.0;
        for (double p : spec.power) peak = std::max(peak, p);
        REQUIRE(peak > 0.0);
        for (std::size_t k = 0; k < spec.power.size(); ++k) {
            const double f = spec.freq[k];
            const bool harmonic_bin = std::abs(f - 25.0) <= 1.0 || std::abs(f - 50.0) <= 1.0 ||
                                      std::abs(f - 75.0) <= 1.0;
            if (!harmonic_bin) CHECK(spec.power[k] <= 1e-16 * peak);
        }
        // all three lines present, descending
        auto power_near = [&](double f) { return spec.power[static_cast<std::size_t>(f)]; };
        CHECK(power_near(25.0) > power_near(50.0));
        CHECK(power_near(50.0) > power_near(75.0));
        CHECK(power_near(75.0) > 0.01 * peak);
    }
}

TEST_CASE("fault signature: impeller moves most, windows separate cleanly") {
    SynthConfig cfg;
    cfg.duration_s = 60.0;
    cfg.fault = FaultSpec::abrupt_valve(0.75, 30.0);
    cfg.id_prefix = "abrupt-75";
    cfg.seed = 21;
    LabeledSignal sig = generate(cfg);
    const std::int64_t split = 30 * 4000;

    SUBCASE("per-channel rms change is largest on the impeller") {
        double impeller_delta = 0.0;
        std::vector<double> deltas(8);
        for (std::size_t c = 0; c < 8; ++c) {
            const double before = rms_of(channel_slice(sig, c, 0, split));
            const double after = rms_of(channel_slice(sig, c, split, sig.length()));
            deltas[c] = after - before;
            CHECK(deltas[c] > 0.0);
        }
        impeller_delta = deltas[7];
        for (std::size_t c = 0; c < 7; ++c) CHECK(impeller_delta > deltas[c]);
    }

    SUBCASE("rms and spectral centroid distributions separate at p < 0.001") {
        WindowingPlan plan{0.25, 0.0, cfg.nu_hz};
        WindowSet ws = segment_windows(sig, plan, ChannelSelection::single(7));
        std::vector<double> rms_n, rms_a, cent_n, cent_a;
        const std::size_t ci = name_index(spectral_feature_names(), "spectral_centroid_hz");
        std::vector<double> buf(static_cast<std::size_t>(ws.length));
        for (std::size_t w = 0; w < ws.size(); ++w) {
            auto& rms_dst = ws.label(w) == Label::Normal ? rms_n : rms_a;
            auto& cent_dst = ws.label(w) == Label::Normal ? cent_n : cent_a;
            if (rms_dst.size() >= 100) continue;
            ws.extract_channel(w, 0, buf.data());
            rms_dst.push_back(rms_of(buf));
            cent_dst.push_back(spectral_features(buf, cfg.nu_hz).values[ci]);
        }
        REQUIRE(rms_n.size() == 100);
        REQUIRE(rms_a.size() == 100);
        CHECK(mann_whitney_u(rms_n, rms_a).p < 1e-3);
        CHECK(mann_whitney_u(cent_n, cent_a).p < 1e-3);
    }
}

TEST_CASE("benchmark suite: roster, folds and byte-identical regeneration") {
    const auto base = fs::temp_directory_path();
    const auto dir_a = (base / "vibench_test_synth_a").string();
    const auto dir_b = (base / "vibench_test_synth_b").string();
    const auto dir_c = (base / "vibench_test_synth_c").string();
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    fs::remove_all(dir_c);

    BenchmarkSuite suite = generate_benchmark_suite(7, dir_a);
    REQUIRE(suite.data_paths.size() == 8);
    REQUIRE(suite.manifest_paths.size() == 8);

    SUBCASE("roster matches the experiment table") {
        auto signals = load_dataset(suite.dataset_path);
        REQUIRE(signals.size() == 8);

        std::map<std::string, Label> roster;
        std::vector<Segment> all_segments;
        for (const auto& sig : signals) {
            CHECK(sig->sampling_rate_hz == 4000.0);
            CHECK(sig->channels() == 8);
            CHECK(sig->impeller_channel == 7);
            CHECK(sig->channel_names[7] == "impeller");
            for (const Segment& s : sig->segments) {
                roster[s.id] = s.label;
                all_segments.push_back(s);
            }
        }
        const std::vector<std::string> normals = {"abrupt-25-n", "abrupt-50-n", "abrupt-75-n",
                                                  "gradual-n",   "msl-n",       "const-flow-n"};
        const std::vector<std::string> abnormals = {"abrupt-25-a", "abrupt-50-a", "abrupt-75-a",
                                                    "gradual-a",   "bmsl-a",      "no-flow-a"};
        REQUIRE(roster.size() == normals.size() + abnormals.size());
        for (const auto& id : normals) CHECK(roster.at(id) == Label::Normal);
        for (const auto& id : abnormals) CHECK(roster.at(id) == Label::Abnormal);

        // valve recordings split at 30 s, level recordings are single-segment
        CHECK(signals[0]->segments[0].end_sample == 120000);
        CHECK(signals[0]->segments[1].start_sample == 120000);
        CHECK(signals[0]->segments[1].end_sample == 240000);
        CHECK(signals[4]->segments.size() == 1); // msl
        CHECK(signals[4]->length() == 120000);

        auto folds = build_folds(all_segments, suite.folds);
        REQUIRE(folds.size() == 5);
        CHECK(folds[0].train_segment_ids.size() == 4);
        CHECK(folds[0].test_segment_ids.size() == 8); // 2 normals + all abnormals
        auto loaded_spec = load_fold_spec(suite.fold_spec_path);
        REQUIRE(loaded_spec.size() == 5);
        CHECK(loaded_spec[0].test_normal_segment_ids ==
              std::vector<std::string>{"abrupt-25-n", "abrupt-50-n"});
    }

    SUBCASE("same master seed regenerates identical bytes, other seeds differ") {
        BenchmarkSuite again = generate_benchmark_suite(7, dir_b);
        for (std::size_t i = 0; i < suite.data_paths.size(); ++i) {
            CHECK(ioutil::read_file(suite.data_paths[i]) == ioutil::read_file(again.data_paths[i]));
            CHECK(ioutil::read_file(suite.manifest_paths[i]) ==
                  ioutil::read_file(again.manifest_paths[i]));
        }
        CHECK(ioutil::read_file(suite.fold_spec_path) == ioutil::read_file(again.fold_spec_path));
        CHECK(ioutil::read_file(suite.dataset_path) == ioutil::read_file(again.dataset_path));

        BenchmarkSuite other = generate_benchmark_suite(8, dir_c);
        CHECK(ioutil::read_file(suite.data_paths[0]) != ioutil::read_file(other.data_paths[0]));
    }

    SUBCASE("dataset index rejects malformed JSON") {
        const auto bogus = (fs::path(dir_a) / "broken.json").string();
        ioutil::write_file(bogus, "{\"files\": 3}");
        CHECK_THROWS_WITH_AS(load_dataset(bogus), doctest::Contains("ParseError"), DataError);
        ioutil::write_file(bogus, "not json");
        CHECK_THROWS_WITH_AS(load_dataset(bogus), doctest::Contains("ParseError"), DataError);
    }

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    fs::remove_all(dir_c);
}
