#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vibench/errors.hpp"
#include "vibench/matrix.hpp"

namespace vibench {

enum class Label : std::uint8_t { Normal = 0, Abnormal = 1 };

const char* label_name(Label l);
Label parse_label(const std::string& s);

/// Contiguous labeled slice of a recording. end_sample is exclusive.
struct Segment {
    std::string id;
    Label label = Label::Normal;
    std::int64_t start_sample = 0;
    std::int64_t end_sample = 0;
    std::string experiment;
};

/// Multi-channel recording with labeled segments. samples is [T x C]
/// row-major; segments are validated to be sorted, disjoint and in range.
struct LabeledSignal {
    Matrix samples;
    double sampling_rate_hz = 0.0;
    std::vector<std::string> channel_names;
    int impeller_channel = -1;
    std::vector<Segment> segments;

    std::int64_t length() const { return static_cast<std::int64_t>(samples.rows); }
    std::size_t channels() const { return samples.cols; }
};

/// Per-channel standardization statistics, population convention.
struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> std_dev;
};

/// Sliding-window geometry. Window length N = round(tau * nu),
/// stride = max(1, round((1 - overlap) * N)).
struct WindowingPlan {
    double tau_s = 1.0;
    double overlap = 0.0;
    double nu_hz = 0.0;

    std::int64_t window_length() const;
    std::int64_t stride() const;
    void validate() const; // throws ConfigError("DegeneratePlan: ...")
};

/// Gaussian smoothing + decimation. Kernel sigma defaults to step/6 so that
/// 99.7% of the kernel mass falls inside one subsampling interval.
struct GaussianPlan {
    std::int64_t step = 1;
    double sigma = 0.0; // <= 0 means step / 6.0

    double effective_sigma() const { return sigma > 0.0 ? sigma : static_cast<double>(step) / 6.0; }
};

/// Channel projection: one named channel, all channels except the impeller,
/// or all channels.
struct ChannelSelection {
    enum class Kind { Single, AboveOil, All };
    Kind kind = Kind::All;
    int index = -1; // Single only

    static ChannelSelection single(int i) { return {Kind::Single, i}; }
    static ChannelSelection above_oil() { return {Kind::AboveOil, -1}; }
    static ChannelSelection all() { return {Kind::All, -1}; }
};

/// Label-pure sliding windows over one or more recordings. Windows are views
/// into shared storage; nothing is copied until a consumer extracts samples.
struct WindowSet {
    struct WindowRef {
        std::uint32_t storage = 0;   // index into storages
        std::int64_t start = 0;      // first row of the window
        std::uint32_t segment = 0;   // index into segment_ids/segment_labels
    };

    std::vector<std::shared_ptr<const Matrix>> storages;
    std::vector<std::string> segment_ids;
    std::vector<Label> segment_labels;
    std::vector<WindowRef> windows;
    std::vector<std::size_t> channels;      // selected columns of the storages
    std::vector<std::string> channel_names; // names of the selected columns
    std::string impeller_name;              // empty when not part of the selection
    std::int64_t length = 0;                // N
    double nu_hz = 0.0;

    std::size_t size() const { return windows.size(); }
    std::size_t width() const { return channels.size(); }
    Label label(std::size_t w) const { return segment_labels[windows[w].segment]; }
    const std::string& segment_id(std::size_t w) const { return segment_ids[windows[w].segment]; }

    /// Copy one selected channel of window w into dst (length N).
    void extract_channel(std::size_t w, std::size_t channel_pos, double* dst) const;
    /// Copy window w into dst as [N x C'] row-major (time-major).
    void extract_window(std::size_t w, double* dst) const;
};

// ---- ingest / persist ----------------------------------------------------

/// Load a recording from CSV (header = channel names) or little-endian
/// float32 `.f32` (shape taken from the manifest), plus its manifest JSON.
LabeledSignal load_signal(const std::string& data_path, const std::string& manifest_path);

void save_signal_csv(const LabeledSignal& sig, const std::string& path);
void save_signal_f32(const LabeledSignal& sig, const std::string& path);
/// extra_json: serialized JSON object merged into the manifest root
/// (e.g. {"seed": 7}); empty string for none.
void save_manifest(const LabeledSignal& sig, const std::string& path,
                   const std::string& extra_json = "");

// ---- standardization -----------------------------------------------------

/// Per-channel mean/std over the samples of the named segments only.
/// A channel that is constant over the training samples (min == max) throws
/// DataError("ConstantChannel: ...").
ChannelStats fit_standardizer(const LabeledSignal& sig,
                              const std::vector<std::string>& training_segment_ids);

/// Pooled fit across several recordings; segment ids are looked up in every
/// signal and must all be found somewhere.
ChannelStats fit_standardizer(const std::vector<const LabeledSignal*>& signals,
                              const std::vector<std::string>& training_segment_ids);

LabeledSignal apply_standardizer(const LabeledSignal& sig, const ChannelStats& stats);

// ---- windowing -----------------------------------------------------------

/// Cut label-pure sliding windows from every segment long enough to hold
/// one window. Windows never cross segment boundaries. Per-segment count is
/// floor((L - N) / stride) + 1. Shares the signal's storage (no copy).
WindowSet segment_windows(const std::shared_ptr<const LabeledSignal>& sig,
                          const WindowingPlan& plan, const ChannelSelection& selection);

/// Copying convenience overload.
WindowSet segment_windows(const LabeledSignal& sig, const WindowingPlan& plan,
                          const ChannelSelection& selection);

/// Concatenate window sets from several recordings. All parts must agree on
/// N, nu and the selected channel names.
WindowSet merge_window_sets(const std::vector<WindowSet>& parts);

/// Re-project an existing window set onto a (sub)selection of its channels.
WindowSet select_channels(const WindowSet& ws, const ChannelSelection& selection);

// ---- gaussian subsampling ------------------------------------------------

/// Smooth with a truncated normalized Gaussian (radius ceil(3*sigma),
/// reflect padding) and keep every step-th sample starting at index 0.
std::vector<double> gaussian_subsample(const std::vector<double>& x, const GaussianPlan& plan);

/// Whole-signal variant. Segment boundaries are mapped to the subsampled
/// axis; note the smoothing window crosses segment boundaries here, so the
/// evaluation pipeline subsamples windows instead.
LabeledSignal gaussian_subsample(const LabeledSignal& sig, const GaussianPlan& plan);

/// Per-window variant (reflect padding inside each window, label purity
/// preserved). Output windows are materialized with length floor(N / step).
WindowSet gaussian_subsample(const WindowSet& ws, const GaussianPlan& plan);

} // namespace vibench
