#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vibench/errors.hpp"
#include "vibench/matrix.hpp"
#include "vibench/signal.hpp"

namespace vibench {

/// One-sided spectrum of a real window: bins k = 0..floor(N/2),
/// f_k = k * nu / N.
struct PowerSpectrum {
    std::vector<double> freqs;
    std::vector<double> magnitude; // |X(f_k)|
    std::vector<double> power;     // |X(f_k)|^2
    double bin_width = 0.0;        // nu / N
};

PowerSpectrum periodogram(const std::vector<double>& x, double nu);

inline constexpr std::size_t kStatisticalFeatureCount = 13;
inline constexpr std::size_t kSpectralFeatureCount = 15;

/// Names in output order.
const std::vector<std::string>& statistical_feature_names();
const std::vector<std::string>& spectral_feature_names();

struct FeatureVector {
    std::vector<double> values;
    /// Set when a zero-variance moment forced kurtosis/skewness to 0
    /// instead of NaN.
    bool degenerate_moment = false;
};

/// The 13 statistical features of a window channel, in name order. N >= 2.
FeatureVector statistical_features(const std::vector<double>& x);

/// The 15 spectral features of a window channel, in name order. N >= 4.
/// A constant (or all-zero) input has no power outside DC and throws
/// NumericError("ZeroSpectrum: ...").
FeatureVector spectral_features(const std::vector<double>& x, double nu);

enum class FeatureSet { Statistical, Spectral, Both };
const char* feature_set_name(FeatureSet set);

struct FeatureNormStats {
    std::vector<double> mean;
    std::vector<double> std_dev;          // population convention
    std::vector<std::uint8_t> constant;   // constant train columns map to 0
    bool empty() const { return mean.empty(); }
};

/// Per-window feature rows with labels and provenance.
struct FeatureMatrix {
    Matrix rows;
    std::vector<Label> labels;
    std::vector<std::string> columns;        // "{channel}.{feature}"
    std::vector<std::uint32_t> segment;      // per row, index into segment_ids
    std::vector<std::string> segment_ids;
    std::size_t degenerate_windows = 0;      // rows that hit the moment fallback
    FeatureNormStats norm;                   // filled once a norm is applied
};

/// One row per window; per-channel feature blocks concatenated in channel
/// order (Both = 13 statistical then 15 spectral per channel).
FeatureMatrix extract_matrix(const WindowSet& ws, FeatureSet set);

/// Raw path: flatten each window to a row of N*C' values (time-major),
/// columns named "{channel}.t{i}".
FeatureMatrix window_matrix(const WindowSet& ws);

/// Column subset of a Both matrix (per-channel block slicing).
FeatureMatrix slice_feature_set(const FeatureMatrix& both, FeatureSet subset);

/// Per-column mean/std over the given training rows only; a column constant
/// over them (min == max) is flagged and later mapped to 0.
FeatureNormStats fit_feature_norm(const FeatureMatrix& m, const std::vector<std::size_t>& training_rows);
FeatureNormStats fit_feature_norm(const FeatureMatrix& m); // all rows

FeatureMatrix apply_feature_norm(FeatureMatrix m, const FeatureNormStats& stats);

// ---- persistence -----------------------------------------------------------

/// Write rows as CSV (header = column names) or `.f32`, plus a JSON sidecar
/// "<path>.meta.json" holding columns, labels, segments and norm stats.
/// extra_json: serialized JSON object merged into the sidecar root.
void save_features(const FeatureMatrix& m, const std::string& path,
                   const std::string& extra_json = "");
FeatureMatrix load_features(const std::string& path);

} // namespace vibench
