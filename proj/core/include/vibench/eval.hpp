#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vibench/detectors.hpp"
#include "vibench/features.hpp"
#include "vibench/signal.hpp"

namespace vibench {

/// Designated test normals of one cross-validation fold. Across a whole
/// spec every normal segment must be designated exactly once; abnormal
/// segments are test-only in every fold and never listed here.
struct FoldSpec {
    int fold = 0;
    std::vector<std::string> test_normal_segment_ids;
};

struct FoldSplit {
    int fold = 0;
    std::vector<std::string> train_segment_ids; // the remaining normals
    std::vector<std::string> test_segment_ids;  // designated normals + all abnormals
};

/// Validates coverage and expands the spec into concrete splits.
/// Fold ids must be exactly 1..spec.size().
std::vector<FoldSplit> build_folds(const std::vector<Segment>& segments,
                                   const std::vector<FoldSpec>& spec);

void save_fold_spec(const std::vector<FoldSpec>& spec, const std::string& path);
std::vector<FoldSpec> load_fold_spec(const std::string& path);

/// Rank statistic: P(anomalous window outscores a normal one), ties half.
/// Computed by midranks in O(n log n); equals the all-pairs count exactly.
double auc_roc(const std::vector<double>& scores, const std::vector<Label>& labels);

/// Mean of the two per-class recalls after thresholding at rule.zeta.
double average_accuracy(const std::vector<double>& scores, const std::vector<Label>& labels,
                        const ThresholdRule& rule);

/// Detector input representation: engineered features of each window, or
/// the Gaussian-subsampled raw window itself.
struct FeaturePath {
    enum class Kind { Features, Raw };
    Kind kind = Kind::Features;
    FeatureSet set = FeatureSet::Statistical; // Features only
    std::int64_t step = 8;                    // Raw only: subsampling step

    static FeaturePath features(FeatureSet s) { return {Kind::Features, s, 0}; }
    static FeaturePath raw(std::int64_t step) { return {Kind::Raw, FeatureSet::Statistical, step}; }
};

/// "stat" | "spec" | "both" | "raw<step>"
std::string feature_path_name(const FeaturePath& path);
FeaturePath parse_feature_path(const std::string& name);

/// "all" | "above_oil" | a channel name.
std::string selection_name(const ChannelSelection& sel,
                           const std::vector<std::string>& channel_names);
ChannelSelection parse_selection(const std::string& name,
                                 const std::vector<std::string>& channel_names);

struct GridPoint {
    double tau_s = 1.0;
    double overlap = 0.0;
};

/// One sweep cell result. A failed cell keeps its coordinates, carries the
/// failure tag in error_tag and NaN metrics.
struct MetricRow {
    std::string model;
    std::string selection;
    std::string path;
    double tau_s = 0.0;
    double overlap = 0.0;
    int fold = 0;
    double threshold_k = 0.0;
    double auc_roc = 0.0;
    double avg_accuracy = 0.0;
    std::int64_t n_train_windows = 0;
    std::int64_t n_test_windows = 0;
    std::uint64_t seed = 0;
    double wall_ms = 0.0;
    std::string error_tag; // empty = success
};

/// Per-configuration reduction across folds (and thresholds, for accuracy).
struct AggregateRow {
    std::string model;
    std::string selection;
    std::string path;
    double tau_s = 0.0;
    double overlap = 0.0;
    double max_auc = 0.0;
    double mean_auc = 0.0;
    double max_acc = 0.0;
    double mean_acc = 0.0;
    int n_folds = 0;  // distinct folds that produced metrics
    int n_failed = 0; // rows skipped because of error tags
};

/// Reduce one coordinate group. All rows must share every coordinate except
/// fold and threshold_k; rows with error tags are skipped and counted.
AggregateRow aggregate(const std::vector<MetricRow>& rows);

/// Partition rows by coordinates and reduce each group.
std::vector<AggregateRow> aggregate_all(const std::vector<MetricRow>& rows);

struct SweepConfig {
    std::vector<GridPoint> grid;
    std::vector<ModelKind> models;
    std::vector<ChannelSelection> selections;
    std::vector<FeaturePath> paths;
    std::vector<double> thresholds;
    DetectorSettings detectors;
    std::uint64_t master_seed = 0;
    int workers = 0; // <= 0: VIBENCH_WORKERS env var, else 1
    bool record_wall_ms = false;
};

struct EvalReport {
    std::vector<MetricRow> rows;
    std::vector<AggregateRow> aggregates;
    std::string config_hash; // provenance stamp, set by the caller
    std::uint64_t master_seed = 0;
};

std::size_t sweep_cell_count(const SweepConfig& config, std::size_t n_folds);

/// Full evaluation: per fold, fit the standardizer on that fold's training
/// segments, window, featurize (feature norms also train-only), train and
/// score every model, threshold at every k. One row per
/// model x selection x path x grid point x fold x k; cell failures are
/// recorded in error_tag, never thrown.
EvalReport run_sweep(const std::vector<std::shared_ptr<const LabeledSignal>>& signals,
                     const std::vector<FoldSpec>& folds, const SweepConfig& config);

/// CSV with a `# vibench report ...` provenance line, a header and one line
/// per row, sorted by coordinates.
void save_report_csv(const EvalReport& report, const std::string& path);
EvalReport load_report_csv(const std::string& path);

/// Aggregates nested model -> selection -> path -> "tau=..,o=..".
void save_summary_json(const EvalReport& report, const std::string& path);

} // namespace vibench
