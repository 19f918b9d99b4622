#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include "vibench/bundle.hpp"
#include "vibench/errors.hpp"
#include "vibench/io_util.hpp"
#include "vibench/rng.hpp"
#include "vibench/statlab.hpp"
#include "vibench/synth.hpp"

#include <json.hpp>

namespace vibench::cli {

using nlohmann::json;
using nlohmann::ordered_json;
namespace io = ioutil;
namespace fs = std::filesystem;

namespace {

std::string provenance(const std::string& what, const std::string& hash, std::uint64_t seed) {
    return "# vibench " + what + " config_hash=" + (hash.empty() ? "none" : hash) +
           " master_seed=" + std::to_string(seed) + "\n";
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    const fs::path dir = cfg.get_string("out");
    fs::create_directories(dir);
    return (dir / name).string();
}

struct Dataset {
    std::vector<std::shared_ptr<const LabeledSignal>> signals;
    DatasetIndex index;
    std::vector<Segment> segments; // declaration order across recordings
    std::vector<std::string> channel_names;
    double nu = 0.0;
};

Dataset load_data(const RunConfig& cfg) {
    const std::string path = cfg.get_string("data");
    if (path.empty()) throw ConfigError("BadConfig: 'data' must name a dataset index JSON");
    Dataset d;
    d.index = read_dataset_index(path);
    d.signals = load_dataset(path);
    if (d.signals.empty()) throw DataError("Empty: dataset " + path + " lists no recordings");
    d.channel_names = d.signals.front()->channel_names;
    d.nu = d.signals.front()->sampling_rate_hz;
    for (const auto& sig : d.signals) {
        if (sig->sampling_rate_hz != d.nu)
            throw DataError("RateMismatch: recordings disagree on the sampling rate");
        if (sig->channel_names != d.channel_names)
            throw DataError("ShapeMismatch: recordings disagree on channel names");
        for (const Segment& s : sig->segments) d.segments.push_back(s);
    }
    return d;
}

std::vector<std::string> normal_segment_ids(const Dataset& d) {
    std::vector<std::string> ids;
    for (const Segment& s : d.segments)
        if (s.label == Label::Normal) ids.push_back(s.id);
    return ids;
}

std::vector<FoldSpec> load_folds(const RunConfig& cfg, const Dataset& d) {
    std::string path = cfg.get_string("folds");
    if (path.empty()) path = d.index.fold_spec_path;
    if (path.empty())
        throw ConfigError("BadConfig: no fold spec; set 'folds' or add one to the dataset index");
    return load_fold_spec(path);
}

/// Training segment ids: fold 0 = every normal segment, otherwise the train
/// side of that cross-validation fold.
std::vector<std::string> training_ids(const RunConfig& cfg, const Dataset& d) {
    const std::int64_t fold = cfg.get_int("fold");
    if (fold == 0) {
        auto ids = normal_segment_ids(d);
        if (ids.empty()) throw DataError("EmptyTrain: dataset has no normal segments");
        return ids;
    }
    for (const FoldSplit& split : build_folds(d.segments, load_folds(cfg, d)))
        if (split.fold == fold) return split.train_segment_ids;
    throw ConfigError("BadConfig: fold " + std::to_string(fold) + " not in the fold spec");
}

std::vector<std::shared_ptr<const LabeledSignal>> standardize_all(const Dataset& d,
                                                                  const ChannelStats& stats) {
    std::vector<std::shared_ptr<const LabeledSignal>> out;
    for (const auto& sig : d.signals)
        out.push_back(std::make_shared<const LabeledSignal>(apply_standardizer(*sig, stats)));
    return out;
}

WindowSet cut_windows(const std::vector<std::shared_ptr<const LabeledSignal>>& signals,
                      const WindowingPlan& plan, const ChannelSelection& selection) {
    std::vector<WindowSet> parts;
    for (const auto& sig : signals) parts.push_back(segment_windows(sig, plan, selection));
    return merge_window_sets(parts);
}

FeatureMatrix path_matrix(const WindowSet& ws, const FeaturePath& path) {
    if (path.kind == FeaturePath::Kind::Raw)
        return window_matrix(gaussian_subsample(ws, GaussianPlan{path.step, 0.0}));
    return extract_matrix(ws, path.set);
}

/// The single-cell geometry shared by featurize, train and score.
struct Cell {
    WindowingPlan plan;
    ChannelSelection selection;
    FeaturePath path;
    std::string selection_label;
    std::string path_label;
};

Cell cell_of(const RunConfig& cfg, const Dataset& d) {
    Cell c;
    c.plan = {cfg.get_double("tau"), cfg.get_double("overlap"), d.nu};
    c.plan.validate();
    c.selection_label = cfg.get_string("selection");
    c.selection = parse_selection(c.selection_label, d.channel_names);
    c.path_label = cfg.get_string("path");
    c.path = parse_feature_path(c.path_label);
    return c;
}

json channel_stats_json(const ChannelStats& s) {
    return {{"mean", s.mean}, {"std_dev", s.std_dev}};
}

ChannelStats channel_stats_from(const json& j) {
    ChannelStats s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std_dev = j.at("std_dev").get<std::vector<double>>();
    return s;
}

/// Rows whose segment is in ids, in row order.
std::vector<std::size_t> rows_in(const FeatureMatrix& m, const std::vector<std::string>& ids) {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < m.rows.rows; ++r) {
        const std::string& seg = m.segment_ids[m.segment[r]];
        for (const std::string& id : ids)
            if (seg == id) {
                out.push_back(r);
                break;
            }
    }
    return out;
}

Matrix gather_rows(const FeatureMatrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.rows.cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c < m.rows.cols; ++c) out.at(i, c) = m.rows.at(rows[i], c);
    return out;
}

/// segment_id,label,window prefix column writer; window counts per segment.
class WindowColumnWriter {
public:
    explicit WindowColumnWriter(const FeatureMatrix& m) : m_(m) {}
    std::string prefix(std::size_t row) {
        const std::string& seg = m_.segment_ids[m_.segment[row]];
        return seg + ',' + label_name(m_.labels[row]) + ',' + std::to_string(counts_[seg]++);
    }

private:
    const FeatureMatrix& m_;
    std::map<std::string, std::size_t> counts_;
};

} // namespace

void cmd_synth(const RunConfig& cfg) {
    const std::uint64_t seed = cfg.get_u64("seed");
    const std::string dir = cfg.get_string("out");
    BenchmarkSuite suite = generate_benchmark_suite(seed, dir, cfg.hash());
    std::cout << "wrote " << suite.data_paths.size() << " recordings, " << suite.fold_spec_path
              << " and " << suite.dataset_path << "\n";
}

void cmd_window(const RunConfig& cfg) {
    const Dataset d = load_data(cfg);
    std::string csv = provenance("windows", cfg.hash(), cfg.get_u64("seed"));
    csv += "tau_s,overlap,segment_id,label,window_length,stride,n_windows\n";

    for (double tau : cfg.get_double_list("taus")) {
        for (double o : cfg.get_double_list("overlaps")) {
            const WindowingPlan plan{tau, o, d.nu};
            plan.validate();
            std::map<std::string, std::int64_t> counts;
            for (const auto& sig : d.signals) {
                try {
                    const WindowSet ws = segment_windows(sig, plan, ChannelSelection::all());
                    for (std::size_t w = 0; w < ws.size(); ++w) ++counts[ws.segment_id(w)];
                } catch (const DataError& e) {
                    // recordings too short for this plan contribute zero counts
                    if (std::string(e.what()).rfind("WindowTooLong", 0) != 0) throw;
                }
            }
            for (const Segment& seg : d.segments) {
                const auto it = counts.find(seg.id);
                csv += io::format_double(tau) + ',' + io::format_double(o) + ',' + seg.id + ',' +
                       label_name(seg.label) + ',' + std::to_string(plan.window_length()) + ',' +
                       std::to_string(plan.stride()) + ',' +
                       std::to_string(it == counts.end() ? 0 : it->second) + '\n';
            }
        }
    }
    const std::string path = out_path(cfg, "windows.csv");
    io::write_file(path, csv);
    std::cout << "wrote " << path << "\n";
}

void cmd_featurize(const RunConfig& cfg) {
    const Dataset d = load_data(cfg);
    const Cell cell = cell_of(cfg, d);

    const auto train_ids = normal_segment_ids(d);
    if (train_ids.empty()) throw DataError("EmptyTrain: dataset has no normal segments");
    std::vector<const LabeledSignal*> ptrs;
    for (const auto& sig : d.signals) ptrs.push_back(sig.get());
    const ChannelStats stats = fit_standardizer(ptrs, train_ids);

    const WindowSet ws = cut_windows(standardize_all(d, stats), cell.plan, cell.selection);
    const FeatureMatrix m = path_matrix(ws, cell.path);

    std::string csv = provenance("features", cfg.hash(), cfg.get_u64("seed"));
    csv += "segment_id,label,window";
    for (const std::string& col : m.columns) csv += ',' + col;
    csv += '\n';
    WindowColumnWriter cols(m);
    for (std::size_t r = 0; r < m.rows.rows; ++r) {
        csv += cols.prefix(r);
        for (std::size_t c = 0; c < m.rows.cols; ++c)
            csv += ',' + io::format_double(m.rows.at(r, c));
        csv += '\n';
    }
    const std::string path = out_path(cfg, "features.csv");
    io::write_file(path, csv);
    std::cout << "wrote " << path << " (" << m.rows.rows << " windows x " << m.rows.cols
              << " columns)\n";
}

void cmd_train(const RunConfig& cfg) {
    const Dataset d = load_data(cfg);
    const Cell cell = cell_of(cfg, d);
    const ModelKind kind = parse_model_kind(cfg.get_string("model"));
    const std::uint64_t seed = cfg.get_u64("seed");

    const auto train_ids = training_ids(cfg, d);
    std::vector<const LabeledSignal*> ptrs;
    for (const auto& sig : d.signals) ptrs.push_back(sig.get());
    const ChannelStats stats = fit_standardizer(ptrs, train_ids);

    const WindowSet ws = cut_windows(standardize_all(d, stats), cell.plan, cell.selection);
    FeatureMatrix m = path_matrix(ws, cell.path);

    const auto train_rows = rows_in(m, train_ids);
    if (train_rows.empty()) throw DataError("EmptyTrain: no training windows at this geometry");
    FeatureNormStats norm;
    if (cell.path.kind == FeaturePath::Kind::Features) {
        norm = fit_feature_norm(m, train_rows);
        m = apply_feature_norm(std::move(m), norm);
    }

    const AnomalyModel model = train_model(kind, gather_rows(m, train_rows),
                                           detector_settings(cfg), seed);

    const std::string stem = model_kind_name(kind);
    const std::string norm_name = stem + ".norm.json";
    ordered_json nj;
    nj["format"] = "vibench-norm";
    nj["config_hash"] = cfg.hash();
    nj["master_seed"] = seed;
    nj["tau_s"] = cell.plan.tau_s;
    nj["overlap"] = cell.plan.overlap;
    nj["selection"] = cell.selection_label;
    nj["path"] = cell.path_label;
    nj["train_segments"] = train_ids;
    nj["channel_stats"] = channel_stats_json(stats);
    nj["feature_norm"] = {{"mean", norm.mean},
                          {"std_dev", norm.std_dev},
                          {"constant", norm.constant}};
    const std::string norm_path = out_path(cfg, norm_name);
    io::write_file(norm_path, nj.dump(2) + "\n");

    const std::string model_path = out_path(cfg, stem + ".model");
    save_model(model, model_path, norm_name);
    std::cout << "trained " << stem << " on " << train_rows.size() << " windows x "
              << model.train_dim << " columns\nwrote " << model_path << " and " << norm_path
              << "\n";
}

void cmd_score(const RunConfig& cfg) {
    const std::string model_path = cfg.get_string("model_file");
    if (model_path.empty()) throw ConfigError("BadConfig: 'model_file' must name a model bundle");
    const LoadedModel loaded = load_model(model_path);

    std::string norm_path = cfg.get_string("norm_file");
    if (norm_path.empty()) {
        if (loaded.norm_stats_ref.empty())
            throw ConfigError("BadConfig: bundle names no norm stats; set 'norm_file'");
        norm_path = (fs::path(model_path).parent_path() / loaded.norm_stats_ref).string();
    }
    json nj;
    try {
        nj = json::parse(io::read_file(norm_path));
    } catch (const json::exception& e) {
        throw DataError("ParseError: norm stats " + norm_path + ": " + e.what());
    }

    const Dataset d = load_data(cfg);
    try {
        const WindowingPlan plan{nj.at("tau_s").get<double>(), nj.at("overlap").get<double>(),
                                 d.nu};
        plan.validate();
        const ChannelSelection selection =
            parse_selection(nj.at("selection").get<std::string>(), d.channel_names);
        const FeaturePath path = parse_feature_path(nj.at("path").get<std::string>());
        const ChannelStats stats = channel_stats_from(nj.at("channel_stats"));

        const WindowSet ws = cut_windows(standardize_all(d, stats), plan, selection);
        FeatureMatrix m = path_matrix(ws, path);
        if (path.kind == FeaturePath::Kind::Features) {
            FeatureNormStats norm;
            norm.mean = nj.at("feature_norm").at("mean").get<std::vector<double>>();
            norm.std_dev = nj.at("feature_norm").at("std_dev").get<std::vector<double>>();
            norm.constant =
                nj.at("feature_norm").at("constant").get<std::vector<std::uint8_t>>();
            if (!norm.empty()) m = apply_feature_norm(std::move(m), norm);
        }

        const std::vector<double> scores = score(loaded.model, m.rows);
        // scoring is deterministic; the bundle's training seed is the one that matters
        std::string csv = provenance("scores", cfg.hash(), loaded.model.seed);
        csv += "segment_id,label,window,score\n";
        WindowColumnWriter cols(m);
        for (std::size_t r = 0; r < scores.size(); ++r)
            csv += cols.prefix(r) + ',' + io::format_double(scores[r]) + '\n';
        const std::string path_out = out_path(cfg, "scores.csv");
        io::write_file(path_out, csv);
        std::cout << "wrote " << path_out << " (" << scores.size() << " windows)\n";
    } catch (const json::exception& e) {
        throw DataError("ParseError: norm stats " + norm_path + ": " + e.what());
    }
}

void cmd_eval(const RunConfig& cfg, bool dry_run) {
    const Dataset d = load_data(cfg);
    const std::vector<FoldSpec> folds = load_folds(cfg, d);
    SweepConfig sweep = sweep_config(cfg, d.channel_names);

    if (dry_run) {
        build_folds(d.segments, folds); // coverage validation
        for (const GridPoint& g : sweep.grid) {
            const WindowingPlan plan{g.tau_s, g.overlap, d.nu};
            plan.validate();
        }
        const auto& allowed = threshold_percentiles();
        for (double k : sweep.thresholds)
            if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
                throw ConfigError("BadPercentile: threshold " + io::format_double(k) +
                                  " is not one of the supported percentiles");
        std::cout << "config ok: " << sweep_cell_count(sweep, folds.size())
                  << " sweep cells (config_hash=" << cfg.hash() << ")\n";
        return;
    }

    EvalReport report = run_sweep(d.signals, folds, sweep);
    report.config_hash = cfg.hash();

    const std::string report_path = out_path(cfg, "report.csv");
    const std::string summary_path = out_path(cfg, "summary.json");
    save_report_csv(report, report_path);
    save_summary_json(report, summary_path);

    std::size_t failed = 0;
    for (const MetricRow& r : report.rows)
        if (!r.error_tag.empty()) ++failed;
    std::cout << "wrote " << report_path << " and " << summary_path << " (" << report.rows.size()
              << " rows, " << failed << " failed cells)\n";
}

namespace {

/// Per-run metric population for one selection group. Each error-free fold run
/// contributes one AUC value (identical across threshold rows, so deduplicated
/// by fold cell); accuracy differs per threshold, so every row counts.
std::vector<double> metric_population(const EvalReport& report, const std::string& selection,
                                      bool use_auc) {
    std::vector<double> out;
    std::set<std::string> seen;
    for (const MetricRow& r : report.rows) {
        if (r.selection != selection || !r.error_tag.empty()) continue;
        const double v = use_auc ? r.auc_roc : r.avg_accuracy;
        if (!std::isfinite(v)) continue;
        if (use_auc) {
            std::string key = r.model + '|' + r.path + '|' + ioutil::format_double(r.tau_s) + '|' +
                              ioutil::format_double(r.overlap) + '|' + std::to_string(r.fold);
            if (!seen.insert(std::move(key)).second) continue;
        }
        out.push_back(v);
    }
    return out;
}

} // namespace

void cmd_compare(const RunConfig& cfg) {
    const std::string report_path = cfg.get_string("report");
    if (report_path.empty()) throw ConfigError("BadConfig: 'report' must name a report.csv");
    const std::string group_a = cfg.get_string("group_a");
    const std::string group_b = cfg.get_string("group_b");
    if (group_a.empty() || group_b.empty())
        throw ConfigError("BadConfig: 'group_a' and 'group_b' name the selections to compare");
    const std::string metric = cfg.get_string("metric");
    if (metric != "auc" && metric != "acc")
        throw ConfigError("BadConfig: 'metric' must be auc or acc");

    const EvalReport report = load_report_csv(report_path);
    const auto a = metric_population(report, group_a, metric == "auc");
    const auto b = metric_population(report, group_b, metric == "auc");
    if (a.empty())
        throw DataError("Empty: no error-free configurations for selection '" + group_a + "'");
    if (b.empty())
        throw DataError("Empty: no error-free configurations for selection '" + group_b + "'");

    const ComparisonRow row = compare_groups(group_a, a, group_b, b);
    const std::string path = out_path(cfg, "comparison.csv");
    save_comparisons({row}, path,
                     provenance("comparison", report.config_hash, report.master_seed));
    std::cout << format_comparison_table({row}) << "wrote " << path << "\n";
}

void cmd_report(const RunConfig& cfg) {
    const std::string report_path = cfg.get_string("report");
    if (report_path.empty()) throw ConfigError("BadConfig: 'report' must name a report.csv");
    const EvalReport report = load_report_csv(report_path);

    std::string csv = provenance("aggregates", report.config_hash, report.master_seed);
    csv += "model,selection,path,tau_s,overlap,max_auc,mean_auc,max_acc,mean_acc,n_folds,"
           "n_failed\n";
    for (const AggregateRow& a : report.aggregates) {
        csv += a.model + ',' + a.selection + ',' + a.path + ',' + io::format_double(a.tau_s) +
               ',' + io::format_double(a.overlap) + ',' + io::format_double(a.max_auc) + ',' +
               io::format_double(a.mean_auc) + ',' + io::format_double(a.max_acc) + ',' +
               io::format_double(a.mean_acc) + ',' + std::to_string(a.n_folds) + ',' +
               std::to_string(a.n_failed) + '\n';
    }
    const std::string path = out_path(cfg, "aggregates.csv");
    io::write_file(path, csv);

    char line[160];
    std::snprintf(line, sizeof(line), "%-9s %-17s %-6s %6s %5s %9s %9s %9s %9s\n", "model",
                  "selection", "path", "tau", "o", "max_auc", "mean_auc", "max_acc", "mean_acc");
    std::cout << line;
    for (const AggregateRow& a : report.aggregates) {
        std::snprintf(line, sizeof(line), "%-9s %-17s %-6s %6g %5g %9.4f %9.4f %9.4f %9.4f\n",
                      a.model.c_str(), a.selection.c_str(), a.path.c_str(), a.tau_s, a.overlap,
                      a.max_auc, a.mean_auc, a.max_acc, a.mean_acc);
        std::cout << line;
    }
    std::cout << "wrote " << path << "\n";
}

} // namespace vibench::cli
