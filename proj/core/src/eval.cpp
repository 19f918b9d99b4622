#include "vibench/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <set>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include <json.hpp>

#include "vibench/io_util.hpp"
#include "vibench/rng.hpp"

namespace vibench {

using nlohmann::json;
namespace io = ioutil;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_scores_labels(const std::vector<double>& scores, const std::vector<Label>& labels) {
    if (scores.size() != labels.size()) {
        throw DataError("ShapeMismatch: " + std::to_string(scores.size()) + " scores vs " +
                        std::to_string(labels.size()) + " labels");
    }
    if (scores.empty()) throw DataError("EmptyScores: nothing to evaluate");
    for (double s : scores) {
        if (!std::isfinite(s)) throw NumericError("NonFinite: score is not finite");
    }
    bool has_normal = false, has_abnormal = false;
    for (Label l : labels) (l == Label::Normal ? has_normal : has_abnormal) = true;
    if (!has_normal || !has_abnormal) {
        throw DataError("SingleClass: evaluation needs both normal and abnormal windows");
    }
}

std::string error_tag_of(const std::exception& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    return colon == std::string::npos ? msg : msg.substr(0, colon);
}

bool same_coordinates(const MetricRow& a, const MetricRow& b) {
    return a.model == b.model && a.selection == b.selection && a.path == b.path &&
           a.tau_s == b.tau_s && a.overlap == b.overlap;
}

bool row_before(const MetricRow& a, const MetricRow& b) {
    return std::tie(a.model, a.selection, a.path, a.tau_s, a.overlap, a.fold, a.threshold_k) <
           std::tie(b.model, b.selection, b.path, b.tau_s, b.overlap, b.fold, b.threshold_k);
}

std::uint64_t parse_u64(std::string_view s, const char* context) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DataError(std::string("ParseError: bad integer '") + std::string(s) + "' in " +
                        context);
    }
    return v;
}

} // namespace

// ---- folds -----------------------------------------------------------------

std::vector<FoldSplit> build_folds(const std::vector<Segment>& segments,
                                   const std::vector<FoldSpec>& spec) {
    if (spec.empty()) throw ConfigError("BadConfig: fold spec is empty");
    {
        std::vector<int> ids;
        ids.reserve(spec.size());
        for (const auto& f : spec) ids.push_back(f.fold);
        std::sort(ids.begin(), ids.end());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] != static_cast<int>(i + 1)) {
                throw ConfigError("BadConfig: fold ids must be exactly 1.." +
                                  std::to_string(spec.size()));
            }
        }
    }

    std::unordered_map<std::string, Label> by_id;
    std::size_t n_abnormal = 0;
    for (const auto& s : segments) {
        if (!by_id.emplace(s.id, s.label).second) {
            throw DataError("OverlapViolation: duplicate segment id '" + s.id +
                            "' would sit in both train and test sets");
        }
        if (s.label == Label::Abnormal) ++n_abnormal;
    }
    if (n_abnormal == 0) {
        throw DataError("CoverageGap: no abnormal segments; every test set needs at least one");
    }

    std::unordered_map<std::string, int> tested_in;
    for (const auto& f : spec) {
        for (const auto& id : f.test_normal_segment_ids) {
            const auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw DataError("MissingSegment: fold " + std::to_string(f.fold) +
                                " names unknown segment '" + id + "'");
            }
            if (it->second == Label::Abnormal) {
                throw DataError("CoverageGap: abnormal segment '" + id +
                                "' listed as a test normal in fold " + std::to_string(f.fold));
            }
            const auto [pos, inserted] = tested_in.emplace(id, f.fold);
            if (!inserted) {
                throw DataError("CoverageGap: normal segment '" + id + "' designated in folds " +
                                std::to_string(pos->second) + " and " + std::to_string(f.fold));
            }
        }
    }
    for (const auto& s : segments) {
        if (s.label == Label::Normal && tested_in.find(s.id) == tested_in.end()) {
            throw DataError("CoverageGap: normal segment '" + s.id +
                            "' is never designated as test data");
        }
    }

    std::vector<FoldSplit> splits(spec.size());
    for (const auto& f : spec) {
        auto& split = splits[static_cast<std::size_t>(f.fold - 1)];
        split.fold = f.fold;
        for (const auto& s : segments) {
            const bool designated = s.label == Label::Normal && tested_in.at(s.id) == f.fold;
            if (s.label == Label::Abnormal || designated) {
                split.test_segment_ids.push_back(s.id);
            } else {
                split.train_segment_ids.push_back(s.id);
            }
        }
        if (split.train_segment_ids.empty()) {
            throw DataError("EmptyTrain: fold " + std::to_string(f.fold) +
                            " designates every normal segment as test data");
        }
    }
    return splits;
}

void save_fold_spec(const std::vector<FoldSpec>& spec, const std::string& path) {
    json folds = json::array();
    for (const auto& f : spec) {
        folds.push_back({{"fold", f.fold}, {"test_normal_segment_ids", f.test_normal_segment_ids}});
    }
    io::write_file(path, json{{"folds", folds}}.dump(2) + "\n");
}

std::vector<FoldSpec> load_fold_spec(const std::string& path) {
    std::vector<FoldSpec> spec;
    try {
        const json j = json::parse(io::read_file(path));
        for (const auto& f : j.at("folds")) {
            FoldSpec fs;
            fs.fold = f.at("fold").get<int>();
            fs.test_normal_segment_ids =
                f.at("test_normal_segment_ids").get<std::vector<std::string>>();
            spec.push_back(std::move(fs));
        }
    } catch (const json::exception& e) {
        throw DataError("ParseError: fold spec " + path + ": " + e.what());
    }
    return spec;
}

// ---- metrics ---------------------------------------------------------------

double auc_roc(const std::vector<double>& scores, const std::vector<Label>& labels) {
    check_scores_labels(scores, labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // midranks keep tie contributions at exact multiples of 1/2
    double rank_sum_abnormal = 0.0;
    std::size_t n_abnormal = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] == Label::Abnormal) {
                rank_sum_abnormal += midrank;
                ++n_abnormal;
            }
        }
        i = j;
    }
    const double npos = static_cast<double>(n_abnormal);
    const double nneg = static_cast<double>(n - n_abnormal);
    return (rank_sum_abnormal - npos * (npos + 1.0) / 2.0) / (npos * nneg);
}

double average_accuracy(const std::vector<double>& scores, const std::vector<Label>& labels,
                        const ThresholdRule& rule) {
    check_scores_labels(scores, labels);
    const auto flags = classify(scores, rule);
    std::size_t caught = 0, passed = 0, n_abnormal = 0, n_normal = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] == Label::Abnormal) {
            ++n_abnormal;
            caught += flags[i];
        } else {
            ++n_normal;
            passed += flags[i] ? 0u : 1u;
        }
    }
    return 0.5 * (static_cast<double>(caught) / static_cast<double>(n_abnormal) +
                  static_cast<double>(passed) / static_cast<double>(n_normal));
}

// ---- coordinate names --------------------------------------------------------

std::string feature_path_name(const FeaturePath& path) {
    if (path.kind == FeaturePath::Kind::Raw) return "raw" + std::to_string(path.step);
    return feature_set_name(path.set);
}

FeaturePath parse_feature_path(const std::string& name) {
    if (name.rfind("raw", 0) == 0) {
        const std::string digits = name.substr(3);
        std::int64_t step = 0;
        const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), step);
        if (digits.empty() || res.ec != std::errc() ||
            res.ptr != digits.data() + digits.size() || step < 1) {
            throw ConfigError("BadConfig: raw path needs a positive step, e.g. raw8; got '" +
                              name + "'");
        }
        return FeaturePath::raw(step);
    }
    if (name == "stat") return FeaturePath::features(FeatureSet::Statistical);
    if (name == "spec") return FeaturePath::features(FeatureSet::Spectral);
    if (name == "both") return FeaturePath::features(FeatureSet::Both);
    throw ConfigError("BadConfig: unknown feature path '" + name +
                      "' (expected stat, spec, both or raw<step>)");
}

std::string selection_name(const ChannelSelection& sel,
                           const std::vector<std::string>& channel_names) {
    switch (sel.kind) {
        case ChannelSelection::Kind::All: return "all";
        case ChannelSelection::Kind::AboveOil: return "above_oil";
        case ChannelSelection::Kind::Single: break;
    }
    if (sel.index < 0 || static_cast<std::size_t>(sel.index) >= channel_names.size()) {
        throw ConfigError("BadSelection: channel index " + std::to_string(sel.index) +
                          " out of range for " + std::to_string(channel_names.size()) +
                          " channels");
    }
    return channel_names[static_cast<std::size_t>(sel.index)];
}

ChannelSelection parse_selection(const std::string& name,
                                 const std::vector<std::string>& channel_names) {
    if (name == "all") return ChannelSelection::all();
    if (name == "above_oil") return ChannelSelection::above_oil();
    for (std::size_t i = 0; i < channel_names.size(); ++i) {
        if (channel_names[i] == name) return ChannelSelection::single(static_cast<int>(i));
    }
    throw ConfigError("BadSelection: '" + name + "' is not a channel name, 'all' or 'above_oil'");
}

// ---- aggregation -------------------------------------------------------------

AggregateRow aggregate(const std::vector<MetricRow>& rows) {
    if (rows.empty()) throw DataError("Empty: no rows to aggregate");
    for (const auto& r : rows) {
        if (!same_coordinates(r, rows.front())) {
            throw DataError("MixedCoordinates: rows differ in more than fold and threshold");
        }
    }
    AggregateRow out;
    out.model = rows.front().model;
    out.selection = rows.front().selection;
    out.path = rows.front().path;
    out.tau_s = rows.front().tau_s;
    out.overlap = rows.front().overlap;

    double sum_auc = 0.0, sum_acc = 0.0;
    double max_auc = -std::numeric_limits<double>::infinity();
    double max_acc = -std::numeric_limits<double>::infinity();
    std::set<int> folds;
    std::size_t ok = 0;
    for (const auto& r : rows) {
        if (!r.error_tag.empty()) {
            ++out.n_failed;
            continue;
        }
        ++ok;
        folds.insert(r.fold);
        sum_auc += r.auc_roc;
        sum_acc += r.avg_accuracy;
        max_auc = std::max(max_auc, r.auc_roc);
        max_acc = std::max(max_acc, r.avg_accuracy);
    }
    out.n_folds = static_cast<int>(folds.size());
    if (ok == 0) {
        out.max_auc = out.mean_auc = out.max_acc = out.mean_acc = kNan;
    } else {
        out.max_auc = max_auc;
        out.mean_auc = sum_auc / static_cast<double>(ok);
        out.max_acc = max_acc;
        out.mean_acc = sum_acc / static_cast<double>(ok);
    }
    return out;
}

std::vector<AggregateRow> aggregate_all(const std::vector<MetricRow>& rows) {
    std::vector<MetricRow> sorted = rows;
    std::stable_sort(sorted.begin(), sorted.end(), row_before);
    std::vector<AggregateRow> out;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        std::vector<MetricRow> group;
        while (j < sorted.size() && same_coordinates(sorted[j], sorted[i])) {
            group.push_back(sorted[j]);
            ++j;
        }
        out.push_back(aggregate(group));
        i = j;
    }
    return out;
}

// ---- sweep -------------------------------------------------------------------

namespace {

void validate_sweep(const std::vector<std::shared_ptr<const LabeledSignal>>& signals,
                    const SweepConfig& config) {
    if (signals.empty()) throw DataError("Empty: no signals to evaluate");
    for (const auto& s : signals) {
        if (!s) throw DataError("Empty: null signal");
    }
    const auto& first = *signals.front();
    for (const auto& s : signals) {
        if (s->sampling_rate_hz != first.sampling_rate_hz) {
            throw DataError("RateMismatch: signals disagree on the sampling rate");
        }
        if (s->channel_names != first.channel_names) {
            throw DataError("ShapeMismatch: signals disagree on channel names");
        }
    }
    if (config.grid.empty()) throw ConfigError("BadConfig: empty (tau, overlap) grid");
    if (config.models.empty()) throw ConfigError("BadConfig: no models selected");
    if (config.selections.empty()) throw ConfigError("BadConfig: no channel selections");
    if (config.paths.empty()) throw ConfigError("BadConfig: no feature paths");
    if (config.thresholds.empty()) throw ConfigError("BadConfig: no threshold percentiles");
    const auto& allowed = threshold_percentiles();
    for (double k : config.thresholds) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw ConfigError("BadPercentile: k must be one of 0.001, 0.01, 0.05, 0.1, 0.2");
        }
    }
    for (const auto& g : config.grid) {
        WindowingPlan{g.tau_s, g.overlap, first.sampling_rate_hz}.validate();
    }
    for (const auto& p : config.paths) {
        if (p.kind == FeaturePath::Kind::Raw && p.step < 1) {
            throw ConfigError("BadConfig: raw subsampling step must be >= 1");
        }
    }
    for (const auto& sel : config.selections) selection_name(sel, first.channel_names);
}

int resolve_workers(int configured, std::size_t n_jobs) {
    long w = configured;
    if (w <= 0) {
        if (const char* env = std::getenv("VIBENCH_WORKERS")) w = std::strtol(env, nullptr, 10);
    }
    if (w <= 0) w = 1;
    return static_cast<int>(std::min<long>(w, static_cast<long>(std::max<std::size_t>(n_jobs, 1))));
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* src = m.row(rows[i]);
        std::copy(src, src + m.cols, out.row(i));
    }
    return out;
}

FeatureMatrix make_path_matrix(const WindowSet& ws, const FeaturePath& path) {
    if (path.kind == FeaturePath::Kind::Raw) {
        return window_matrix(gaussian_subsample(ws, GaussianPlan{path.step, 0.0}));
    }
    return extract_matrix(ws, path.set);
}

} // namespace

std::size_t sweep_cell_count(const SweepConfig& config, std::size_t n_folds) {
    return config.grid.size() * config.models.size() * config.selections.size() *
           config.paths.size() * config.thresholds.size() * n_folds;
}

EvalReport run_sweep(const std::vector<std::shared_ptr<const LabeledSignal>>& signals,
                     const std::vector<FoldSpec>& folds, const SweepConfig& config) {
    validate_sweep(signals, config);

    std::vector<Segment> all_segments;
    for (const auto& s : signals) {
        all_segments.insert(all_segments.end(), s->segments.begin(), s->segments.end());
    }
    const auto splits = build_folds(all_segments, folds);

    const auto& channel_names = signals.front()->channel_names;
    const double nu = signals.front()->sampling_rate_hz;

    const std::size_t F = splits.size(), G = config.grid.size(), S = config.selections.size(),
                      P = config.paths.size(), M = config.models.size(),
                      K = config.thresholds.size();

    std::vector<std::string> model_names(M), sel_names(S), path_names(P);
    for (std::size_t m = 0; m < M; ++m) model_names[m] = model_kind_name(config.models[m]);
    for (std::size_t s = 0; s < S; ++s) {
        sel_names[s] = selection_name(config.selections[s], channel_names);
    }
    for (std::size_t p = 0; p < P; ++p) path_names[p] = feature_path_name(config.paths[p]);

    const auto slot = [&](std::size_t f, std::size_t g, std::size_t s, std::size_t p,
                          std::size_t m, std::size_t k) {
        return ((((f * G + g) * S + s) * P + p) * M + m) * K + k;
    };

    // every slot carries its coordinates and seed up front so failures at any
    // stage only have to stamp the error tag
    std::vector<MetricRow> rows(F * G * S * P * M * K);
    for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t g = 0; g < G; ++g) {
            for (std::size_t s = 0; s < S; ++s) {
                for (std::size_t p = 0; p < P; ++p) {
                    for (std::size_t m = 0; m < M; ++m) {
                        const std::string coord = model_names[m] + '|' + sel_names[s] + '|' +
                                                  path_names[p] + '|' +
                                                  io::format_double(config.grid[g].tau_s) + '|' +
                                                  io::format_double(config.grid[g].overlap) +
                                                  "|fold" + std::to_string(splits[f].fold);
                        const std::uint64_t seed =
                            mix_seed(config.master_seed, stable_hash(coord));
                        for (std::size_t k = 0; k < K; ++k) {
                            MetricRow& row = rows[slot(f, g, s, p, m, k)];
                            row.model = model_names[m];
                            row.selection = sel_names[s];
                            row.path = path_names[p];
                            row.tau_s = config.grid[g].tau_s;
                            row.overlap = config.grid[g].overlap;
                            row.fold = splits[f].fold;
                            row.threshold_k = config.thresholds[k];
                            row.auc_roc = kNan;
                            row.avg_accuracy = kNan;
                            row.seed = seed;
                        }
                    }
                }
            }
        }
    }

    for (std::size_t f = 0; f < F; ++f) {
        const auto& split = splits[f];

        const auto stamp_fold = [&](const std::string& tag) {
            for (std::size_t i = slot(f, 0, 0, 0, 0, 0); i < slot(f, 0, 0, 0, 0, 0) + G * S * P * M * K;
                 ++i) {
                rows[i].error_tag = tag;
            }
        };

        // fold-local standardization, training segments only
        std::vector<std::shared_ptr<const LabeledSignal>> standardized;
        try {
            std::vector<const LabeledSignal*> ptrs;
            ptrs.reserve(signals.size());
            for (const auto& s : signals) ptrs.push_back(s.get());
            const ChannelStats stats = fit_standardizer(ptrs, split.train_segment_ids);
            for (const auto& s : signals) {
                standardized.push_back(
                    std::make_shared<const LabeledSignal>(apply_standardizer(*s, stats)));
            }
        } catch (const std::exception& e) {
            stamp_fold(error_tag_of(e));
            continue;
        }

        const std::unordered_set<std::string> train_ids(split.train_segment_ids.begin(),
                                                        split.train_segment_ids.end());

        const auto run_cell_group = [&](std::size_t g, std::size_t s) {
            const WindowingPlan plan{config.grid[g].tau_s, config.grid[g].overlap, nu};

            const auto stamp_group = [&](std::size_t p_only, const std::string& tag) {
                for (std::size_t p = 0; p < P; ++p) {
                    if (p_only != P && p != p_only) continue;
                    for (std::size_t m = 0; m < M; ++m) {
                        for (std::size_t k = 0; k < K; ++k) {
                            rows[slot(f, g, s, p, m, k)].error_tag = tag;
                        }
                    }
                }
            };

            WindowSet ws;
            try {
                std::vector<WindowSet> parts;
                parts.reserve(standardized.size());
                for (const auto& sig : standardized) {
                    parts.push_back(segment_windows(sig, plan, config.selections[s]));
                }
                ws = merge_window_sets(parts);
            } catch (const std::exception& e) {
                stamp_group(P, error_tag_of(e));
                return;
            }

            for (std::size_t p = 0; p < P; ++p) {
                try {
                    FeatureMatrix fm = make_path_matrix(ws, config.paths[p]);

                    std::vector<std::size_t> train_rows, test_rows;
                    for (std::size_t r = 0; r < fm.rows.rows; ++r) {
                        const auto& seg_id = fm.segment_ids[fm.segment[r]];
                        (train_ids.count(seg_id) ? train_rows : test_rows).push_back(r);
                    }
                    if (train_rows.empty()) {
                        throw DataError("EmptyTrain: no training windows in this cell");
                    }
                    if (test_rows.empty()) {
                        throw DataError("EmptyScores: no test windows in this cell");
                    }

                    if (config.paths[p].kind == FeaturePath::Kind::Features) {
                        const FeatureNormStats norm = fit_feature_norm(fm, train_rows);
                        fm = apply_feature_norm(std::move(fm), norm);
                    }

                    const Matrix train = gather_rows(fm.rows, train_rows);
                    const Matrix test = gather_rows(fm.rows, test_rows);
                    std::vector<Label> test_labels;
                    test_labels.reserve(test_rows.size());
                    for (std::size_t r : test_rows) test_labels.push_back(fm.labels[r]);

                    for (std::size_t m = 0; m < M; ++m) {
                        const std::size_t base = slot(f, g, s, p, m, 0);
                        for (std::size_t k = 0; k < K; ++k) {
                            rows[base + k].n_train_windows =
                                static_cast<std::int64_t>(train_rows.size());
                            rows[base + k].n_test_windows =
                                static_cast<std::int64_t>(test_rows.size());
                        }
                        try {
                            const auto t0 = std::chrono::steady_clock::now();
                            const AnomalyModel model = train_model(
                                config.models[m], train, config.detectors, rows[base].seed);
                            const auto train_scores = score(model, train);
                            const auto test_scores = score(model, test);
                            double wall_ms = 0.0;
                            if (config.record_wall_ms) {
                                wall_ms = std::chrono::duration<double, std::milli>(
                                              std::chrono::steady_clock::now() - t0)
                                              .count();
                            }
                            const double auc = auc_roc(test_scores, test_labels);
                            for (std::size_t k = 0; k < K; ++k) {
                                const ThresholdRule rule =
                                    fit_threshold(train_scores, config.thresholds[k]);
                                MetricRow& row = rows[base + k];
                                row.auc_roc = auc;
                                row.avg_accuracy =
                                    average_accuracy(test_scores, test_labels, rule);
                                row.wall_ms = wall_ms;
                            }
                        } catch (const std::exception& e) {
                            for (std::size_t k = 0; k < K; ++k) {
                                rows[base + k].error_tag = error_tag_of(e);
                            }
                        }
                    }
                } catch (const std::exception& e) {
                    stamp_group(p, error_tag_of(e));
                }
            }
        };

        const std::size_t n_jobs = G * S;
        const int workers = resolve_workers(config.workers, n_jobs);
        if (workers <= 1) {
            for (std::size_t j = 0; j < n_jobs; ++j) run_cell_group(j / S, j % S);
        } else {
            std::atomic<std::size_t> next{0};
            const auto drain = [&]() {
                for (;;) {
                    const std::size_t j = next.fetch_add(1);
                    if (j >= n_jobs) return;
                    run_cell_group(j / S, j % S);
                }
            };
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(workers));
            for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
            for (auto& t : pool) t.join();
        }
    }

    std::sort(rows.begin(), rows.end(), row_before);

    EvalReport report;
    report.master_seed = config.master_seed;
    report.aggregates = aggregate_all(rows);
    report.rows = std::move(rows);
    return report;
}

// ---- report files --------------------------------------------------------------

namespace {

constexpr const char* kReportColumns =
    "model,selection,path,tau_s,overlap,fold,threshold_k,auc_roc,avg_accuracy,"
    "n_train_windows,n_test_windows,seed,wall_ms,error_tag";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

} // namespace

void save_report_csv(const EvalReport& report, const std::string& path) {
    std::string out = "# vibench report config_hash=" +
                      (report.config_hash.empty() ? std::string("none") : report.config_hash) +
                      " master_seed=" + std::to_string(report.master_seed) + "\n";
    out += kReportColumns;
    out += '\n';
    for (const auto& r : report.rows) {
        out += r.model;
        out += ',';
        out += r.selection;
        out += ',';
        out += r.path;
        out += ',';
        out += io::format_double(r.tau_s);
        out += ',';
        out += io::format_double(r.overlap);
        out += ',';
        out += std::to_string(r.fold);
        out += ',';
        out += io::format_double(r.threshold_k);
        out += ',';
        out += io::format_double(r.auc_roc);
        out += ',';
        out += io::format_double(r.avg_accuracy);
        out += ',';
        out += std::to_string(r.n_train_windows);
        out += ',';
        out += std::to_string(r.n_test_windows);
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += io::format_double(r.wall_ms);
        out += ',';
        out += r.error_tag;
        out += '\n';
    }
    io::write_file(path, out);
}

EvalReport load_report_csv(const std::string& path) {
    const std::string text = io::read_file(path);
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto nl = text.find('\n', start);
        lines.push_back(text.substr(start, nl - start));
        if (nl == std::string::npos) break;
        start = nl + 1;
    }
    if (lines.size() < 2 || lines[0].rfind("# vibench report", 0) != 0) {
        throw DataError("ParseError: " + path + " is not a vibench report");
    }

    EvalReport report;
    {
        const auto hash_pos = lines[0].find("config_hash=");
        const auto seed_pos = lines[0].find("master_seed=");
        if (hash_pos == std::string::npos || seed_pos == std::string::npos) {
            throw DataError("ParseError: report provenance line is malformed");
        }
        const auto hash_start = hash_pos + 12;
        report.config_hash =
            lines[0].substr(hash_start, lines[0].find(' ', hash_start) - hash_start);
        if (report.config_hash == "none") report.config_hash.clear();
        report.master_seed = parse_u64(lines[0].substr(seed_pos + 12), "report master seed");
    }
    if (lines[1] != kReportColumns) {
        throw DataError("ParseError: report column header does not match");
    }

    for (std::size_t li = 2; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const auto fields = split_csv_line(lines[li]);
        if (fields.size() != 14) {
            throw DataError("ParseError: report line " + std::to_string(li + 1) + " has " +
                            std::to_string(fields.size()) + " fields, expected 14");
        }
        MetricRow r;
        r.model = fields[0];
        r.selection = fields[1];
        r.path = fields[2];
        r.tau_s = io::parse_double(fields[3], "report tau_s");
        r.overlap = io::parse_double(fields[4], "report overlap");
        r.fold = static_cast<int>(io::parse_int(fields[5], "report fold"));
        r.threshold_k = io::parse_double(fields[6], "report threshold_k");
        r.auc_roc = io::parse_double(fields[7], "report auc_roc");
        r.avg_accuracy = io::parse_double(fields[8], "report avg_accuracy");
        r.n_train_windows = io::parse_int(fields[9], "report n_train_windows");
        r.n_test_windows = io::parse_int(fields[10], "report n_test_windows");
        r.seed = parse_u64(fields[11], "report seed");
        r.wall_ms = io::parse_double(fields[12], "report wall_ms");
        r.error_tag = fields[13];
        report.rows.push_back(std::move(r));
    }
    report.aggregates = aggregate_all(report.rows);
    return report;
}

void save_summary_json(const EvalReport& report, const std::string& path) {
    nlohmann::ordered_json root;
    root["config_hash"] = report.config_hash.empty() ? "none" : report.config_hash;
    root["master_seed"] = report.master_seed;
    nlohmann::ordered_json models = nlohmann::ordered_json::object();
    for (const auto& a : report.aggregates) {
        nlohmann::ordered_json entry;
        entry["max_auc"] = a.max_auc;
        entry["mean_auc"] = a.mean_auc;
        entry["max_acc"] = a.max_acc;
        entry["mean_acc"] = a.mean_acc;
        entry["folds"] = a.n_folds;
        entry["failed"] = a.n_failed;
        const std::string cell =
            "tau=" + io::format_double(a.tau_s) + ",o=" + io::format_double(a.overlap);
        models[a.model][a.selection][a.path][cell] = std::move(entry);
    }
    root["models"] = std::move(models);
    io::write_file(path, root.dump(2) + "\n");
}

} // namespace vibench
