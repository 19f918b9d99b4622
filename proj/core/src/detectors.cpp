#include "vibench/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "vibench/errors.hpp"
#include "vibench/rng.hpp"

namespace vibench {

namespace {

constexpr double kEulerGamma = 0.5772156649;

void check_train_matrix(const Matrix& x, std::size_t min_rows, const char* tag) {
    if (x.cols == 0) throw DataError("DimMismatch: training matrix has no columns");
    if (x.rows < min_rows) {
        throw DataError(std::string(tag) + ": need at least " + std::to_string(min_rows) +
                        " training rows, got " + std::to_string(x.rows));
    }
}

double sq_dist(const double* a, const double* b, std::size_t d) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double diff = a[j] - b[j];
        acc += diff * diff;
    }
    return acc;
}

// --- isolation forest ---

struct TreeBuilder {
    const Matrix& x;
    std::vector<std::size_t>& idx; // subsample row indices, partitioned in place
    std::size_t max_depth;
    Rng& rng;
    std::vector<IForestNode> nodes;

    std::uint32_t build(std::size_t lo, std::size_t hi, std::size_t depth) {
        const std::uint32_t id = static_cast<std::uint32_t>(nodes.size());
        nodes.push_back({});
        nodes[id].size = static_cast<std::uint32_t>(hi - lo);
        if (hi - lo <= 1 || depth >= max_depth) return id;

        // candidate features are those non-constant over this node's points
        std::vector<std::int32_t> candidates;
        std::vector<double> lo_val(x.cols), hi_val(x.cols);
        for (std::size_t f = 0; f < x.cols; ++f) {
            double mn = x.at(idx[lo], f);
            double mx = mn;
            for (std::size_t i = lo + 1; i < hi; ++i) {
                const double v = x.at(idx[i], f);
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
            lo_val[f] = mn;
            hi_val[f] = mx;
            if (mn < mx) candidates.push_back(static_cast<std::int32_t>(f));
        }
        if (candidates.empty()) return id;

        const std::int32_t f = candidates[rng.uniform_int(candidates.size())];
        const double mn = lo_val[static_cast<std::size_t>(f)];
        const double mx = hi_val[static_cast<std::size_t>(f)];
        // split in (mn, mx] keeps both children non-empty
        double split = mn + rng.uniform_open() * (mx - mn);
        if (!(split > mn)) split = std::nextafter(mn, mx);

        const auto mid_it =
            std::partition(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                           idx.begin() + static_cast<std::ptrdiff_t>(hi),
                           [&](std::size_t i) { return x.at(i, static_cast<std::size_t>(f)) < split; });
        const std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());

        nodes[id].feature = f;
        nodes[id].split = split;
        const std::uint32_t left = build(lo, mid, depth + 1);
        const std::uint32_t right = build(mid, hi, depth + 1);
        nodes[id].left = left;
        nodes[id].right = right;
        return id;
    }
};

double tree_path_length(const std::vector<IForestNode>& nodes, const double* row) {
    std::uint32_t node = 0;
    double depth = 0.0;
    while (nodes[node].feature >= 0) {
        const std::size_t f = static_cast<std::size_t>(nodes[node].feature);
        node = row[f] < nodes[node].split ? nodes[node].left : nodes[node].right;
        depth += 1.0;
    }
    return depth + iforest_path_norm(nodes[node].size);
}

std::vector<double> score_rows(const IForestModel& m, const Matrix& x) {
    std::vector<double> out(x.rows);
    const double norm = iforest_path_norm(m.subsample_used);
    for (std::size_t r = 0; r < x.rows; ++r) {
        double total = 0.0;
        for (const auto& tree : m.trees) total += tree_path_length(tree, x.row(r));
        const double mean_path = total / static_cast<double>(m.trees.size());
        out[r] = std::pow(2.0, -mean_path / norm);
    }
    return out;
}

// --- k-th nearest neighbor ---

std::vector<double> score_rows(const KnnModel& m, const Matrix& x) {
    const std::size_t n = m.train.rows;
    const std::size_t k = m.params.k;
    std::vector<double> out(x.rows);
    std::vector<double> d2(n);
    for (std::size_t r = 0; r < x.rows; ++r) {
        for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(x.row(r), m.train.row(i), x.cols);
        // a query identical to a training row is treated as that row: one
        // zero-distance match is skipped so the k-th neighbor is a real peer
        std::size_t end = n;
        const auto self = std::find(d2.begin(), d2.end(), 0.0);
        if (self != d2.end()) {
            std::swap(*self, d2[n - 1]);
            end = n - 1;
        }
        std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(k - 1),
                         d2.begin() + static_cast<std::ptrdiff_t>(end));
        out[r] = std::sqrt(d2[k - 1]);
    }
    return out;
}

// --- cluster-based local outlier factor ---

struct KmeansState {
    Matrix centers;
    std::vector<std::uint32_t> assign;
    std::vector<std::size_t> sizes;
    double inertia = 0.0;
};

void assign_points(const Matrix& x, KmeansState& st) {
    const std::size_t kk = st.centers.rows;
    st.assign.assign(x.rows, 0);
    st.sizes.assign(kk, 0);
    st.inertia = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_c = 0;
        for (std::size_t c = 0; c < kk; ++c) {
            const double d = sq_dist(x.row(i), st.centers.row(c), x.cols);
            if (d < best) {
                best = d;
                best_c = static_cast<std::uint32_t>(c);
            }
        }
        st.assign[i] = best_c;
        st.sizes[best_c] += 1;
        st.inertia += best;
    }
}

KmeansState run_kmeans(const Matrix& x, const CblofParams& p, Rng& rng) {
    const std::size_t n = x.rows;
    const std::size_t kk = p.n_clusters;
    KmeansState st;
    st.centers = Matrix(kk, x.cols);

    // k-means++ seeding
    auto set_center = [&](std::size_t c, std::size_t row) {
        std::memcpy(st.centers.row(c), x.row(row), x.cols * sizeof(double));
    };
    set_center(0, rng.uniform_int(n));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < kk; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist(x.row(i), st.centers.row(c - 1), x.cols));
            total += d2[i];
        }
        std::size_t pick = n - 1;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cum += d2[i];
                if (cum > r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_int(n);
        }
        set_center(c, pick);
    }

    assign_points(x, st);
    std::size_t reseeds = 0;
    std::size_t iter = 0;
    double prev_inertia = std::numeric_limits<double>::infinity();
    std::vector<std::uint32_t> prev_assign;
    while (iter < p.max_iters) {
        if (std::find(st.sizes.begin(), st.sizes.end(), std::size_t{0}) != st.sizes.end()) {
            if (++reseeds > 3) {
                throw NumericError("EmptyCluster: k-means cluster stayed empty after 3 re-seeds");
            }
            // move the point farthest from its center into each empty cluster
            for (std::size_t c = 0; c < kk; ++c) {
                if (st.sizes[c] != 0) continue;
                double worst = -1.0;
                std::size_t pick = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = sq_dist(x.row(i), st.centers.row(st.assign[i]), x.cols);
                    if (d > worst) {
                        worst = d;
                        pick = i;
                    }
                }
                set_center(c, pick);
                st.assign[pick] = static_cast<std::uint32_t>(c);
            }
            assign_points(x, st);
            continue;
        }
        if (!prev_assign.empty() && prev_assign == st.assign) break;
        if (std::isfinite(prev_inertia) && prev_inertia - st.inertia <= p.tol * prev_inertia) break;
        prev_inertia = st.inertia;
        prev_assign = st.assign;

        Matrix sums(kk, x.cols);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = x.row(i);
            double* acc = sums.row(st.assign[i]);
            for (std::size_t j = 0; j < x.cols; ++j) acc[j] += row[j];
        }
        for (std::size_t c = 0; c < kk; ++c) {
            double* center = st.centers.row(c);
            const double* acc = sums.row(c);
            const double inv = 1.0 / static_cast<double>(st.sizes[c]);
            for (std::size_t j = 0; j < x.cols; ++j) center[j] = acc[j] * inv;
        }
        assign_points(x, st);
        ++iter;
    }
    return st;
}

std::vector<double> score_rows(const CblofModel& m, const Matrix& x) {
    const std::size_t kk = m.centers.rows;
    std::vector<double> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_c = 0;
        double best_large = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < kk; ++c) {
            const double d = sq_dist(x.row(r), m.centers.row(c), x.cols);
            if (d < best) {
                best = d;
                best_c = c;
            }
            if (c < m.n_large) best_large = std::min(best_large, d);
        }
        out[r] = std::sqrt(best_c < m.n_large ? best : best_large);
    }
    return out;
}

// --- copula-based detector ---

std::vector<double> score_rows(const CopodModel& m, const Matrix& x) {
    const std::size_t d = m.sorted_cols.size();
    const double n = static_cast<double>(m.sorted_cols[0].size());
    const double floor_p = 1.0 / n;
    std::vector<double> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) {
        double sum_left = 0.0, sum_right = 0.0, sum_skew = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const auto& col = m.sorted_cols[j];
            const double v = x.at(r, j);
            const double n_le =
                static_cast<double>(std::upper_bound(col.begin(), col.end(), v) - col.begin());
            const double n_ge =
                n - static_cast<double>(std::lower_bound(col.begin(), col.end(), v) - col.begin());
            const double p_left = std::max(n_le / n, floor_p);
            const double p_right = std::max(n_ge / n, floor_p);
            sum_left -= std::log(p_left);
            sum_right -= std::log(p_right);
            sum_skew -= std::log(m.use_left_tail[j] ? p_left : p_right);
        }
        out[r] = std::max({sum_left, sum_right, sum_skew});
    }
    return out;
}

} // namespace

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::IForest: return "iforest";
        case ModelKind::Knn: return "knn";
        case ModelKind::Cblof: return "cblof";
        case ModelKind::Copod: return "copod";
        case ModelKind::AutoEnc: return "autoenc";
        case ModelKind::DeepSvdd: return "deepsvdd";
    }
    return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
    for (ModelKind k : {ModelKind::IForest, ModelKind::Knn, ModelKind::Cblof, ModelKind::Copod,
                        ModelKind::AutoEnc, ModelKind::DeepSvdd}) {
        if (name == model_kind_name(k)) return k;
    }
    throw ConfigError("BadConfig: unknown model kind '" + name + "'");
}

double iforest_path_norm(std::size_t n) {
    if (n <= 1) return 0.0;
    const double dn = static_cast<double>(n);
    return 2.0 * (std::log(dn - 1.0) + kEulerGamma) - 2.0 * (dn - 1.0) / dn;
}

AnomalyModel train_iforest(const Matrix& x, const IForestParams& params, std::uint64_t seed) {
    check_train_matrix(x, 2, "EmptyTrain");
    if (params.n_trees == 0 || params.subsample < 2) {
        throw ConfigError("BadConfig: isolation forest needs n_trees >= 1 and subsample >= 2");
    }
    IForestModel m;
    m.params = params;
    m.subsample_used = std::min(params.subsample, x.rows);
    const std::size_t max_depth = static_cast<std::size_t>(
        std::ceil(std::log2(static_cast<double>(m.subsample_used))));

    Rng rng(seed);
    m.trees.reserve(params.n_trees);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        std::vector<std::size_t> idx = rng.sample_without_replacement(x.rows, m.subsample_used);
        TreeBuilder builder{x, idx, max_depth, rng, {}};
        builder.nodes.reserve(2 * m.subsample_used);
        builder.build(0, idx.size(), 0);
        m.trees.push_back(std::move(builder.nodes));
    }

    AnomalyModel out;
    out.kind = ModelKind::IForest;
    out.train_dim = x.cols;
    out.seed = seed;
    out.payload = std::move(m);
    return out;
}

AnomalyModel train_knn(const Matrix& x, const KnnParams& params) {
    if (params.k == 0) throw ConfigError("BadConfig: knn needs k >= 1");
    check_train_matrix(x, params.k + 1, "TooFewRows");
    AnomalyModel out;
    out.kind = ModelKind::Knn;
    out.train_dim = x.cols;
    out.payload = KnnModel{params, x};
    return out;
}

AnomalyModel train_cblof(const Matrix& x, const CblofParams& params, std::uint64_t seed) {
    if (params.n_clusters == 0) throw ConfigError("BadConfig: cblof needs n_clusters >= 1");
    check_train_matrix(x, params.n_clusters, "TooFewRows");

    Rng rng(seed);
    KmeansState st = run_kmeans(x, params, rng);

    // order clusters by descending size, then pick the large/small boundary
    const std::size_t kk = params.n_clusters;
    std::vector<std::size_t> order(kk);
    for (std::size_t c = 0; c < kk; ++c) order[c] = c;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return st.sizes[a] > st.sizes[b]; });

    CblofModel m;
    m.params = params;
    m.centers = Matrix(kk, x.cols);
    m.sizes.resize(kk);
    for (std::size_t c = 0; c < kk; ++c) {
        std::memcpy(m.centers.row(c), st.centers.row(order[c]), x.cols * sizeof(double));
        m.sizes[c] = st.sizes[order[c]];
    }
    double cum = 0.0;
    m.n_large = kk;
    for (std::size_t c = 0; c < kk; ++c) {
        cum += static_cast<double>(m.sizes[c]);
        const bool cum_hit = cum >= params.alpha * static_cast<double>(x.rows);
        const bool ratio_hit = c + 1 < kk && static_cast<double>(m.sizes[c]) >=
                                                 params.beta * static_cast<double>(m.sizes[c + 1]);
        if (cum_hit || ratio_hit) {
            m.n_large = c + 1;
            break;
        }
    }

    AnomalyModel out;
    out.kind = ModelKind::Cblof;
    out.train_dim = x.cols;
    out.seed = seed;
    out.payload = std::move(m);
    return out;
}

AnomalyModel train_copod(const Matrix& x) {
    check_train_matrix(x, 10, "TooFewRows");
    CopodModel m;
    m.sorted_cols.resize(x.cols);
    m.use_left_tail.resize(x.cols);
    for (std::size_t j = 0; j < x.cols; ++j) {
        auto& col = m.sorted_cols[j];
        col.resize(x.rows);
        double mean = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            col[i] = x.at(i, j);
            mean += col[i];
        }
        mean /= static_cast<double>(x.rows);
        double m2 = 0.0, m3 = 0.0;
        for (double v : col) {
            const double dev = v - mean;
            m2 += dev * dev;
            m3 += dev * dev * dev;
        }
        // only the skewness sign matters for the tail choice
        m.use_left_tail[j] = (m2 > 0.0 && m3 < 0.0) ? 1 : 0;
        std::sort(col.begin(), col.end());
    }

    AnomalyModel out;
    out.kind = ModelKind::Copod;
    out.train_dim = x.cols;
    out.payload = std::move(m);
    return out;
}

std::vector<double> score(const AnomalyModel& model, const Matrix& x) {
    if (x.cols != model.train_dim) {
        throw DataError("DimMismatch: model expects " + std::to_string(model.train_dim) +
                        " columns, got " + std::to_string(x.cols));
    }
    return std::visit([&](const auto& payload) { return score_rows(payload, x); }, model.payload);
}

AnomalyModel train_model(ModelKind kind, const Matrix& x, const DetectorSettings& settings,
                         std::uint64_t seed) {
    // seed is stamped even on the deterministic trainers so persisted models
    // carry uniform provenance
    auto stamp = [seed](AnomalyModel m) {
        m.seed = seed;
        return m;
    };
    switch (kind) {
        case ModelKind::IForest: return train_iforest(x, settings.iforest, seed);
        case ModelKind::Knn: return stamp(train_knn(x, settings.knn));
        case ModelKind::Cblof: return train_cblof(x, settings.cblof, seed);
        case ModelKind::Copod: return stamp(train_copod(x));
        case ModelKind::AutoEnc:
            return train_autoencoder(x, settings.neural, seed, settings.autoenc_bottleneck);
        case ModelKind::DeepSvdd:
            return train_deepsvdd(x, settings.neural, seed, settings.svdd_embed);
    }
    throw ConfigError("BadConfig: unknown model kind");
}

const std::vector<double>& threshold_percentiles() {
    static const std::vector<double> kAllowed = {0.001, 0.01, 0.05, 0.1, 0.2};
    return kAllowed;
}

ThresholdRule fit_threshold(const std::vector<double>& train_scores, double k) {
    if (train_scores.empty()) throw DataError("EmptyScores: no training scores to fit a threshold");
    const auto& allowed = threshold_percentiles();
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
        throw ConfigError("BadPercentile: k must be one of 0.001, 0.01, 0.05, 0.1, 0.2");
    }
    for (double s : train_scores) {
        if (!std::isfinite(s)) throw NumericError("NonFinite: training score is not finite");
    }

    std::vector<double> sorted = train_scores;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::size_t i = 0;
    while (i < sorted.size()) {
        const auto ub = std::upper_bound(sorted.begin() + static_cast<std::ptrdiff_t>(i),
                                         sorted.end(), sorted[i]);
        const double greater = static_cast<double>(sorted.end() - ub);
        if (greater / n <= k) return {k, sorted[i]};
        i = static_cast<std::size_t>(ub - sorted.begin());
    }
    return {k, sorted.back()}; // unreachable: the max always satisfies the rule
}

std::vector<std::uint8_t> classify(const std::vector<double>& scores, const ThresholdRule& rule) {
    std::vector<std::uint8_t> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > rule.zeta ? 1 : 0;
    return out;
}

} // namespace vibench
