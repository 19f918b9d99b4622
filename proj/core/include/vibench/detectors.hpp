#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "vibench/matrix.hpp"
#include "vibench/neural.hpp"

namespace vibench {

enum class ModelKind { IForest, Knn, Cblof, Copod, AutoEnc, DeepSvdd };

const char* model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct IForestParams {
    std::size_t n_trees = 100;
    std::size_t subsample = 256; // clamped to the number of training rows
};

struct KnnParams {
    std::size_t k = 5;
};

struct CblofParams {
    std::size_t n_clusters = 8;
    double alpha = 0.9; // cumulative-size boundary for "large" clusters
    double beta = 5.0;  // consecutive size-ratio boundary
    std::size_t max_iters = 300;
    double tol = 1e-4; // relative inertia improvement
};

/// One isolation-tree node. feature < 0 marks a leaf; size is the number of
/// subsample points that reached the node.
struct IForestNode {
    std::int32_t feature = -1;
    double split = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t size = 0;
};

struct IForestModel {
    IForestParams params;
    std::size_t subsample_used = 0;
    std::vector<std::vector<IForestNode>> trees;
};

struct KnnModel {
    KnnParams params;
    Matrix train;
};

struct CblofModel {
    CblofParams params;
    Matrix centers; // sorted by descending cluster size
    std::vector<std::size_t> sizes;
    std::size_t n_large = 0;
};

struct CopodModel {
    std::vector<std::vector<double>> sorted_cols;
    std::vector<std::uint8_t> use_left_tail; // per dimension, from the skewness sign
};

/// A trained one-class detector. Immutable after training; scoring is
/// deterministic and oriented so larger = more anomalous.
struct AnomalyModel {
    ModelKind kind = ModelKind::IForest;
    std::size_t train_dim = 0;
    std::uint64_t seed = 0;
    std::variant<IForestModel, KnnModel, CblofModel, CopodModel, AutoEncModel, DeepSvddModel>
        payload;
};

/// Average unsuccessful-search path length of a binary tree over n points;
/// normalizes isolation depths. iforest_path_norm(2) = 2*0.5772156649 - 1.
double iforest_path_norm(std::size_t n);

AnomalyModel train_iforest(const Matrix& x, const IForestParams& params = {},
                           std::uint64_t seed = 0);
AnomalyModel train_knn(const Matrix& x, const KnnParams& params = {});
AnomalyModel train_cblof(const Matrix& x, const CblofParams& params = {}, std::uint64_t seed = 0);
AnomalyModel train_copod(const Matrix& x);

/// Symmetric d -> d/2 -> d/4 -> d/2 -> d reconstruction net trained on MSE;
/// score = mean squared reconstruction error. bottleneck 0 = d/4, floor 2.
AnomalyModel train_autoencoder(const Matrix& x, const TrainConfig& config = {},
                               std::uint64_t seed = 0, std::size_t bottleneck = 0);

/// Bias-free d -> d/2 -> embed net pulled toward the snapped mean of the
/// initial embeddings; score = squared distance to that center. embed_dim 0
/// = d/4, floor 2.
AnomalyModel train_deepsvdd(const Matrix& x, const TrainConfig& config = {}, std::uint64_t seed = 0,
                            std::size_t embed_dim = 0);

/// Hyperparameters for every detector family, used by the dispatch trainer.
struct DetectorSettings {
    IForestParams iforest;
    KnnParams knn;
    CblofParams cblof;
    TrainConfig neural;
    std::size_t autoenc_bottleneck = 0; // 0 = d/4
    std::size_t svdd_embed = 0;         // 0 = d/4
};

AnomalyModel train_model(ModelKind kind, const Matrix& x, const DetectorSettings& settings,
                         std::uint64_t seed);

/// One score per row of x. Row width must equal the model's train_dim.
std::vector<double> score(const AnomalyModel& model, const Matrix& x);

struct ThresholdRule {
    double k = 0.0;    // top-percentile, one of {0.001, 0.01, 0.05, 0.1, 0.2}
    double zeta = 0.0; // fitted boundary score
};

/// zeta = smallest training score whose strictly-greater fraction is <= k.
/// The admissible values of k, ascending.
const std::vector<double>& threshold_percentiles();

ThresholdRule fit_threshold(const std::vector<double>& train_scores, double k);

/// 1 = anomalous (score strictly above zeta), 0 = normal.
std::vector<std::uint8_t> classify(const std::vector<double>& scores, const ThresholdRule& rule);

} // namespace vibench
