// Microbenchmarks for the hot paths: spectral transforms, per-window feature
// extraction, and detector train/score. Run manually; not part of ctest.

#include <benchmark/benchmark.h>

#include <vector>

#include "vibench/detectors.hpp"
#include "vibench/features.hpp"
#include "vibench/rng.hpp"
#include "vibench/signal.hpp"

namespace {

using namespace vibench;

std::vector<double> noise_window(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (double& v : x) v = rng.normal();
    return x;
}

Matrix noise_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.normal(0.3, 1.0);
    return m;
}

void BM_Periodogram(benchmark::State& state) {
    const auto x = noise_window(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(periodogram(x, 4000.0));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Periodogram)->Arg(1000)->Arg(4000)->Arg(12000);

void BM_StatisticalFeatures(benchmark::State& state) {
    const auto x = noise_window(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(statistical_features(x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StatisticalFeatures)->Arg(1000)->Arg(4000)->Arg(12000);

void BM_SpectralFeatures(benchmark::State& state) {
    const auto x = noise_window(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(spectral_features(x, 4000.0));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SpectralFeatures)->Arg(1000)->Arg(4000)->Arg(12000);

void BM_GaussianSubsample(benchmark::State& state) {
    const auto x = noise_window(static_cast<std::size_t>(state.range(0)), 4);
    const GaussianPlan plan{8, 0.0};
    for (auto _ : state) benchmark::DoNotOptimize(gaussian_subsample(x, plan));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GaussianSubsample)->Arg(4000)->Arg(12000);

// rows x 28 mirrors one fold of statistical+spectral features on one channel
void BM_Train(benchmark::State& state, ModelKind kind) {
    const Matrix train = noise_matrix(static_cast<std::size_t>(state.range(0)), 28, 5);
    DetectorSettings settings;
    settings.neural.epochs = 20;
    for (auto _ : state) benchmark::DoNotOptimize(train_model(kind, train, settings, 7));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_Train, iforest, ModelKind::IForest)->Arg(512)->Arg(2048);
BENCHMARK_CAPTURE(BM_Train, knn, ModelKind::Knn)->Arg(512)->Arg(2048);
BENCHMARK_CAPTURE(BM_Train, cblof, ModelKind::Cblof)->Arg(512)->Arg(2048);
BENCHMARK_CAPTURE(BM_Train, copod, ModelKind::Copod)->Arg(512)->Arg(2048);
BENCHMARK_CAPTURE(BM_Train, autoenc, ModelKind::AutoEnc)->Arg(512);
BENCHMARK_CAPTURE(BM_Train, deepsvdd, ModelKind::DeepSvdd)->Arg(512);

void BM_Score(benchmark::State& state, ModelKind kind) {
    const Matrix train = noise_matrix(512, 28, 6);
    DetectorSettings settings;
    settings.neural.epochs = 20;
    const AnomalyModel model = train_model(kind, train, settings, 7);
    const Matrix queries = noise_matrix(static_cast<std::size_t>(state.range(0)), 28, 8);
    for (auto _ : state) benchmark::DoNotOptimize(score(model, queries));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_Score, iforest, ModelKind::IForest)->Arg(1000);
BENCHMARK_CAPTURE(BM_Score, knn, ModelKind::Knn)->Arg(1000);
BENCHMARK_CAPTURE(BM_Score, cblof, ModelKind::Cblof)->Arg(1000);
BENCHMARK_CAPTURE(BM_Score, copod, ModelKind::Copod)->Arg(1000);
BENCHMARK_CAPTURE(BM_Score, autoenc, ModelKind::AutoEnc)->Arg(1000);
BENCHMARK_CAPTURE(BM_Score, deepsvdd, ModelKind::DeepSvdd)->Arg(1000);

} // namespace

BENCHMARK_MAIN();
