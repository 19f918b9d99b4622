#pragma once

#include <cstdint>
#include <vector>

#include "vibench/matrix.hpp"
#include "vibench/rng.hpp"

namespace vibench {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights; // row-major [out][in]
    std::vector<double> biases;  // empty in bias-free nets
};

/// Fully connected net: tanh on hidden layers, identity on the output layer.
struct DenseNet {
    std::vector<std::size_t> widths;
    std::vector<DenseLayer> layers;
    bool has_bias = true;
};

/// Glorot-uniform weights (a = sqrt(6/(fan_in+fan_out))) drawn from rng in
/// layer order, row-major within each layer; biases start at zero.
DenseNet make_dense_net(const std::vector<std::size_t>& widths, bool has_bias, Rng& rng);

/// activations[0] = x, activations[i] = output of layer i-1 after its
/// activation function. Throws NonFinite when any activation is not finite.
std::vector<std::vector<double>> forward(const DenseNet& net, const std::vector<double>& x);

struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

/// Exact reverse-mode gradients of the scalar loss whose derivative with
/// respect to the net output is output_grad.
Gradients backward(const DenseNet& net, const std::vector<double>& x,
                   const std::vector<double>& output_grad);

struct AutoEncModel {
    DenseNet net;
    TrainConfig config;
    std::vector<double> epoch_loss; // full-train MSE after each epoch
};

struct DeepSvddModel {
    DenseNet net; // bias-free
    std::vector<double> center;
    TrainConfig config;
    std::vector<double> epoch_loss;
};

/// Collapse guard: components with |c| < 0.1 move to sign(c)*0.1, zeros to +0.1.
void snap_center(std::vector<double>& center);

std::vector<double> score_rows(const AutoEncModel& m, const Matrix& x);
std::vector<double> score_rows(const DeepSvddModel& m, const Matrix& x);

} // namespace vibench
