#include "vibench/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vibench/detectors.hpp"
#include "vibench/errors.hpp"

namespace vibench {

namespace {

void check_widths(const std::vector<std::size_t>& widths) {
    if (widths.size() < 2) throw ConfigError("BadConfig: a dense net needs at least two widths");
    for (std::size_t w : widths) {
        if (w == 0) throw ConfigError("BadConfig: zero-width dense layer");
    }
}

void check_config(const TrainConfig& cfg) {
    if (cfg.epochs == 0 || cfg.batch == 0 || !(cfg.learning_rate > 0.0)) {
        throw ConfigError("BadConfig: training needs epochs >= 1, batch >= 1, learning rate > 0");
    }
}

/// Forward pass without finite checks; acts holds one vector per width.
void forward_into(const DenseNet& net, const double* x, std::vector<std::vector<double>>& acts) {
    acts.resize(net.widths.size());
    acts[0].assign(x, x + net.widths[0]);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const DenseLayer& layer = net.layers[l];
        const std::vector<double>& in = acts[l];
        std::vector<double>& out = acts[l + 1];
        out.assign(layer.out, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double* w = layer.weights.data() + o * layer.in;
            double acc = layer.biases.empty() ? 0.0 : layer.biases[o];
            for (std::size_t i = 0; i < layer.in; ++i) acc += w[i] * in[i];
            out[o] = acc;
        }
        if (l + 1 < net.layers.size()) {
            for (auto& v : out) v = std::tanh(v);
        }
    }
}

/// Accumulates exact gradients for one sample into g, scaled by the given
/// output-side derivative. delta is reused scratch space.
void backward_into(const DenseNet& net, const std::vector<std::vector<double>>& acts,
                   const std::vector<double>& output_grad, Gradients& g,
                   std::vector<double>& delta) {
    delta = output_grad;
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const DenseLayer& layer = net.layers[l];
        const std::vector<double>& in = acts[l];
        std::vector<double>& gw = g.weights[l];
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double d = delta[o];
            double* row = gw.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) row[i] += d * in[i];
        }
        if (!layer.biases.empty()) {
            std::vector<double>& gb = g.biases[l];
            for (std::size_t o = 0; o < layer.out; ++o) gb[o] += delta[o];
        }
        if (l == 0) break;
        std::vector<double> next(layer.in, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double d = delta[o];
            const double* w = layer.weights.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) next[i] += d * w[i];
        }
        // tanh derivative from the stored activation of the upstream layer
        for (std::size_t i = 0; i < layer.in; ++i) next[i] *= 1.0 - in[i] * in[i];
        delta = std::move(next);
    }
}

Gradients zero_gradients(const DenseNet& net) {
    Gradients g;
    g.weights.resize(net.layers.size());
    g.biases.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        g.weights[l].assign(net.layers[l].weights.size(), 0.0);
        g.biases[l].assign(net.layers[l].biases.size(), 0.0);
    }
    return g;
}

void reset_gradients(Gradients& g) {
    for (auto& v : g.weights) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : g.biases) std::fill(v.begin(), v.end(), 0.0);
}

struct AdamState {
    Gradients m, v;
    std::uint64_t t = 0;
};

void adam_step(DenseNet& net, const Gradients& g, AdamState& st, const TrainConfig& cfg) {
    st.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
    auto update = [&](std::vector<double>& params, const std::vector<double>& grad,
                      std::vector<double>& m, std::vector<double>& v) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        update(net.layers[l].weights, g.weights[l], st.m.weights[l], st.v.weights[l]);
        if (!net.layers[l].biases.empty()) {
            update(net.layers[l].biases, g.biases[l], st.m.biases[l], st.v.biases[l]);
        }
    }
}

void check_params_finite(const DenseNet& net) {
    for (const auto& layer : net.layers) {
        for (double w : layer.weights) {
            if (!std::isfinite(w)) throw NumericError("Diverged: non-finite network weight");
        }
        for (double b : layer.biases) {
            if (!std::isfinite(b)) throw NumericError("Diverged: non-finite network bias");
        }
    }
}

/// For the autoencoder the per-sample target is the input row; for DeepSVDD
/// it is the fixed center.
enum class Objective { Reconstruction, CenterPull };

double sample_loss_grad(Objective obj, const std::vector<double>& out, const double* x,
                        const std::vector<double>& center, double inv_batch,
                        std::vector<double>& grad_out) {
    const std::size_t d = out.size();
    grad_out.resize(d);
    double loss = 0.0;
    const double* target = obj == Objective::Reconstruction ? x : center.data();
    const double denom = obj == Objective::Reconstruction ? static_cast<double>(d) : 1.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double err = out[j] - target[j];
        loss += err * err;
        grad_out[j] = 2.0 * err / denom * inv_batch;
    }
    return loss / denom;
}

/// Shuffled mini-batch Adam loop shared by both trainers. Returns per-epoch
/// full-train loss; throws Diverged when any loss stops being finite.
std::vector<double> run_training(DenseNet& net, const Matrix& x, const TrainConfig& cfg,
                                 Objective obj, const std::vector<double>& center, Rng& rng) {
    const std::size_t n = x.rows;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    AdamState adam{zero_gradients(net), zero_gradients(net), 0};
    Gradients batch_grad = zero_gradients(net);
    std::vector<std::vector<double>> acts;
    std::vector<double> out_grad, delta;
    std::vector<double> epoch_loss;
    epoch_loss.reserve(cfg.epochs);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += cfg.batch) {
            const std::size_t end = std::min(n, start + cfg.batch);
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            reset_gradients(batch_grad);
            double batch_loss = 0.0;
            for (std::size_t b = start; b < end; ++b) {
                const double* row = x.row(order[b]);
                forward_into(net, row, acts);
                batch_loss += sample_loss_grad(obj, acts.back(), row, center, inv_batch, out_grad);
                backward_into(net, acts, out_grad, batch_grad, delta);
            }
            if (!std::isfinite(batch_loss)) {
                throw NumericError("Diverged: training loss is not finite");
            }
            adam_step(net, batch_grad, adam, cfg);
        }
        check_params_finite(net);

        double total = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            forward_into(net, x.row(r), acts);
            total += sample_loss_grad(obj, acts.back(), x.row(r), center, 1.0, out_grad);
        }
        const double mean_loss = total / static_cast<double>(n);
        if (!std::isfinite(mean_loss)) throw NumericError("Diverged: training loss is not finite");
        epoch_loss.push_back(mean_loss);
    }
    return epoch_loss;
}

void check_train_input(const Matrix& x, const TrainConfig& cfg) {
    check_config(cfg);
    if (x.cols == 0) throw DataError("DimMismatch: training matrix has no columns");
    if (x.rows < cfg.batch) {
        throw DataError("TooFewRows: need at least one full batch of training rows, got " +
                        std::to_string(x.rows));
    }
}

} // namespace

DenseNet make_dense_net(const std::vector<std::size_t>& widths, bool has_bias, Rng& rng) {
    check_widths(widths);
    DenseNet net;
    net.widths = widths;
    net.has_bias = has_bias;
    net.layers.resize(widths.size() - 1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        DenseLayer& layer = net.layers[l];
        layer.in = widths[l];
        layer.out = widths[l + 1];
        layer.weights.resize(layer.in * layer.out);
        const double a = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        for (auto& w : layer.weights) w = rng.uniform(-a, a);
        if (has_bias) layer.biases.assign(layer.out, 0.0);
    }
    return net;
}

std::vector<std::vector<double>> forward(const DenseNet& net, const std::vector<double>& x) {
    if (x.size() != net.widths.front()) {
        throw DataError("ShapeMismatch: input width " + std::to_string(x.size()) +
                        ", net expects " + std::to_string(net.widths.front()));
    }
    std::vector<std::vector<double>> acts;
    forward_into(net, x.data(), acts);
    for (const auto& layer : acts) {
        for (double v : layer) {
            if (!std::isfinite(v)) throw NumericError("NonFinite: activation is not finite");
        }
    }
    return acts;
}

Gradients backward(const DenseNet& net, const std::vector<double>& x,
                   const std::vector<double>& output_grad) {
    if (x.size() != net.widths.front() || output_grad.size() != net.widths.back()) {
        throw DataError("ShapeMismatch: input or output gradient width does not match the net");
    }
    std::vector<std::vector<double>> acts = forward(net, x);
    Gradients g = zero_gradients(net);
    std::vector<double> delta;
    backward_into(net, acts, output_grad, g, delta);
    return g;
}

void snap_center(std::vector<double>& center) {
    for (double& c : center) {
        if (std::abs(c) < 0.1) c = c < 0.0 ? -0.1 : 0.1;
    }
}

AnomalyModel train_autoencoder(const Matrix& x, const TrainConfig& config, std::uint64_t seed,
                               std::size_t bottleneck) {
    check_train_input(x, config);
    const std::size_t d = x.cols;
    const std::size_t b = bottleneck > 0 ? bottleneck : std::max<std::size_t>(2, d / 4);
    const std::size_t h = std::max(b, d / 2);

    Rng rng(seed);
    AutoEncModel m;
    m.config = config;
    m.net = make_dense_net({d, h, b, h, d}, true, rng);
    m.epoch_loss = run_training(m.net, x, config, Objective::Reconstruction, {}, rng);

    AnomalyModel out;
    out.kind = ModelKind::AutoEnc;
    out.train_dim = d;
    out.seed = seed;
    out.payload = std::move(m);
    return out;
}

AnomalyModel train_deepsvdd(const Matrix& x, const TrainConfig& config, std::uint64_t seed,
                            std::size_t embed_dim) {
    check_train_input(x, config);
    const std::size_t d = x.cols;
    const std::size_t e = embed_dim > 0 ? embed_dim : std::max<std::size_t>(2, d / 4);
    const std::size_t h = std::max(e, d / 2);

    Rng rng(seed);
    DeepSvddModel m;
    m.config = config;
    m.net = make_dense_net({d, h, e}, false, rng);

    // fixed pull target: mean embedding of the untrained net, snapped away
    // from zero so the net cannot collapse onto the center
    m.center.assign(e, 0.0);
    std::vector<std::vector<double>> acts;
    for (std::size_t r = 0; r < x.rows; ++r) {
        forward_into(m.net, x.row(r), acts);
        for (std::size_t j = 0; j < e; ++j) m.center[j] += acts.back()[j];
    }
    for (auto& c : m.center) c /= static_cast<double>(x.rows);
    snap_center(m.center);

    m.epoch_loss = run_training(m.net, x, config, Objective::CenterPull, m.center, rng);

    AnomalyModel out;
    out.kind = ModelKind::DeepSvdd;
    out.train_dim = d;
    out.seed = seed;
    out.payload = std::move(m);
    return out;
}

std::vector<double> score_rows(const AutoEncModel& m, const Matrix& x) {
    std::vector<double> out(x.rows);
    std::vector<std::vector<double>> acts;
    for (std::size_t r = 0; r < x.rows; ++r) {
        forward_into(m.net, x.row(r), acts);
        const double* row = x.row(r);
        double acc = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double err = acts.back()[j] - row[j];
            acc += err * err;
        }
        out[r] = acc / static_cast<double>(x.cols);
    }
    return out;
}

std::vector<double> score_rows(const DeepSvddModel& m, const Matrix& x) {
    std::vector<double> out(x.rows);
    std::vector<std::vector<double>> acts;
    for (std::size_t r = 0; r < x.rows; ++r) {
        forward_into(m.net, x.row(r), acts);
        double acc = 0.0;
        for (std::size_t j = 0; j < m.center.size(); ++j) {
            const double err = acts.back()[j] - m.center[j];
            acc += err * err;
        }
        out[r] = acc;
    }
    return out;
}

} // namespace vibench
