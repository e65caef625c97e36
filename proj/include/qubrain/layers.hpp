#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qubrain/random.hpp"
#include "qubrain/tensor.hpp"

// Classical building blocks: linear layers, leaky integrate-and-fire neurons
// with surrogate gradients, the LSTM cell, and the spike-count loss head.

namespace qubrain::nn {

using autodiff::Parameter;
using autodiff::Tape;
using autodiff::Tensor;
using autodiff::add;
using autodiff::concat;
using autodiff::cross_entropy;
using autodiff::map_unary;
using autodiff::matmul_nt;
using autodiff::mul;
using autodiff::offset;
using autodiff::scale;
using autodiff::sigmoid;
using autodiff::sub;

struct LinearLayer {
    Parameter weight;  // [out x in]
    Parameter bias;    // [out]

    LinearLayer() = default;

    /// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
    LinearLayer(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
        weight = Parameter::uniform({out_dim, in_dim}, -bound, bound, rng);
        bias = Parameter::uniform({out_dim}, -bound, bound, rng);
    }

    Tensor forward(Tape& t, const Tensor& x) { return autodiff::linear(x, t.param(weight), t.param(bias)); }

    std::size_t in_dim() const { return weight.shape[1]; }
    std::size_t out_dim() const { return weight.shape[0]; }
    std::size_t param_count() const { return weight.size() + bias.size(); }
};

/// Membrane decay rate over one simulation step: beta = e^(-dt/tau).
inline double beta_from_tau(double delta_t, double tau) {
    if (delta_t <= 0.0 || tau <= 0.0)
        throw std::domain_error("beta_from_tau: delta_t and tau must be positive");
    return std::exp(-delta_t / tau);
}

struct LIFConfig {
    double beta = 0.95;
    double threshold = 1.0;
    double surrogate_alpha = 2.0;

    void validate() const {
        if (beta <= 0.0 || beta >= 1.0) throw std::domain_error("LIFConfig: beta must lie in (0, 1)");
        if (threshold <= 0.0) throw std::domain_error("LIFConfig: threshold must be positive");
        if (surrogate_alpha <= 0.0) throw std::domain_error("LIFConfig: surrogate_alpha must be positive");
    }
};

/// Binary: Heaviside forward (the production path).  Smooth: an arctan
/// forward whose true derivative equals the surrogate, making whole-model
/// finite-difference checks meaningful.
enum class SpikeMode { Binary, Smooth };

/// Forward Heaviside(u), backward g(u) = (alpha/2) / (1 + (pi*(alpha/2)*u)^2)
/// evaluated at u = U - threshold.  g is even, strictly positive and peaks at
/// alpha/2, so the spike path never kills the learning signal.
inline Tensor surrogate_spike(const Tensor& u_minus_theta, double alpha, SpikeMode mode = SpikeMode::Binary) {
    const double half = alpha / 2.0;
    const double pi = 3.141592653589793238462643383279502884;
    auto grad = [half, pi](double u) {
        const double z = pi * half * u;
        return half / (1.0 + z * z);
    };
    if (mode == SpikeMode::Binary)
        return map_unary(
            u_minus_theta, [](double u) { return u > 0.0 ? 1.0 : 0.0; }, grad);
    return map_unary(
        u_minus_theta, [half, pi](double u) { return std::atan(pi * half * u) / pi + 0.5; }, grad);
}

struct LIFState {
    Tensor membrane;     // U(t)
    Tensor spikes_prev;  // S_out(t-1), binary
};

inline LIFState lif_init(Tape& t, autodiff::Shape shape) {
    return {t.zeros(shape), t.zeros(std::move(shape))};
}

namespace detail {

/// Fused membrane update U' = beta*U + I - theta*S_prev (one tape node; the
/// 25-step unrolls make this the hottest op in the spiking models).
inline Tensor membrane_update(Tape& t, const Tensor& u, const Tensor& input, const Tensor& s_prev, double beta,
                              double theta) {
    if (u.shape() != input.shape()) autodiff::dim_error("lif_step", u.shape(), input.shape());
    if (u.shape() != s_prev.shape()) autodiff::dim_error("lif_step", u.shape(), s_prev.shape());
    const std::size_t n = autodiff::numel(u.shape());
    std::vector<double> value(n);
    for (std::size_t i = 0; i < n; ++i)
        value[i] = beta * u.value()[i] + input.value()[i] - theta * s_prev.value()[i];
    const bool rg = t.node(u.id()).requires_grad || t.node(input.id()).requires_grad ||
                    t.node(s_prev.id()).requires_grad;
    if (!rg) return t.constant(std::move(value), u.shape());
    const std::size_t iu = u.id(), ii = input.id(), is = s_prev.id();
    return t.make_node(u.shape(), std::move(value), true,
                       [iu, ii, is, beta, theta, n](Tape& tp, const std::vector<double>& g) {
                           Tape::Node& nu = tp.node(iu);
                           Tape::Node& ni = tp.node(ii);
                           Tape::Node& ns = tp.node(is);
                           if (nu.requires_grad)
                               for (std::size_t i = 0; i < n; ++i) nu.grad[i] += beta * g[i];
                           if (ni.requires_grad)
                               for (std::size_t i = 0; i < n; ++i) ni.grad[i] += g[i];
                           if (ns.requires_grad)
                               for (std::size_t i = 0; i < n; ++i) ns.grad[i] -= theta * g[i];
                       });
}

}  // namespace detail

/// One membrane update with reset-by-subtraction:
///     U' = beta*U + I - S_prev*theta,   S = 1 where U' > theta.
/// The spike decision uses the post-update membrane.
inline std::pair<LIFState, Tensor> lif_step(Tape& t, const LIFState& state, const Tensor& input,
                                            const LIFConfig& cfg, SpikeMode mode = SpikeMode::Binary) {
    Tensor membrane = detail::membrane_update(t, state.membrane, input, state.spikes_prev, cfg.beta, cfg.threshold);
    const double theta = cfg.threshold;
    const double half = cfg.surrogate_alpha / 2.0;
    const double pi = 3.141592653589793238462643383279502884;
    auto grad = [half, pi, theta](double u) {
        const double z = pi * half * (u - theta);
        return half / (1.0 + z * z);
    };
    Tensor spikes = mode == SpikeMode::Binary
                        ? map_unary(
                              membrane, [theta](double u) { return u > theta ? 1.0 : 0.0; }, grad)
                        : map_unary(
                              membrane,
                              [half, pi, theta](double u) { return std::atan(pi * half * (u - theta)) / pi + 0.5; },
                              grad);
    return {LIFState{membrane, spikes}, spikes};
}

struct LSTMCellWeights {
    LinearLayer forget;  // each gate: [hidden x (in + hidden)]
    LinearLayer input;
    LinearLayer update;
    LinearLayer output;

    LSTMCellWeights() = default;
    LSTMCellWeights(std::size_t in_dim, std::size_t hidden, Rng& rng)
        : forget(in_dim + hidden, hidden, rng),
          input(in_dim + hidden, hidden, rng),
          update(in_dim + hidden, hidden, rng),
          output(in_dim + hidden, hidden, rng) {}

    std::size_t param_count() const {
        return forget.param_count() + input.param_count() + update.param_count() + output.param_count();
    }
};

struct LSTMStep {
    Tensor h;
    Tensor c;
};

/// v = [x, h_prev]; f,i,o = sigmoid gates; c~ = tanh candidate;
/// c = f (.) c_prev + i (.) c~; h = o (.) tanh(c).
inline LSTMStep lstm_cell_step(Tape& t, const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                               LSTMCellWeights& w) {
    Tensor v = concat({x, h_prev}, 1);
    Tensor f = sigmoid(w.forget.forward(t, v));
    Tensor i = sigmoid(w.input.forward(t, v));
    Tensor c_tilde = autodiff::tanh(w.update.forward(t, v));
    Tensor c = add(mul(f, c_prev), mul(i, c_tilde));
    Tensor o = sigmoid(w.output.forward(t, v));
    Tensor h = mul(o, autodiff::tanh(c));
    return {h, c};
}

/// Softmax of each row, computed outside the tape (scoring only).
inline std::vector<double> softmax_rows(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
    std::vector<double> out(values.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = values.data() + r * cols;
        double mx = row[0];
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) z += std::exp(row[c] - mx);
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = std::exp(row[c] - mx) / z;
    }
    return out;
}

struct SpikeCountLoss {
    Tensor loss;                 // cross-entropy over accumulated spike counts
    Tensor counts;               // [batch x 2]
    std::vector<double> scores;  // softmax(counts)[:, 1], the anomaly score
};

/// Rate decoding: spike counts accumulated over the step record feed a
/// two-class cross-entropy; the class-1 softmax is used for ranking metrics.
inline SpikeCountLoss spike_count_ce([[maybe_unused]] Tape& t, const std::vector<Tensor>& step_spikes,
                                     const std::vector<int>& labels) {
    if (step_spikes.empty()) throw std::invalid_argument("spike_count_ce: empty spike record");
    const autodiff::Shape& s = step_spikes.front().shape();
    if (s.size() != 2 || s[1] != 2)
        throw std::invalid_argument("spike_count_ce: expected [batch x 2] spikes, got " + autodiff::shape_str(s));
    Tensor counts = step_spikes.front();
    for (std::size_t i = 1; i < step_spikes.size(); ++i) counts = add(counts, step_spikes[i]);
    Tensor loss = cross_entropy(counts, labels);
    const std::size_t batch = s[0];
    const std::vector<double> soft = softmax_rows(counts.value(), batch, 2);
    std::vector<double> scores(batch);
    for (std::size_t r = 0; r < batch; ++r) scores[r] = soft[r * 2 + 1];
    return {loss, counts, std::move(scores)};
}

}  // namespace qubrain::nn
