#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qubrain/circuit.hpp"
#include "qubrain/layers.hpp"
#include "qubrain/tensor.hpp"

// Bridges between the autodiff tape and the statevector simulator: a batched
// circuit node plus the two quantum cells (QLIF and the gate-VQC LSTM cell).

namespace qubrain::models {

using autodiff::Parameter;
using autodiff::Shape;
using autodiff::Tape;
using autodiff::Tensor;

/// Evaluates one circuit per batch row: inputs [batch x in_dim] are the
/// embedded features (Amplitude) or angles (Angle), `params` the flat
/// trainable angle vector.  Backward runs the adjoint sweep per row and
/// accumulates parameter gradients in sample order.
inline Tensor circuit_op(Tape& t, const qsim::CircuitSpec& spec, const Tensor& inputs, const Tensor& params) {
    if (inputs.tape() != &t || params.tape() != &t)
        throw std::logic_error("circuit_op: operands belong to different tapes");
    const Shape& si = inputs.shape();
    if (si.size() != 2) throw std::invalid_argument("circuit_op: inputs must be [batch x features]");
    const std::size_t batch = si[0], in_dim = si[1];
    const std::size_t out_dim = spec.output_dim();

    std::vector<double> out(batch * out_dim);
    for (std::size_t r = 0; r < batch; ++r) {
        const std::span<const double> row(inputs.value().data() + r * in_dim, in_dim);
        const auto result = qsim::run_circuit(spec, params.value(), row);
        std::copy(result.begin(), result.end(), out.begin() + static_cast<std::ptrdiff_t>(r * out_dim));
    }

    const bool rg = t.node(inputs.id()).requires_grad || t.node(params.id()).requires_grad;
    if (!rg) return t.constant(std::move(out), Shape{batch, out_dim});
    const std::size_t ii = inputs.id(), ip = params.id();
    // spec captured by value: the node may outlive the caller's circuit object
    return t.make_node(Shape{batch, out_dim}, std::move(out), true,
                       [spec, ii, ip, batch, in_dim, out_dim](Tape& tp, const std::vector<double>& g) {
                           Tape::Node& ni = tp.node(ii);
                           Tape::Node& np = tp.node(ip);
                           for (std::size_t r = 0; r < batch; ++r) {
                               const std::span<const double> row(ni.value.data() + r * in_dim, in_dim);
                               const std::span<const double> upstream(g.data() + r * out_dim, out_dim);
                               const auto vjp = qsim::circuit_vjp(spec, np.value, row, upstream);
                               if (ni.requires_grad)
                                   for (std::size_t j = 0; j < in_dim; ++j)
                                       ni.grad[r * in_dim + j] += vjp.input_grads[j];
                               if (np.requires_grad)
                                   for (std::size_t k = 0; k < np.value.size(); ++k)
                                       np.grad[k] += vjp.param_grads[k];
                           }
                       });
}

/// Cyclic column tiling: out[:, j] = x[:, j mod k], built from concat/slice so
/// the gradient scatters back onto the source columns.
inline Tensor tile_cols([[maybe_unused]] Tape& t, const Tensor& x, std::size_t d) {
    const std::size_t k = x.shape()[1];
    if (d <= k) return d == k ? x : slice(x, 0, d, 1);
    const std::size_t copies = (d + k - 1) / k;
    std::vector<Tensor> parts(copies, x);
    Tensor tiled = concat(parts, 1);
    return copies * k == d ? tiled : slice(tiled, 0, d, 1);
}

/// Leaky integrate-and-fire cell whose initial membrane potential is produced
/// by a one-layer Rot-CZ circuit over the amplitude-embedded first input
/// current; every later step is the classical membrane update.  Disabling
/// `use_vqc_init` zeroes the initial membrane, which reduces the cell to a
/// plain LIF (the ablation identity used in tests).
struct QLifCell {
    nn::LIFConfig cfg;
    std::size_t dim;       // neuron count d
    std::size_t n_qubits;  // per-qubit Z expectations are tiled up to d
    Parameter vqc;         // [1 x n_qubits x 3]
    qsim::CircuitSpec spec;
    bool use_vqc_init = true;

    QLifCell() = default;
    QLifCell(std::size_t dim_, Rng& rng, nn::LIFConfig cfg_ = {}, std::size_t n_qubits_ = 5)
        : cfg(cfg_), dim(dim_), n_qubits(n_qubits_) {
        cfg.validate();
        const double two_pi = 6.283185307179586476925286766559;
        vqc = Parameter::uniform({1, n_qubits, 3}, 0.0, two_pi, rng);
        spec.n_qubits = n_qubits;
        spec.embedding = qsim::Embedding::Amplitude;
        spec.gates = qsim::rot_cz_ansatz_gates(n_qubits, 1);
        spec.output = qsim::OutputKind::ZExpectations;
    }

    /// First call per sequence passes std::nullopt; the VQC then sets U0 from
    /// the step-0 input current and the step proceeds as lif_step.
    std::pair<nn::LIFState, Tensor> step(Tape& t, const std::optional<nn::LIFState>& state, const Tensor& input,
                                         nn::SpikeMode mode = nn::SpikeMode::Binary) {
        if (state.has_value()) return nn::lif_step(t, *state, input, cfg, mode);
        const std::size_t batch = input.shape()[0];
        nn::LIFState init{Tensor{}, t.zeros({batch, dim})};
        if (use_vqc_init) {
            Tensor z = circuit_op(t, spec, input, t.param(vqc));
            init.membrane = tile_cols(t, z, dim);
        } else {
            init.membrane = t.zeros({batch, dim});
        }
        return nn::lif_step(t, init, input, cfg, mode);
    }
};

/// LSTM cell whose four gates are measured circuit outputs: the concat-sized
/// input is projected to one angle per qubit, each gate runs its own
/// basic-entangler circuit, and a projection shared by all four gates maps
/// the Z expectations back to the hidden size.
struct QLstmCell {
    std::size_t concat_dim = 0;
    std::size_t hidden = 0;
    std::size_t n_qubits = 5;
    nn::LinearLayer in_proj;   // concat -> n_qubits
    nn::LinearLayer out_proj;  // n_qubits -> hidden, shared
    Parameter gate_forget;     // each [layers x n_qubits]
    Parameter gate_input;
    Parameter gate_update;
    Parameter gate_output;
    qsim::CircuitSpec spec;

    QLstmCell() = default;
    QLstmCell(std::size_t concat_dim_, std::size_t hidden_, std::size_t layers, Rng& rng,
              std::size_t n_qubits_ = 5)
        : concat_dim(concat_dim_),
          hidden(hidden_),
          n_qubits(n_qubits_),
          in_proj(concat_dim_, n_qubits_, rng),
          out_proj(n_qubits_, hidden_, rng) {
        if (concat_dim_ <= hidden_)
            throw std::invalid_argument("QLstmCell: concat size must exceed the hidden size");
        const double two_pi = 6.283185307179586476925286766559;
        gate_forget = Parameter::uniform({layers, n_qubits}, 0.0, two_pi, rng);
        gate_input = Parameter::uniform({layers, n_qubits}, 0.0, two_pi, rng);
        gate_update = Parameter::uniform({layers, n_qubits}, 0.0, two_pi, rng);
        gate_output = Parameter::uniform({layers, n_qubits}, 0.0, two_pi, rng);
        spec.n_qubits = n_qubits_;
        spec.embedding = qsim::Embedding::Angle;
        spec.gates = qsim::basic_entangler_gates(n_qubits_, layers);
        spec.output = qsim::OutputKind::ZExpectations;
    }

    /// x_vec is already projected to the concat size; the previous hidden
    /// state enters additively through its trailing slots.
    nn::LSTMStep step(Tape& t, const Tensor& x_vec, const Tensor& h_prev, const Tensor& c_prev) {
        const std::size_t batch = x_vec.shape()[0];
        Tensor zeros = t.zeros({batch, concat_dim - hidden});
        Tensor v = autodiff::add(x_vec, autodiff::concat({zeros, h_prev}, 1));
        Tensor z = in_proj.forward(t, v);

        auto gate = [&](Parameter& p) { return out_proj.forward(t, circuit_op(t, spec, z, t.param(p))); };
        Tensor f = autodiff::sigmoid(gate(gate_forget));
        Tensor i = autodiff::sigmoid(gate(gate_input));
        Tensor c_tilde = autodiff::tanh(gate(gate_update));
        Tensor c = autodiff::add(autodiff::mul(f, c_prev), autodiff::mul(i, c_tilde));
        Tensor o = autodiff::sigmoid(gate(gate_output));
        Tensor h = autodiff::mul(o, autodiff::tanh(c));
        return {h, c};
    }

    std::size_t circuit_param_count() const {
        return gate_forget.size() + gate_input.size() + gate_update.size() + gate_output.size();
    }
};

}  // namespace qubrain::models
