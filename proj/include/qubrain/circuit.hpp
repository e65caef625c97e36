#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qubrain/statevector.hpp"

// Parameterized circuits over the RX/RY/RZ/CZ/CNOT gate set, with exact
// gradients: an adjoint reverse sweep for the production path and the
// two-point parameter-shift rule kept as an independent oracle.

namespace qubrain::qsim {

enum class GateKind { RX, RY, RZ, CZ, CNOT };

struct GateOp {
    GateKind kind;
    std::size_t wire0 = 0;
    std::size_t wire1 = 0;  // second wire of CZ/CNOT
    double theta = 0.0;     // fixed angle when param_index is absent
    std::optional<std::size_t> param_index;

    bool is_rotation() const { return kind == GateKind::RX || kind == GateKind::RY || kind == GateKind::RZ; }
};

enum class Embedding { Amplitude, Angle };
enum class OutputKind { ZExpectations, Probabilities };

struct CircuitSpec {
    std::size_t n_qubits = 0;
    Embedding embedding = Embedding::Amplitude;
    std::vector<GateOp> gates;
    OutputKind output = OutputKind::ZExpectations;

    std::size_t output_dim() const {
        return output == OutputKind::ZExpectations ? n_qubits : (std::size_t{1} << n_qubits);
    }

    /// Number of trainable parameters; indices must cover 0..P-1 without gaps.
    std::size_t n_params() const {
        std::vector<bool> seen;
        for (const GateOp& g : gates) {
            if (!g.param_index) continue;
            if (*g.param_index >= seen.size()) seen.resize(*g.param_index + 1, false);
            seen[*g.param_index] = true;
        }
        for (std::size_t i = 0; i < seen.size(); ++i)
            if (!seen[i])
                throw std::logic_error("CircuitSpec: parameter index " + std::to_string(i) + " is never used");
        return seen.size();
    }

    void validate() const {
        for (const GateOp& g : gates) {
            if (g.wire0 >= n_qubits || (!g.is_rotation() && g.wire1 >= n_qubits))
                throw std::out_of_range("CircuitSpec: gate wire out of range");
            if (!g.is_rotation() && g.wire0 == g.wire1)
                throw std::invalid_argument("CircuitSpec: two-qubit gate with identical wires");
        }
        (void)n_params();
    }
};

/// Per layer: RX, RY, RZ on every qubit, then a CZ ring (i, i+1 mod n).
/// Parameters laid out [layer][qubit][rotation], row-major.
inline std::vector<GateOp> rot_cz_ansatz_gates(std::size_t n_qubits, std::size_t layers) {
    std::vector<GateOp> gates;
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t q = 0; q < n_qubits; ++q) {
            const std::size_t base = (l * n_qubits + q) * 3;
            gates.push_back({GateKind::RX, q, 0, 0.0, base + 0});
            gates.push_back({GateKind::RY, q, 0, 0.0, base + 1});
            gates.push_back({GateKind::RZ, q, 0, 0.0, base + 2});
        }
        if (n_qubits >= 2)
            for (std::size_t q = 0; q < n_qubits; ++q)
                gates.push_back({GateKind::CZ, q, (q + 1) % n_qubits, 0.0, std::nullopt});
    }
    return gates;
}

/// Per layer: RX on every qubit, then a CNOT ring (i -> i+1 mod n).
/// Parameters laid out [layer][qubit].
inline std::vector<GateOp> basic_entangler_gates(std::size_t n_qubits, std::size_t layers) {
    std::vector<GateOp> gates;
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t q = 0; q < n_qubits; ++q)
            gates.push_back({GateKind::RX, q, 0, 0.0, l * n_qubits + q});
        if (n_qubits >= 2)
            for (std::size_t q = 0; q < n_qubits; ++q)
                gates.push_back({GateKind::CNOT, q, (q + 1) % n_qubits, 0.0, std::nullopt});
    }
    return gates;
}

namespace detail {

inline double gate_angle(const GateOp& g, std::span<const double> params) {
    if (!g.param_index) return g.theta;
    if (*g.param_index >= params.size())
        throw std::out_of_range("circuit: parameter index " + std::to_string(*g.param_index) +
                                " exceeds parameter vector of length " + std::to_string(params.size()));
    return params[*g.param_index];
}

inline void apply_gate(StateVector& state, const GateOp& g, std::span<const double> params, bool inverse = false) {
    const double sign = inverse ? -1.0 : 1.0;
    switch (g.kind) {
        case GateKind::RX: state.apply_rx(g.wire0, sign * gate_angle(g, params)); break;
        case GateKind::RY: state.apply_ry(g.wire0, sign * gate_angle(g, params)); break;
        case GateKind::RZ: state.apply_rz(g.wire0, sign * gate_angle(g, params)); break;
        case GateKind::CZ: state.apply_cz(g.wire0, g.wire1); break;
        case GateKind::CNOT: state.apply_cnot(g.wire0, g.wire1); break;
    }
}

inline char rotation_axis(GateKind k) {
    switch (k) {
        case GateKind::RX: return 'X';
        case GateKind::RY: return 'Y';
        case GateKind::RZ: return 'Z';
        default: throw std::invalid_argument("parameterized gate is not a rotation");
    }
}

inline Complex inner(std::span<const Complex> a, std::span<const Complex> b) {
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

}  // namespace detail

inline StateVector embed_input(const CircuitSpec& spec, std::span<const double> input) {
    return spec.embedding == Embedding::Amplitude ? amplitude_embed(input, spec.n_qubits)
                                                  : angle_embed(input, spec.n_qubits);
}

inline std::vector<double> measure(const StateVector& state, OutputKind kind) {
    return kind == OutputKind::ZExpectations ? state.expval_z_all() : state.probabilities();
}

inline std::vector<double> run_circuit(const CircuitSpec& spec, std::span<const double> params,
                                       std::span<const double> input) {
    StateVector state = embed_input(spec, input);
    for (const GateOp& g : spec.gates) detail::apply_gate(state, g, params);
    return measure(state, spec.output);
}

struct CircuitVjp {
    std::vector<double> param_grads;  // d(upstream . output)/d(params)
    std::vector<double> input_grads;  // same, w.r.t. features (Amplitude) or angles (Angle)
};

/// Exact vector-Jacobian product by one reverse (adjoint) sweep over the gate
/// sequence: O(gates * 2^n).  The cotangent lambda carries dL/d(psi) through
/// inverted gates; each rotation contributes Im<lambda|P|psi> with P its
/// Pauli generator.  Amplitude-embedded inputs chain through the Jacobian of
/// x -> x/||x||; angle-embedded inputs are handled as leading RX gates.
inline CircuitVjp circuit_vjp(const CircuitSpec& spec, std::span<const double> params,
                              std::span<const double> input, std::span<const double> upstream) {
    if (upstream.size() != spec.output_dim())
        throw std::invalid_argument("circuit_vjp: upstream length " + std::to_string(upstream.size()) +
                                    " does not match output dimension " + std::to_string(spec.output_dim()));
    const std::size_t dim = std::size_t{1} << spec.n_qubits;

    StateVector psi = embed_input(spec, input);
    for (const GateOp& g : spec.gates) detail::apply_gate(psi, g, params);

    // lambda = d(upstream . output)/d(psi*), conjugated: a diagonal scaling
    // of the final state for both output kinds.
    StateVector lambda(spec.n_qubits, std::vector<Complex>(dim, Complex{0.0, 0.0}));
    {
        auto lam = lambda.amplitudes();
        auto fin = psi.amplitudes();
        if (spec.output == OutputKind::ZExpectations) {
            for (std::size_t b = 0; b < dim; ++b) {
                double w = 0.0;
                for (std::size_t q = 0; q < spec.n_qubits; ++q) w += ((b >> q) & 1) ? -upstream[q] : upstream[q];
                lam[b] = w * fin[b];
            }
        } else {
            for (std::size_t b = 0; b < dim; ++b) lam[b] = upstream[b] * fin[b];
        }
    }

    CircuitVjp out;
    out.param_grads.assign(params.size(), 0.0);

    auto rotation_grad = [&](const GateOp& g) {
        StateVector phi = psi;
        phi.apply_pauli(detail::rotation_axis(g.kind), g.wire0);
        return detail::inner(lambda.amplitudes(), phi.amplitudes()).imag();
    };

    for (std::size_t t = spec.gates.size(); t-- > 0;) {
        const GateOp& g = spec.gates[t];
        if (g.param_index) out.param_grads[*g.param_index] += rotation_grad(g);
        detail::apply_gate(psi, g, params, /*inverse=*/true);
        detail::apply_gate(lambda, g, params, /*inverse=*/true);
    }

    if (spec.embedding == Embedding::Angle) {
        out.input_grads.assign(spec.n_qubits, 0.0);
        for (std::size_t q = spec.n_qubits; q-- > 0;) {
            GateOp emb{GateKind::RX, q, 0, input[q], std::nullopt};
            StateVector phi = psi;
            phi.apply_pauli('X', q);
            out.input_grads[q] = detail::inner(lambda.amplitudes(), phi.amplitudes()).imag();
            detail::apply_gate(psi, emb, {}, true);
            detail::apply_gate(lambda, emb, {}, true);
        }
    } else {
        // psi is back to the embedded state x/||x||, which is real.
        double sq = 0.0;
        for (double f : input) sq += f * f;
        const double nrm = std::sqrt(sq);
        auto lam = lambda.amplitudes();
        auto emb = psi.amplitudes();
        double dot = 0.0;
        for (std::size_t b = 0; b < dim; ++b) dot += 2.0 * lam[b].real() * emb[b].real();
        out.input_grads.assign(input.size(), 0.0);
        for (std::size_t j = 0; j < input.size(); ++j)
            out.input_grads[j] = (2.0 * lam[j].real() - dot * emb[j].real()) / nrm;
    }
    return out;
}

/// Two-point parameter-shift rule: for each parameter k and output component
/// j, [out_j(theta_k + pi/2) - out_j(theta_k - pi/2)] / 2.  Exact for
/// rotation gates; rejects any parameterized non-rotation gate.
inline std::vector<std::vector<double>> parameter_shift_grad(const CircuitSpec& spec,
                                                             std::span<const double> params,
                                                             std::span<const double> input) {
    for (const GateOp& g : spec.gates)
        if (g.param_index && !g.is_rotation())
            throw std::invalid_argument("parameter_shift_grad: parameterized gate is not a rotation");
    const double half_pi = 1.5707963267948966;
    std::vector<std::vector<double>> jac(params.size());
    std::vector<double> shifted(params.begin(), params.end());
    for (std::size_t k = 0; k < params.size(); ++k) {
        shifted[k] = params[k] + half_pi;
        const std::vector<double> plus = run_circuit(spec, shifted, input);
        shifted[k] = params[k] - half_pi;
        const std::vector<double> minus = run_circuit(spec, shifted, input);
        shifted[k] = params[k];
        jac[k].resize(plus.size());
        for (std::size_t j = 0; j < plus.size(); ++j) jac[k][j] = 0.5 * (plus[j] - minus[j]);
    }
    return jac;
}

}  // namespace qubrain::qsim
