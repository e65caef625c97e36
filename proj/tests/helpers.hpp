#pragma once

#include <cstddef>
#include <vector>

#include "qubrain/circuit.hpp"
#include "qubrain/random.hpp"

namespace qubrain::testing {

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

/// Random circuit over the supported gate set with sequentially indexed
/// rotation parameters; used by the gradient cross-checks.
inline qsim::CircuitSpec random_circuit(Rng& rng, std::size_t n_qubits, std::size_t n_gates,
                                        qsim::Embedding embedding, qsim::OutputKind output) {
    qsim::CircuitSpec spec;
    spec.n_qubits = n_qubits;
    spec.embedding = embedding;
    spec.output = output;
    std::size_t next_param = 0;
    for (std::size_t i = 0; i < n_gates; ++i) {
        const std::uint64_t pick = rng.bounded(n_qubits >= 2 ? 5 : 3);
        qsim::GateOp g;
        switch (pick) {
            case 0: g.kind = qsim::GateKind::RX; break;
            case 1: g.kind = qsim::GateKind::RY; break;
            case 2: g.kind = qsim::GateKind::RZ; break;
            case 3: g.kind = qsim::GateKind::CZ; break;
            default: g.kind = qsim::GateKind::CNOT; break;
        }
        g.wire0 = rng.bounded(n_qubits);
        if (g.is_rotation()) {
            g.param_index = next_param++;
        } else {
            do {
                g.wire1 = rng.bounded(n_qubits);
            } while (g.wire1 == g.wire0);
        }
        spec.gates.push_back(g);
    }
    if (next_param == 0) {  // keep at least one trainable angle
        spec.gates.push_back({qsim::GateKind::RY, 0, 0, 0.0, std::size_t{0}});
    }
    return spec;
}

}  // namespace qubrain::testing
