#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Exact statevector simulation of small qubit registers.  Basis ordering is
// little-endian: qubit 0 is the least significant bit of the basis index, so
// |q1 q0> = |10> occupies amplitude index 2.

namespace qubrain::qsim {

using Complex = std::complex<double>;

class StateVector {
  public:
    explicit StateVector(std::size_t n_qubits)
        : n_qubits_(n_qubits), amp_(std::size_t{1} << n_qubits, Complex{0.0, 0.0}) {
        amp_[0] = Complex{1.0, 0.0};
    }

    StateVector(std::size_t n_qubits, std::vector<Complex> amplitudes)
        : n_qubits_(n_qubits), amp_(std::move(amplitudes)) {
        if (amp_.size() != (std::size_t{1} << n_qubits))
            throw std::invalid_argument("StateVector: amplitude count does not match qubit count");
    }

    std::size_t n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return amp_.size(); }
    std::span<const Complex> amplitudes() const { return amp_; }
    std::span<Complex> amplitudes() { return amp_; }

    double norm() const {
        double acc = 0.0;
        for (const Complex& a : amp_) acc += std::norm(a);
        return std::sqrt(acc);
    }

    void apply_rx(std::size_t wire, double theta) {
        const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
        apply_single(wire, Complex{c, 0.0}, Complex{0.0, -s}, Complex{0.0, -s}, Complex{c, 0.0});
    }

    void apply_ry(std::size_t wire, double theta) {
        const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
        apply_single(wire, Complex{c, 0.0}, Complex{-s, 0.0}, Complex{s, 0.0}, Complex{c, 0.0});
    }

    void apply_rz(std::size_t wire, double theta) {
        const Complex e0{std::cos(theta / 2.0), -std::sin(theta / 2.0)};
        const Complex e1 = std::conj(e0);
        check_wire(wire);
        const std::size_t bit = std::size_t{1} << wire;
        for (std::size_t i = 0; i < amp_.size(); ++i) amp_[i] *= (i & bit) ? e1 : e0;
    }

    /// Sign flip on |11> of the wire pair; symmetric in its arguments.
    void apply_cz(std::size_t a, std::size_t b) {
        check_pair(a, b);
        const std::size_t mask = (std::size_t{1} << a) | (std::size_t{1} << b);
        for (std::size_t i = 0; i < amp_.size(); ++i)
            if ((i & mask) == mask) amp_[i] = -amp_[i];
    }

    void apply_cnot(std::size_t control, std::size_t target) {
        check_pair(control, target);
        const std::size_t cbit = std::size_t{1} << control;
        const std::size_t tbit = std::size_t{1} << target;
        for (std::size_t i = 0; i < amp_.size(); ++i)
            if ((i & cbit) && !(i & tbit)) std::swap(amp_[i], amp_[i | tbit]);
    }

    /// Applies the Pauli generator of a rotation axis on one wire (X, Y or Z).
    /// Used by the adjoint differentiation sweep.
    void apply_pauli(char axis, std::size_t wire) {
        switch (axis) {
            case 'X':
                apply_single(wire, Complex{0, 0}, Complex{1, 0}, Complex{1, 0}, Complex{0, 0});
                break;
            case 'Y':
                apply_single(wire, Complex{0, 0}, Complex{0, -1}, Complex{0, 1}, Complex{0, 0});
                break;
            case 'Z': {
                check_wire(wire);
                const std::size_t bit = std::size_t{1} << wire;
                for (std::size_t i = 0; i < amp_.size(); ++i)
                    if (i & bit) amp_[i] = -amp_[i];
                break;
            }
            default: throw std::invalid_argument(std::string("apply_pauli: unknown axis ") + axis);
        }
    }

    /// <Z_i> for every qubit i; each component lies in [-1, 1].
    std::vector<double> expval_z_all() const {
        std::vector<double> out(n_qubits_, 0.0);
        for (std::size_t i = 0; i < amp_.size(); ++i) {
            const double p = std::norm(amp_[i]);
            for (std::size_t q = 0; q < n_qubits_; ++q) out[q] += (i >> q) & 1 ? -p : p;
        }
        return out;
    }

    /// |amplitude|^2 per basis state.
    std::vector<double> probabilities() const {
        std::vector<double> out(amp_.size());
        for (std::size_t i = 0; i < amp_.size(); ++i) out[i] = std::norm(amp_[i]);
        return out;
    }

  private:
    void check_wire(std::size_t wire) const {
        if (wire >= n_qubits_)
            throw std::out_of_range("gate wire " + std::to_string(wire) + " out of range for " +
                                    std::to_string(n_qubits_) + " qubits");
    }
    void check_pair(std::size_t a, std::size_t b) const {
        check_wire(a);
        check_wire(b);
        if (a == b) throw std::invalid_argument("two-qubit gate requires distinct wires");
    }

    void apply_single(std::size_t wire, Complex u00, Complex u01, Complex u10, Complex u11) {
        check_wire(wire);
        const std::size_t bit = std::size_t{1} << wire;
        for (std::size_t i = 0; i < amp_.size(); ++i) {
            if (i & bit) continue;
            const Complex a0 = amp_[i];
            const Complex a1 = amp_[i | bit];
            amp_[i] = u00 * a0 + u01 * a1;
            amp_[i | bit] = u10 * a0 + u11 * a1;
        }
    }

    std::size_t n_qubits_;
    std::vector<Complex> amp_;
};

/// Loads a classical vector as real amplitudes: zero-padded to 2^n and
/// divided by its L2 norm.  Needs at most 2^n features and a nonzero norm.
inline StateVector amplitude_embed(std::span<const double> features, std::size_t n_qubits) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    if (features.size() > dim)
        throw std::invalid_argument("amplitude_embed: " + std::to_string(features.size()) +
                                    " features exceed capacity 2^" + std::to_string(n_qubits));
    double sq = 0.0;
    for (double f : features) sq += f * f;
    const double nrm = std::sqrt(sq);
    if (nrm <= 1e-12) throw std::domain_error("amplitude_embed: feature vector has (near-)zero norm");
    std::vector<Complex> amps(dim, Complex{0.0, 0.0});
    for (std::size_t i = 0; i < features.size(); ++i) amps[i] = Complex{features[i] / nrm, 0.0};
    return StateVector(n_qubits, std::move(amps));
}

/// RX(angles[i]) on qubit i of the all-zeros state, one angle per qubit.
inline StateVector angle_embed(std::span<const double> angles, std::size_t n_qubits) {
    if (angles.size() != n_qubits)
        throw std::invalid_argument("angle_embed: got " + std::to_string(angles.size()) + " angles for " +
                                    std::to_string(n_qubits) + " qubits");
    StateVector state(n_qubits);
    for (std::size_t q = 0; q < n_qubits; ++q) state.apply_rx(q, angles[q]);
    return state;
}

}  // namespace qubrain::qsim
