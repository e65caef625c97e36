#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qubrain/dataset.hpp"
#include "qubrain/layers.hpp"
#include "qubrain/quantum_layer.hpp"
#include "qubrain/tensor.hpp"

// The seven benchmark architectures.  Every model exposes its registered
// parameters by name (checkpointing / parameter-count oracles) and a
// forward_loss producing the training loss plus per-sample anomaly scores.

namespace qubrain::models {

struct NamedParam {
    std::string name;
    Parameter* param;
};

struct ForwardResult {
    Tensor loss;
    std::vector<double> scores;  // class-1 probability per sample
};

class Model {
  public:
    virtual ~Model() = default;
    virtual const char* id() const = 0;
    virtual std::vector<NamedParam> named_params() = 0;
    virtual ForwardResult forward_loss(Tape& t, const data::Matrix& x, const std::vector<int>& y) = 0;

    std::vector<Parameter*> params() {
        std::vector<Parameter*> out;
        for (auto& np : named_params()) out.push_back(np.param);
        return out;
    }

    std::size_t param_count() {
        std::size_t n = 0;
        for (auto& np : named_params()) n += np.param->size();
        return n;
    }
};

namespace detail {

inline Tensor feature_tensor(Tape& t, const data::Matrix& x) {
    return t.constant(x.values, {x.rows, x.cols});
}

inline Tensor label_tensor(Tape& t, const std::vector<int>& y) {
    std::vector<double> v(y.begin(), y.end());
    return t.constant(std::move(v), {y.size(), 1});
}

/// One-hot [batch x 2] targets for two-logit sigmoid heads.
inline Tensor onehot2_tensor(Tape& t, const std::vector<int>& y) {
    std::vector<double> v(y.size() * 2, 0.0);
    for (std::size_t r = 0; r < y.size(); ++r) v[r * 2 + (y[r] == 1 ? 1 : 0)] = 1.0;
    return t.constant(std::move(v), {y.size(), 2});
}

inline std::vector<double> column(const std::vector<double>& values, std::size_t rows, std::size_t cols,
                                  std::size_t col) {
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = values[r * cols + col];
    return out;
}

}  // namespace detail

/// 30 -> 20 ReLU -> 5 ReLU -> 1 sigmoid, trained with BCE.
class AnnModel final : public Model {
  public:
    explicit AnnModel(Rng rng) : l1_(30, 20, rng), l2_(20, 5, rng), l3_(5, 1, rng) {}

    const char* id() const override { return "ann"; }

    std::vector<NamedParam> named_params() override {
        return {{"l1.weight", &l1_.weight}, {"l1.bias", &l1_.bias}, {"l2.weight", &l2_.weight},
                {"l2.bias", &l2_.bias},     {"l3.weight", &l3_.weight}, {"l3.bias", &l3_.bias}};
    }

    Tensor forward(Tape& t, const data::Matrix& x) {
        Tensor h = autodiff::relu(l1_.forward(t, detail::feature_tensor(t, x)));
        h = autodiff::relu(l2_.forward(t, h));
        return autodiff::sigmoid(l3_.forward(t, h));
    }

    ForwardResult forward_loss(Tape& t, const data::Matrix& x, const std::vector<int>& y) override {
        Tensor p = forward(t, x);
        Tensor loss = autodiff::bce_loss(p, detail::label_tensor(t, y));
        return {loss, p.value()};
    }

  private:
    nn::LinearLayer l1_, l2_, l3_;
};

struct SpikingForward {
    std::vector<Tensor> record;  // per-step output spikes [batch x 2]
    Tensor loss;
    std::vector<double> scores;
};

/// Linear -> LIF -> Linear -> LIF unrolled over a fixed horizon with constant
/// current injection; rate-decoded through the spike-count loss.
class SnnModel final : public Model {
  public:
    explicit SnnModel(Rng rng, std::size_t in = 30, std::size_t hidden = 100, std::size_t out = 2,
                      std::size_t steps = 25)
        : steps_(steps), l1_(in, hidden, rng), l2_(hidden, out, rng) {}

    const char* id() const override { return "snn"; }
    std::size_t steps() const { return steps_; }
    const nn::LIFConfig& lif_config() const { return cfg_; }
    nn::LinearLayer& input_layer() { return l1_; }
    nn::LinearLayer& head_layer() { return l2_; }

    std::vector<NamedParam> named_params() override {
        return {{"l1.weight", &l1_.weight},
                {"l1.bias", &l1_.bias},
                {"l2.weight", &l2_.weight},
                {"l2.bias", &l2_.bias}};
    }

    SpikingForward forward_record(Tape& t, const data::Matrix& x, const std::vector<int>& y,
                                  nn::SpikeMode mode = nn::SpikeMode::Binary) {
        Tensor current = l1_.forward(t, detail::feature_tensor(t, x));
        nn::LIFState s1 = nn::lif_init(t, {x.rows, l1_.out_dim()});
        nn::LIFState s2 = nn::lif_init(t, {x.rows, l2_.out_dim()});
        std::vector<Tensor> record;
        record.reserve(steps_);
        for (std::size_t step = 0; step < steps_; ++step) {
            auto [n1, spk1] = nn::lif_step(t, s1, current, cfg_, mode);
            s1 = n1;
            auto [n2, spk2] = nn::lif_step(t, s2, l2_.forward(t, spk1), cfg_, mode);
            s2 = n2;
            record.push_back(spk2);
        }
        auto head = nn::spike_count_ce(t, record, y);
        return {std::move(record), head.loss, std::move(head.scores)};
    }

    ForwardResult forward_loss(Tape& t, const data::Matrix& x, const std::vector<int>& y) override {
        auto fwd = forward_record(t, x, y, spike_mode);
        return {fwd.loss, std::move(fwd.scores)};
    }

    nn::SpikeMode spike_mode = nn::SpikeMode::Binary;

  private:
    std::size_t steps_;
    nn::LIFConfig cfg_;
    nn::LinearLayer l1_, l2_;
};

/// One stacked-LSTM layer with the separate input/hidden bias convention.
struct LstmLayer {
    Parameter w_ih;  // [4h x in],  gate order: forget, input, update, output
    Parameter w_hh;  // [4h x h]
    Parameter b_ih;  // [4h]
    Parameter b_hh;  // [4h]
    std::size_t hidden = 0;

    LstmLayer() = default;
    LstmLayer(std::size_t in, std::size_t h, Rng& rng) : hidden(h) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in + h));
        w_ih = Parameter::uniform({4 * h, in}, -bound, bound, rng);
        w_hh = Parameter::uniform({4 * h, h}, -bound, bound, rng);
        b_ih = Parameter::uniform({4 * h}, -bound, bound, rng);
        b_hh = Parameter::uniform({4 * h}, -bound, bound, rng);
    }

    nn::LSTMStep step(Tape& t, const Tensor& x, const Tensor& h_prev, const Tensor& c_prev) {
        using namespace autodiff;
        Tensor pre = add(linear(x, t.param(w_ih), t.param(b_ih)), linear(h_prev, t.param(w_hh), t.param(b_hh)));
        Tensor f = sigmoid(slice(pre, 0, hidden, 1));
        Tensor i = sigmoid(slice(pre, hidden, 2 * hidden, 1));
        Tensor u = autodiff::tanh(slice(pre, 2 * hidden, 3 * hidden, 1));
        Tensor o = sigmoid(slice(pre, 3 * hidden, 4 * hidden, 1));
        Tensor c = add(mul(f, c_prev), mul(i, u));
        Tensor h = mul(o, autodiff::tanh(c));
        return {h, c};
    }
};

/// Two stacked LSTM layers (input treated as a length-1 sequence) followed by
/// two linear layers and a sigmoid head.
class LstmModel final : public Model {
  public:
    explicit LstmModel(Rng rng)
        : layer0_(30, 50, rng), layer1_(50, 50, rng), head1_(50, 128, rng), head2_(128, 1, rng) {}

    const char* id() const override { return "lstm"; }
    LstmLayer& layer0() { return layer0_; }

    std::vector<NamedParam> named_params() override {
        return {{"lstm0.w_ih", &layer0_.w_ih},   {"lstm0.w_hh", &layer0_.w_hh}, {"lstm0.b_ih", &layer0_.b_ih},
                {"lstm0.b_hh", &layer0_.b_hh},   {"lstm1.w_ih", &layer1_.w_ih}, {"lstm1.w_hh", &layer1_.w_hh},
                {"lstm1.b_ih", &layer1_.b_ih},   {"lstm1.b_hh", &layer1_.b_hh}, {"head1.weight", &head1_.weight},
                {"head1.bias", &head1_.bias},    {"head2.weight", &head2_.weight}, {"head2.bias", &head2_.bias}};
    }

    Tensor forward(Tape& t, const data::Matrix& x) {
        Tensor xi = detail::feature_tensor(t, x);
        Tensor h0 = t.zeros({x.rows, 50});
        Tensor c0 = t.zeros({x.rows, 50});
        auto s0 = layer0_.step(t, xi, h0, c0);
        auto s1 = layer1_.step(t, s0.h, h0, c0);
        Tensor h = head1_.forward(t, s1.h);
        return autodiff::sigmoid(head2_.forward(t, h));
    }

    ForwardResult forward_loss(Tape& t, const data::Matrix& x, const std::vector<int>& y) override {
        Tensor p = forward(t, x);
        Tensor loss = autodiff::bce_loss(p, detail::label_tensor(t, y));
        return {loss, p.value()};
    }

  private:
    LstmLayer layer0_, layer1_;
    nn::LinearLayer head1_, head2_;
};

/// Amplitude-embedded 5-qubit circuit (5 Rot-CZ layers), probability readout
/// into a single-output linear layer with a sigmoid.
class QnnModel final : public Model {
  public:
    explicit QnnModel(Rng rng) : head_(32, 1, rng) {
        const double two_pi = 6.283185307179586476925286766559;
        circuit_params_ = Parameter::uniform({5, 5, 3}, 0.0, two_pi, rng);
        spec_.n_qubits = 5;
        spec_.embedding = qsim::Embedding::Amplitude;
        spec_.gates = qsim::rot_cz_ansatz_gates(5, 5);
        spec_.output = qsim::OutputKind::Probabilities;
    }

    const char* id() const override { return "qnn"; }

    std::vector<NamedParam> named_params() override {
        return {{"circuit", &circuit_params_}, {"head.weight", &head_.weight}, {"head.bias", &head_.bias}};
    }

    Tensor forward(Tape& t, const data::Matrix& x) {
        Tensor probs = circuit_op(t, spec_, detail::feature_tensor(t, x), t.param(circuit_params_));
        return autodiff::sigmoid(head_.forward(t, probs));
    }

    ForwardResult forward_loss(Tape& t, const data::Matrix& x, const std::vector<int>& y) override {
        Tensor p = forward(t, x);
        Tensor loss = autodiff::bce_loss(p, detail::label_tensor(t, y));
        return {loss, p.value()};
    }

  private:
    Parameter circuit_params_;  // [5 layers x 5 qubits x 3 rotations]
    nn::LinearLayer head_;
    qsim::CircuitSpec spec_;
};

/// Linear -> QLIF(10) -> Linear -> QLIF(2) over the spiking horizon.
class QsnnModel final : public Model {
  public:
    explicit QsnnModel(Rng rng, std::size_t steps = 25)
        : steps_(steps), l1_(30, 10, rng), qlif1_(10, rng), l2_(10, 2, rng), qlif2_(2, rng) {}

    const char* id() const override { return "qsnn"; }
    std::size_t steps() const { return steps_; }
    std::size_t qubits() const { return qlif1_.n_qubits; }
    QLifCell& qlif1() { return qlif1_; }
    QLifCell& qlif2() { return qlif2_; }
    nn::LinearLayer& input_layer() { return l1_; }
    nn::LinearLayer& head_layer() { return l2_; }

    std::vector<NamedParam> named_params() override {
        return {{"l1.weight", &l1_.weight}, {"l1.bias", &l1_.bias},     {"qlif1.vqc", &qlif1_.vqc},
                {"l2.weight", &l2_.weight}, {"l2.bias", &l2_.bias},     {"qlif2.vqc", &qlif2_.vqc}};
    }

    SpikingForward forward_record(Tape& t, const data::Matrix& x, const std::vector<int>& y,
                                  nn::SpikeMode mode = nn::SpikeMode::Binary) {
        Tensor current = l1_.forward(t, detail::feature_tensor(t, x));
        std::optional<nn::LIFState> s1, s2;
        std::vector<Tensor> record;
        record.reserve(steps_);
        for (std::size_t step = 0; step < steps_; ++step) {
            auto [n1, spk1] = qlif1_.step(t, s1, current, mode);
            s1 = n1;
            auto [n2, spk2] = qlif2_.step(t, s2, l2_.forward(t, spk1), mode);
            s2 = n2;
            record.push_back(spk2);
        }
        auto head = nn::spike_count_ce(t, record, y);
        return {std::move(record), head.loss, std::move(head.scores)};
    }

    ForwardResult forward_loss(Tape& t, const data::Matrix& x, const std::vector<int>& y) override {
        auto fwd = forward_record(t, x, y, spike_mode);
        return {fwd.loss, std::move(fwd.scores)};
    }

    nn::SpikeMode spike_mode = nn::SpikeMode::Binary;

  private:
    std::size_t steps_;
    nn::LinearLayer l1_;
    QLifCell qlif1_;
    nn::LinearLayer l2_;
    QLifCell qlif2_;
};

/// Linear(30 -> 155) feeding one gate-VQC LSTM cell (hidden 125, 3 entangler
/// layers) as a length-1 sequence, then Linear(125 -> 1) with a sigmoid.
class QlstmModel final : public Model {
  public:
    explicit QlstmModel(Rng rng) : pre_(30, 155, rng), cell_(155, 125, 3, rng), head_(125, 1, rng) {}

    const char* id() const override { return "qlstm"; }
    QLstmCell& cell() { return cell_; }

    std::vector<NamedParam> named_params() override {
        return {{"pre.weight", &pre_.weight},
                {"pre.bias", &pre_.bias},
                {"cell.in_proj.weight", &cell_.in_proj.weight},
                {"cell.in_proj.bias", &cell_.in_proj.bias},
                {"cell.gate_forget", &cell_.gate_forget},
                {"cell.gate_input", &cell_.gate_input},
                {"cell.gate_update", &cell_.gate_update},
                {"cell.gate_output", &cell_.gate_output},
                {"cell.out_proj.weight", &cell_.out_proj.weight},
                {"cell.out_proj.bias", &cell_.out_proj.bias},
                {"head.weight", &head_.weight},
                {"head.bias", &head_.bias}};
    }

    Tensor forward(Tape& t, const data::Matrix& x) {
        Tensor v = pre_.forward(t, detail::feature_tensor(t, x));
        Tensor h0 = t.zeros({x.rows, 125});
        auto s = cell_.step(t, v, h0, h0);
        return autodiff::sigmoid(head_.forward(t, s.h));
    }

    ForwardResult forward_loss(Tape& t, const data::Matrix& x, const std::vector<int>& y) override {
        Tensor p = forward(t, x);
        Tensor loss = autodiff::bce_loss(p, detail::label_tensor(t, y));
        return {loss, p.value()};
    }

  private:
    nn::LinearLayer pre_;
    QLstmCell cell_;
    nn::LinearLayer head_;
};

/// The composite: a QSNN front end whose 25-step spike train drives a small
/// gate-VQC LSTM, with a two-logit sigmoid head on the final hidden state.
/// The phase-I spiking head is retained (it counts toward the parameter
/// budget) but the joint loss is computed from the LSTM output only.
class HybridModel final : public Model {
  public:
    explicit HybridModel(Rng rng, std::size_t steps = 25)
        : steps_(steps),
          front_(30, 10, rng),
          qlif_(10, rng),
          qsnn_head_(10, 2, rng),
          pre_proj_(10, 20, rng),
          cell_(20, 10, 1, rng),
          final_(10, 2, rng) {}

    const char* id() const override { return "qsnn-qlstm"; }
    std::size_t steps() const { return steps_; }
    QLifCell& qlif() { return qlif_; }

    std::vector<NamedParam> named_params() override {
        auto qsnn = qsnn_params();
        auto qlstm = qlstm_params();
        qsnn.insert(qsnn.end(), qlstm.begin(), qlstm.end());
        return qsnn;
    }

    /// Parameters updated in phase I (and by the QSNN optimizer in phase III).
    std::vector<NamedParam> qsnn_params() {
        return {{"front.weight", &front_.weight},
                {"front.bias", &front_.bias},
                {"qlif.vqc", &qlif_.vqc},
                {"qsnn_head.weight", &qsnn_head_.weight},
                {"qsnn_head.bias", &qsnn_head_.bias}};
    }

    /// Parameters owned by the QLSTM branch (phases II and III).
    std::vector<NamedParam> qlstm_params() {
        return {{"pre_proj.weight", &pre_proj_.weight},
                {"pre_proj.bias", &pre_proj_.bias},
                {"cell.in_proj.weight", &cell_.in_proj.weight},
                {"cell.in_proj.bias", &cell_.in_proj.bias},
                {"cell.gate_forget", &cell_.gate_forget},
                {"cell.gate_input", &cell_.gate_input},
                {"cell.gate_update", &cell_.gate_update},
                {"cell.gate_output", &cell_.gate_output},
                {"cell.out_proj.weight", &cell_.out_proj.weight},
                {"cell.out_proj.bias", &cell_.out_proj.bias},
                {"final.weight", &final_.weight},
                {"final.bias", &final_.bias}};
    }

    /// Spike train of the QLIF front end, one [batch x 10] tensor per step.
    std::vector<Tensor> spike_train(Tape& t, const data::Matrix& x, nn::SpikeMode mode) {
        Tensor current = front_.forward(t, detail::feature_tensor(t, x));
        std::optional<nn::LIFState> state;
        std::vector<Tensor> spikes;
        spikes.reserve(steps_);
        for (std::size_t step = 0; step < steps_; ++step) {
            auto [next, spk] = qlif_.step(t, state, current, mode);
            state = next;
            spikes.push_back(spk);
        }
        return spikes;
    }

    /// Phase-I objective: spike-count cross-entropy over the per-step outputs
    /// of the retained spiking head.
    ForwardResult phase1_loss(Tape& t, const data::Matrix& x, const std::vector<int>& y) {
        const auto spikes = spike_train(t, x, spike_mode);
        std::vector<Tensor> head_outputs;
        head_outputs.reserve(spikes.size());
        for (const Tensor& s : spikes) head_outputs.push_back(qsnn_head_.forward(t, s));
        auto head = nn::spike_count_ce(t, head_outputs, y);
        return {head.loss, std::move(head.scores)};
    }

    /// Joint objective: BCE of the two sigmoid logits against one-hot labels;
    /// the class-1 output is the anomaly score.
    ForwardResult joint_loss(Tape& t, const data::Matrix& x, const std::vector<int>& y) {
        Tensor out = joint_forward(t, x);
        Tensor loss = autodiff::bce_loss(out, detail::onehot2_tensor(t, y));
        return {loss, detail::column(out.value(), x.rows, 2, 1)};
    }

    Tensor joint_forward(Tape& t, const data::Matrix& x) {
        const auto spikes = spike_train(t, x, spike_mode);
        Tensor h = t.zeros({x.rows, 10});
        Tensor c = t.zeros({x.rows, 10});
        for (const Tensor& s : spikes) {
            auto stepped = cell_.step(t, pre_proj_.forward(t, s), h, c);
            h = stepped.h;
            c = stepped.c;
        }
        return autodiff::sigmoid(final_.forward(t, h));
    }

    ForwardResult forward_loss(Tape& t, const data::Matrix& x, const std::vector<int>& y) override {
        return joint_loss(t, x, y);
    }

    nn::SpikeMode spike_mode = nn::SpikeMode::Binary;

  private:
    std::size_t steps_;
    nn::LinearLayer front_;
    QLifCell qlif_;
    nn::LinearLayer qsnn_head_;
    nn::LinearLayer pre_proj_;
    QLstmCell cell_;
    nn::LinearLayer final_;
};

}  // namespace qubrain::models
