#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qubrain/models.hpp"
#include "qubrain/train.hpp"

// Gradient verification suites behind the `gradcheck` CLI subcommand and the
// acceptance gate: finite differences against backward() for every operation
// and every model, and the parameter-shift rule against the adjoint sweep.

namespace qubrain::bench {

struct GradReport {
    std::string name;
    double max_rel_err = 0.0;
    double tol = 0.0;
    bool pass = false;
};

namespace graddetail {

using autodiff::GradCheckReport;
using autodiff::Parameter;
using autodiff::Tape;
using autodiff::Tensor;

inline GradReport as_report(const std::string& name, double err, double tol) {
    return {name, err, tol, err < tol};
}

inline std::vector<double> rand_vec(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

/// Finite differences over every component of every parameter when
/// `exhaustive`, otherwise over a strided subset.
template <class F>
inline double param_fd_err(F&& loss_fn, const std::vector<Parameter*>& params, bool exhaustive,
                           std::size_t per_param = 8, double step = 1e-5) {
    for (Parameter* p : params) p->zero_grad();
    {
        Tape tape;
        Tensor loss = loss_fn(tape);
        tape.backward(loss);
    }
    std::vector<std::vector<double>> analytic;
    for (Parameter* p : params) analytic.push_back(p->grad);
    double max_err = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        const std::size_t n = p.size();
        const std::size_t stride = exhaustive ? 1 : std::max<std::size_t>(1, n / per_param);
        for (std::size_t i = 0; i < n; i += stride) {
            const double saved = p.value[i];
            p.value[i] = saved + step;
            double fp, fm;
            {
                Tape tape;
                fp = loss_fn(tape).value()[0];
            }
            p.value[i] = saved - step;
            {
                Tape tape;
                fm = loss_fn(tape).value()[0];
            }
            p.value[i] = saved;
            const double numeric = (fp - fm) / (2.0 * step);
            max_err = std::max(max_err, std::abs(analytic[pi][i] - numeric) /
                                            std::max({1.0, std::abs(analytic[pi][i]), std::abs(numeric)}));
        }
    }
    return max_err;
}

inline data::Matrix rand_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.5, double hi = 1.5) {
    data::Matrix m;
    m.rows = rows;
    m.cols = cols;
    m.values = rand_vec(rng, rows * cols, lo, hi);
    return m;
}

inline void autodiff_reports(std::vector<GradReport>& out) {
    using namespace autodiff;
    Rng rng(0xAD1);
    const double tol = 1e-5;

    {
        const auto b0 = rand_vec(rng, 8);
        auto f = [&b0](Tape& t, Tensor a) { return sum(matmul(a, t.constant(b0, {4, 2}))); };
        out.push_back(as_report("autodiff/matmul", grad_check(f, rand_vec(rng, 12), {3, 4}, tol).max_rel_err, tol));
    }
    {
        const auto b0 = rand_vec(rng, 8);
        auto f = [&b0](Tape& t, Tensor a) { return sum(matmul_nt(a, t.constant(b0, {2, 4}))); };
        out.push_back(
            as_report("autodiff/matmul_nt", grad_check(f, rand_vec(rng, 12), {3, 4}, tol).max_rel_err, tol));
    }
    {
        const auto o = rand_vec(rng, 6);
        auto fa = [&o](Tape& t, Tensor x) { return sum(mul(add(x, t.constant(o, {6})), x)); };
        out.push_back(as_report("autodiff/add+mul", grad_check(fa, rand_vec(rng, 6), {6}, tol).max_rel_err, tol));
        auto fs = [&o](Tape& t, Tensor x) { return sum(mul(sub(x, t.constant(o, {6})), x)); };
        out.push_back(as_report("autodiff/sub", grad_check(fs, rand_vec(rng, 6), {6}, tol).max_rel_err, tol));
    }
    {
        auto f = [](Tape& t, Tensor bias) {
            Tensor a = t.constant({0.3, -0.7, 1.1, 0.2, -0.4, 0.9}, {2, 3});
            return sum(mul(add(a, bias), sub(a, bias)));
        };
        out.push_back(as_report("autodiff/broadcast", grad_check(f, rand_vec(rng, 3), {3}, tol).max_rel_err, tol));
    }
    {
        auto f = [](Tape&, Tensor x) { return sum(sigmoid(x)); };
        out.push_back(as_report("autodiff/sigmoid", grad_check(f, rand_vec(rng, 7), {7}, tol).max_rel_err, tol));
        auto g = [](Tape&, Tensor x) { return sum(autodiff::tanh(x)); };
        out.push_back(as_report("autodiff/tanh", grad_check(g, rand_vec(rng, 7), {7}, tol).max_rel_err, tol));
        auto h = [](Tape&, Tensor x) { return sum(relu(offset(x, 0.1))); };
        out.push_back(as_report("autodiff/relu", grad_check(h, rand_vec(rng, 7), {7}, tol).max_rel_err, tol));
    }
    {
        auto f = [](Tape&, Tensor x) {
            Tensor left = slice(x, 0, 2, 1);
            Tensor right = slice(x, 2, 4, 1);
            return sum(mul(concat({right, left}, 1), x));
        };
        out.push_back(
            as_report("autodiff/concat+slice", grad_check(f, rand_vec(rng, 8), {2, 4}, tol).max_rel_err, tol));
    }
    {
        auto f = [](Tape&, Tensor x) { return sum(mul(scale(x, -1.7), offset(x, 0.4))); };
        out.push_back(
            as_report("autodiff/scale+offset", grad_check(f, rand_vec(rng, 6), {6}, tol).max_rel_err, tol));
    }
    {
        const auto wv = rand_vec(rng, 8);
        const auto bv = rand_vec(rng, 4);
        auto f = [&](Tape& t, Tensor x) {
            return sum(sigmoid(linear(x, t.constant(wv, {4, 2}), t.constant(bv, {4}))));
        };
        out.push_back(as_report("autodiff/linear", grad_check(f, rand_vec(rng, 6), {3, 2}, tol).max_rel_err, tol));
    }
    {
        auto f = [](Tape&, Tensor x) { return mean(x); };
        out.push_back(as_report("autodiff/mean", grad_check(f, rand_vec(rng, 9), {3, 3}, tol).max_rel_err, tol));
        auto g = [](Tape&, Tensor x) { return sum(mul(sum(x, 0), sum(x, 0))); };
        out.push_back(as_report("autodiff/sum_axis", grad_check(g, rand_vec(rng, 9), {3, 3}, tol).max_rel_err, tol));
    }
    {
        auto f = [](Tape& t, Tensor z) {
            Tensor y = t.constant({1.0, 0.0, 1.0, 1.0, 0.0}, {5});
            return bce_loss(sigmoid(z), y);
        };
        out.push_back(as_report("autodiff/bce_loss", grad_check(f, rand_vec(rng, 5), {5}, tol).max_rel_err, tol));
    }
    {
        auto f = [](Tape&, Tensor logits) { return cross_entropy(logits, {2, 0}); };
        out.push_back(
            as_report("autodiff/cross_entropy", grad_check(f, rand_vec(rng, 6), {2, 3}, tol).max_rel_err, tol));
    }
    {
        Parameter w1 = Parameter::uniform({4, 3}, -0.7, 0.7, rng);
        Parameter b1 = Parameter::uniform({4}, -0.5, 0.5, rng);
        Parameter w2 = Parameter::uniform({1, 4}, -0.7, 0.7, rng);
        const auto x0 = rand_vec(rng, 6);
        auto loss_fn = [&](Tape& t) {
            Tensor x = t.constant(x0, {2, 3});
            Tensor h = autodiff::tanh(add(matmul_nt(x, t.param(w1)), t.param(b1)));
            return mean(sigmoid(matmul_nt(h, t.param(w2))));
        };
        out.push_back(as_report("autodiff/mlp", param_fd_err(loss_fn, {&w1, &b1, &w2}, true), tol));
    }
}

inline void qsim_reports(std::vector<GradReport>& out, std::size_t n_circuits = 100) {
    Rng rng(0xC1C);
    double vs_shift = 0.0, vs_fd_params = 0.0, vs_fd_inputs = 0.0;
    for (std::size_t rep = 0; rep < n_circuits; ++rep) {
        const std::size_t n_qubits = 2 + rng.bounded(4);
        qsim::CircuitSpec spec;
        spec.n_qubits = n_qubits;
        spec.embedding = rng.bounded(2) == 0 ? qsim::Embedding::Amplitude : qsim::Embedding::Angle;
        spec.output = rng.bounded(2) == 0 ? qsim::OutputKind::ZExpectations : qsim::OutputKind::Probabilities;
        std::size_t next_param = 0;
        for (std::size_t i = 0; i < 10; ++i) {
            const std::uint64_t pick = rng.bounded(5);
            qsim::GateOp g;
            g.kind = pick == 3 ? qsim::GateKind::CZ
                     : pick == 4 ? qsim::GateKind::CNOT
                     : pick == 0 ? qsim::GateKind::RX
                     : pick == 1 ? qsim::GateKind::RY
                                 : qsim::GateKind::RZ;
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
        if (next_param == 0) spec.gates.push_back({qsim::GateKind::RY, 0, 0, 0.0, std::size_t{0}});

        const std::vector<double> params = rand_vec(rng, spec.n_params(), 0.0, 6.28);
        const std::vector<double> input = spec.embedding == qsim::Embedding::Angle
                                              ? rand_vec(rng, n_qubits, 0.0, 3.1)
                                              : rand_vec(rng, (std::size_t{1} << n_qubits) - 1, 0.2, 2.0);
        const std::vector<double> upstream = rand_vec(rng, spec.output_dim(), -1.0, 1.0);

        const auto vjp = qsim::circuit_vjp(spec, params, input, upstream);
        const auto shift = qsim::parameter_shift_grad(spec, params, input);
        for (std::size_t k = 0; k < params.size(); ++k) {
            double contracted = 0.0;
            for (std::size_t j = 0; j < upstream.size(); ++j) contracted += upstream[j] * shift[k][j];
            vs_shift = std::max(vs_shift, std::abs(vjp.param_grads[k] - contracted));
        }

        auto contracted_out = [&](const std::vector<double>& p, const std::vector<double>& in) {
            const auto o = qsim::run_circuit(spec, p, in);
            double acc = 0.0;
            for (std::size_t j = 0; j < o.size(); ++j) acc += upstream[j] * o[j];
            return acc;
        };
        const double step = 1e-6;
        std::vector<double> pv = params;
        for (std::size_t k = 0; k < pv.size(); ++k) {
            const double saved = pv[k];
            pv[k] = saved + step;
            const double fp = contracted_out(pv, input);
            pv[k] = saved - step;
            const double fm = contracted_out(pv, input);
            pv[k] = saved;
            const double numeric = (fp - fm) / (2.0 * step);
            vs_fd_params = std::max(vs_fd_params, std::abs(vjp.param_grads[k] - numeric) /
                                                      std::max({1.0, std::abs(vjp.param_grads[k]),
                                                                std::abs(numeric)}));
        }
        std::vector<double> iv = input;
        for (std::size_t k = 0; k < iv.size(); ++k) {
            const double saved = iv[k];
            iv[k] = saved + step;
            const double fp = contracted_out(params, iv);
            iv[k] = saved - step;
            const double fm = contracted_out(params, iv);
            iv[k] = saved;
            const double numeric = (fp - fm) / (2.0 * step);
            vs_fd_inputs = std::max(vs_fd_inputs, std::abs(vjp.input_grads[k] - numeric) /
                                                      std::max({1.0, std::abs(vjp.input_grads[k]),
                                                                std::abs(numeric)}));
        }
    }
    out.push_back(graddetail::as_report("qsim/adjoint_vs_parameter_shift", vs_shift, 1e-9));
    out.push_back(graddetail::as_report("qsim/adjoint_vs_fd_params", vs_fd_params, 1e-7));
    out.push_back(graddetail::as_report("qsim/adjoint_vs_fd_inputs", vs_fd_inputs, 1e-7));
}

inline void nn_reports(std::vector<GradReport>& out) {
    using namespace autodiff;
    Rng rng(0xBB);
    const double tol = 1e-5;
    {
        nn::LSTMCellWeights w(3, 2, rng);
        const auto xv = rand_vec(rng, 3);
        const auto hv = rand_vec(rng, 2, -0.5, 0.5);
        const auto cv = rand_vec(rng, 2, -0.5, 0.5);
        auto loss_fn = [&](Tape& t) {
            auto s = nn::lstm_cell_step(t, t.constant(xv, {1, 3}), t.constant(hv, {1, 2}), t.constant(cv, {1, 2}), w);
            return sum(mul(s.h, s.h));
        };
        std::vector<Parameter*> params{&w.forget.weight, &w.forget.bias, &w.input.weight, &w.input.bias,
                                       &w.update.weight, &w.update.bias, &w.output.weight, &w.output.bias};
        out.push_back(as_report("nn/lstm_cell", param_fd_err(loss_fn, params, true), tol));
    }
    {
        auto f = [](Tape&, Tensor x) { return sum(nn::surrogate_spike(x, 2.0, nn::SpikeMode::Smooth)); };
        out.push_back(
            as_report("nn/surrogate_smooth", grad_check(f, rand_vec(rng, 7, -1.5, 1.5), {7}, tol).max_rel_err, tol));
    }
    {
        // three LIF steps with reset feedback, smooth spike relaxation
        nn::LIFConfig cfg{0.9, 0.6, 2.0};
        const auto i0 = rand_vec(rng, 4, 0.2, 0.9);
        auto f = [&](Tape& t, Tensor x) {
            nn::LIFState state = nn::lif_init(t, {1, 4});
            Tensor total = t.zeros({1, 4});
            for (int step = 0; step < 3; ++step) {
                auto [next, spikes] = nn::lif_step(t, state, x, cfg, nn::SpikeMode::Smooth);
                state = next;
                total = add(total, spikes);
            }
            return sum(mul(total, total));
        };
        out.push_back(as_report("nn/lif_unroll_smooth", grad_check(f, i0, {1, 4}, tol).max_rel_err, tol));
    }
}

inline void model_reports(std::vector<GradReport>& out, bool exhaustive) {
    Rng rng(0x30D);
    const data::Matrix x2 = rand_matrix(rng, 2, data::kFeatureCount);
    const data::Matrix x2n = data::Scaler::l2row().apply(x2);
    const data::Matrix x2pos = rand_matrix(rng, 2, data::kFeatureCount, 0.0, 1.5);
    const std::vector<int> y{1, 0};

    {
        models::AnnModel m(Rng(1));
        auto loss = [&](Tape& t) { return m.forward_loss(t, x2, y).loss; };
        out.push_back(as_report("models/ann", param_fd_err(loss, m.params(), true), 1e-5));
    }
    {
        models::SnnModel m(Rng(2));
        m.spike_mode = nn::SpikeMode::Smooth;
        auto loss = [&](Tape& t) { return m.forward_loss(t, x2, y).loss; };
        out.push_back(as_report("models/snn", param_fd_err(loss, m.params(), exhaustive), 1e-5));
    }
    {
        models::LstmModel m(Rng(3));
        auto loss = [&](Tape& t) { return m.forward_loss(t, x2, y).loss; };
        out.push_back(as_report("models/lstm", param_fd_err(loss, m.params(), exhaustive), 1e-5));
    }
    {
        models::QnnModel m(Rng(4));
        auto loss = [&](Tape& t) { return m.forward_loss(t, x2n, y).loss; };
        out.push_back(as_report("models/qnn", param_fd_err(loss, m.params(), true), 1e-5));
    }
    {
        models::QsnnModel m(Rng(5));
        m.spike_mode = nn::SpikeMode::Smooth;
        auto loss = [&](Tape& t) { return m.forward_loss(t, x2n, y).loss; };
        out.push_back(as_report("models/qsnn", param_fd_err(loss, m.params(), exhaustive), 1e-5));
    }
    {
        models::QlstmModel m(Rng(6));
        auto loss = [&](Tape& t) { return m.forward_loss(t, x2pos, y).loss; };
        out.push_back(as_report("models/qlstm", param_fd_err(loss, m.params(), exhaustive), 1e-5));
    }
    {
        models::HybridModel m(Rng(7));
        m.spike_mode = nn::SpikeMode::Smooth;
        auto loss = [&](Tape& t) { return m.joint_loss(t, x2n, y).loss; };
        out.push_back(as_report("models/qsnn-qlstm", param_fd_err(loss, m.params(), exhaustive), 1e-4));
    }
}

}  // namespace graddetail

/// `module`: all | autodiff | qsim | nn | models.  `exhaustive` checks every
/// parameter component of every model (the acceptance setting); the default
/// strided subset keeps the CLI quick.
inline std::vector<GradReport> run_gradcheck(const std::string& module = "all", bool exhaustive = false) {
    std::vector<GradReport> out;
    if (module == "all" || module == "autodiff") graddetail::autodiff_reports(out);
    if (module == "all" || module == "qsim") graddetail::qsim_reports(out);
    if (module == "all" || module == "nn") graddetail::nn_reports(out);
    if (module == "all" || module == "models") graddetail::model_reports(out, exhaustive);
    return out;
}

}  // namespace qubrain::bench
