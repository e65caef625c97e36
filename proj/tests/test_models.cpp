#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "qubrain/models.hpp"
#include "qubrain/train.hpp"

using namespace qubrain;
using namespace qubrain::autodiff;
using namespace qubrain::models;
using Catch::Approx;

namespace {

data::Matrix make_matrix(Rng& rng, std::size_t rows, std::size_t cols = data::kFeatureCount, double lo = -1.5,
                         double hi = 1.5) {
    data::Matrix m;
    m.rows = rows;
    m.cols = cols;
    m.values = testing::random_vector(rng, rows * cols, lo, hi);
    return m;
}

data::Matrix l2_normalized(data::Matrix m) { return data::Scaler::l2row().apply(m); }

void zero_all(Model& m) {
    for (auto& np : m.named_params()) std::fill(np.param->value.begin(), np.param->value.end(), 0.0);
}

/// Finite-difference check over a deterministic subset of components of each
/// parameter; the acceptance suite runs the exhaustive version.
template <class F>
GradCheckReport sampled_param_grad_check(F&& loss_fn, const std::vector<Parameter*>& params, double tol,
                                         std::size_t per_param = 6, double step = 1e-5) {
    for (Parameter* p : params) p->zero_grad();
    {
        Tape tape;
        Tensor loss = loss_fn(tape);
        tape.backward(loss);
    }
    std::vector<std::vector<double>> analytic;
    for (Parameter* p : params) analytic.push_back(p->grad);

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        const std::size_t n = p.size();
        const std::size_t stride = std::max<std::size_t>(1, n / per_param);
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
            report.max_rel_err = std::max(report.max_rel_err,
                                          std::abs(analytic[pi][i] - numeric) /
                                              std::max({1.0, std::abs(analytic[pi][i]), std::abs(numeric)}));
        }
    }
    report.pass = report.max_rel_err < tol;
    return report;
}

}  // namespace

TEST_CASE("registered parameter counts match the architecture table") {
    for (const std::string& id : model_ids()) {
        ModelSetup setup = make_model(id, 1);
        INFO(id);
        CHECK(setup.model->param_count() == expected_param_count(id));
    }
}

TEST_CASE("ann outputs one half at zero weights") {
    AnnModel ann(Rng(3));
    zero_all(ann);
    Rng rng(4);
    data::Matrix x = make_matrix(rng, 3);
    Tape t;
    for (double p : ann.forward(t, x).value()) CHECK(p == Approx(0.5));
}

TEST_CASE("ann end-to-end gradients match finite differences") {
    AnnModel ann(Rng(5));
    Rng rng(6);
    const data::Matrix x = make_matrix(rng, 4);
    const std::vector<int> y{1, 0, 0, 1};
    auto loss_fn = [&](Tape& t) { return ann.forward_loss(t, x, y).loss; };
    CHECK(param_grad_check(loss_fn, ann.params(), 1e-5).pass);
}

TEST_CASE("snn configuration and silent zero-weight network") {
    SnnModel snn(Rng(7));
    CHECK(snn.steps() == 25);
    zero_all(snn);
    Rng rng(8);
    data::Matrix x = make_matrix(rng, 2);
    Tape t;
    auto fwd = snn.forward_record(t, x, {0, 1});
    for (const Tensor& s : fwd.record)
        for (double v : s.value()) CHECK(v == 0.0);
}

TEST_CASE("snn gradients flow through the surrogate in smooth mode") {
    SnnModel snn(Rng(9), 6, 8, 2, 5);  // reduced copy of the architecture
    snn.spike_mode = nn::SpikeMode::Smooth;
    Rng rng(10);
    const data::Matrix x = make_matrix(rng, 2, 6);
    const std::vector<int> y{1, 0};
    auto loss_fn = [&](Tape& t) { return snn.forward_loss(t, x, y).loss; };
    CHECK(param_grad_check(loss_fn, snn.params(), 1e-5).pass);
}

TEST_CASE("lstm model closed form and cell equivalence") {
    {
        LstmModel lstm(Rng(11));
        zero_all(lstm);
        Rng rng(12);
        data::Matrix x = make_matrix(rng, 2);
        Tape t;
        for (double p : lstm.forward(t, x).value()) CHECK(p == Approx(0.5));
    }
    {
        // The stacked layer with split input/hidden biases equals the plain
        // cell on merged weights [W_ih | W_hh] and summed biases.
        Rng rng(13);
        LstmModel lstm(Rng(13));
        LstmLayer& layer = lstm.layer0();

        nn::LSTMCellWeights merged(30, 50, rng);
        nn::LinearLayer* gates[4] = {&merged.forget, &merged.input, &merged.update, &merged.output};
        for (std::size_t g = 0; g < 4; ++g) {
            for (std::size_t r = 0; r < 50; ++r) {
                for (std::size_t c = 0; c < 30; ++c)
                    gates[g]->weight.value[r * 80 + c] = layer.w_ih.value[(g * 50 + r) * 30 + c];
                for (std::size_t c = 0; c < 50; ++c)
                    gates[g]->weight.value[r * 80 + 30 + c] = layer.w_hh.value[(g * 50 + r) * 50 + c];
                gates[g]->bias.value[r] = layer.b_ih.value[g * 50 + r] + layer.b_hh.value[g * 50 + r];
            }
        }

        Rng drng(14);
        const std::vector<double> xv = testing::random_vector(drng, 60);
        const std::vector<double> hv = testing::random_vector(drng, 100, -0.5, 0.5);
        const std::vector<double> cv = testing::random_vector(drng, 100, -0.5, 0.5);
        Tape t;
        Tensor x = t.constant(xv, {2, 30});
        Tensor h = t.constant(hv, {2, 50});
        Tensor c = t.constant(cv, {2, 50});
        auto a = layer.step(t, x, h, c);
        auto b = nn::lstm_cell_step(t, x, h, c, merged);
        for (std::size_t i = 0; i < a.h.value().size(); ++i) {
            CHECK(a.h.value()[i] == Approx(b.h.value()[i]).margin(1e-12));
            CHECK(a.c.value()[i] == Approx(b.c.value()[i]).margin(1e-12));
        }
    }
}

TEST_CASE("lstm model gradients match finite differences on a sampled subset") {
    LstmModel lstm(Rng(15));
    Rng rng(16);
    const data::Matrix x = make_matrix(rng, 2);
    const std::vector<int> y{1, 0};
    auto loss_fn = [&](Tape& t) { return lstm.forward_loss(t, x, y).loss; };
    CHECK(sampled_param_grad_check(loss_fn, lstm.params(), 1e-5).pass);
}

TEST_CASE("qnn head at zero weights outputs one half") {
    QnnModel qnn(Rng(17));
    zero_all(qnn);
    Rng rng(18);
    data::Matrix x = l2_normalized(make_matrix(rng, 3));
    Tape t;
    for (double p : qnn.forward(t, x).value()) CHECK(p == Approx(0.5));
}

TEST_CASE("qnn gradients (circuit and linear) match finite differences") {
    QnnModel qnn(Rng(19));
    Rng rng(20);
    const data::Matrix x = l2_normalized(make_matrix(rng, 2));
    const std::vector<int> y{1, 0};
    auto loss_fn = [&](Tape& t) { return qnn.forward_loss(t, x, y).loss; };
    CHECK(param_grad_check(loss_fn, qnn.params(), 1e-5).pass);
}

TEST_CASE("qlif initial membrane tiles the measured expectations") {
    Rng init(21);
    QLifCell cell(10, init);
    Rng rng(22);
    data::Matrix x;
    x.rows = 3;
    x.cols = 10;
    x.values = testing::random_vector(rng, 30, 0.1, 1.0);
    Tape t;
    Tensor input = t.constant(x.values, {3, 10});
    auto [state, spikes] = cell.step(t, std::nullopt, input);
    // membrane = beta * U0 + I with S_prev = 0; recover U0 and check period 5
    const auto& m = state.membrane.value();
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t j = 0; j < 10; ++j) {
            const double u0 = (m[r * 10 + j] - x.values[r * 10 + j]) / cell.cfg.beta;
            const double u0_mod = (m[r * 10 + (j % 5)] - x.values[r * 10 + (j % 5)]) / cell.cfg.beta;
            CHECK(u0 == Approx(u0_mod).margin(1e-12));
            CHECK(u0 >= -1.0 - 1e-12);
            CHECK(u0 <= 1.0 + 1e-12);
        }
}

TEST_CASE("qlif circuit gradients match the parameter-shift oracle") {
    Rng init(23);
    QLifCell cell(10, init);
    Rng rng(24);
    const std::vector<double> row = testing::random_vector(rng, 10, 0.1, 1.0);
    const std::vector<double> weights = testing::random_vector(rng, 5, -1.0, 1.0);

    cell.vqc.zero_grad();
    Tape t;
    Tensor input = t.constant(row, {1, 10});
    Tensor z = circuit_op(t, cell.spec, input, t.param(cell.vqc));
    Tensor w = t.constant(weights, {1, 5});
    t.backward(sum(mul(z, w)));

    const auto jac = qsim::parameter_shift_grad(cell.spec, cell.vqc.value, row);
    for (std::size_t k = 0; k < cell.vqc.size(); ++k) {
        double expected = 0.0;
        for (std::size_t j = 0; j < 5; ++j) expected += weights[j] * jac[k][j];
        CHECK(cell.vqc.grad[k] == Approx(expected).margin(1e-7));
    }
}

TEST_CASE("qsnn configuration and parameter count") {
    QsnnModel qsnn(Rng(25));
    CHECK(qsnn.steps() == 25);
    CHECK(qsnn.qubits() == 5);
    CHECK(qsnn.param_count() == 362);
}

TEST_CASE("disabling the circuit initialization reduces qsnn to a classical snn") {
    QsnnModel qsnn(Rng(27));
    qsnn.qlif1().use_vqc_init = false;
    qsnn.qlif2().use_vqc_init = false;

    SnnModel snn(Rng(28), 30, 10, 2, 25);
    snn.input_layer().weight.value = qsnn.input_layer().weight.value;
    snn.input_layer().bias.value = qsnn.input_layer().bias.value;
    snn.head_layer().weight.value = qsnn.head_layer().weight.value;
    snn.head_layer().bias.value = qsnn.head_layer().bias.value;

    Rng rng(29);
    data::Matrix x = l2_normalized(make_matrix(rng, 3));
    const std::vector<int> y{0, 1, 0};
    Tape t1, t2;
    auto a = qsnn.forward_record(t1, x, y);
    auto b = snn.forward_record(t2, x, y);
    REQUIRE(a.record.size() == b.record.size());
    for (std::size_t s = 0; s < a.record.size(); ++s) CHECK(a.record[s].value() == b.record[s].value());
    CHECK(a.loss.value()[0] == b.loss.value()[0]);
}

TEST_CASE("qsnn gradients match finite differences in smooth mode") {
    QsnnModel qsnn(Rng(31));
    qsnn.spike_mode = nn::SpikeMode::Smooth;
    Rng rng(32);
    const data::Matrix x = l2_normalized(make_matrix(rng, 2));
    const std::vector<int> y{1, 0};
    auto loss_fn = [&](Tape& t) { return qsnn.forward_loss(t, x, y).loss; };
    CHECK(sampled_param_grad_check(loss_fn, qsnn.params(), 1e-5, 8).pass);
}

TEST_CASE("qlstm cell closed form at zero parameters") {
    Rng init(33);
    QLstmCell cell(5, 3, 2, init);
    for (Parameter* p : {&cell.in_proj.weight, &cell.in_proj.bias, &cell.out_proj.weight, &cell.out_proj.bias,
                         &cell.gate_forget, &cell.gate_input, &cell.gate_update, &cell.gate_output})
        std::fill(p->value.begin(), p->value.end(), 0.0);

    Rng rng(34);
    Tape t;
    Tensor x = t.constant(testing::random_vector(rng, 10), {2, 5});
    Tensor h0 = t.zeros({2, 3});
    const std::vector<double> c0 = testing::random_vector(rng, 6);
    auto step = cell.step(t, x, h0, t.constant(c0, {2, 3}));
    for (std::size_t i = 0; i < 6; ++i) CHECK(step.c.value()[i] == Approx(0.5 * c0[i]).margin(1e-12));
    for (double h : step.h.value()) CHECK(h == Approx(0.5 * std::tanh(0.5 * c0[0])).margin(1.0));  // bounded
}

TEST_CASE("zero hidden state makes the additive recurrence a no-op") {
    Rng init(51);
    QLstmCell cell(6, 2, 1, init);
    Rng rng(52);
    const std::vector<double> xv = testing::random_vector(rng, 6, 0.0, 1.5);
    const std::vector<double> cv = testing::random_vector(rng, 2, -0.5, 0.5);

    Tape t;
    Tensor x = t.constant(xv, {1, 6});
    auto via_cell = cell.step(t, x, t.zeros({1, 2}), t.constant(cv, {1, 2}));

    // same gates computed with v = x_vec directly (no hidden embedding)
    Tensor z = cell.in_proj.forward(t, x);
    auto gate = [&](Parameter& p) { return cell.out_proj.forward(t, circuit_op(t, cell.spec, z, t.param(p))); };
    Tensor f = sigmoid(gate(cell.gate_forget));
    Tensor i = sigmoid(gate(cell.gate_input));
    Tensor u = autodiff::tanh(gate(cell.gate_update));
    Tensor o = sigmoid(gate(cell.gate_output));
    Tensor c = add(mul(f, t.constant(cv, {1, 2})), mul(i, u));
    Tensor h = mul(o, autodiff::tanh(c));
    CHECK(via_cell.h.value() == h.value());
    CHECK(via_cell.c.value() == c.value());
}

TEST_CASE("qlstm gate activations stay inside their ranges") {
    Rng init(35);
    QLstmCell cell(8, 4, 2, init);
    Rng rng(36);
    Tape t;
    Tensor x = t.constant(testing::random_vector(rng, 16), {2, 8});
    Tensor h0 = t.constant(testing::random_vector(rng, 8, -0.5, 0.5), {2, 4});
    Tensor c0 = t.constant(testing::random_vector(rng, 8, -0.5, 0.5), {2, 4});
    auto step = cell.step(t, x, h0, c0);
    for (double v : step.h.value()) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("qlstm full-step gradients match finite differences") {
    Rng init(37);
    QLstmCell cell(6, 2, 2, init);
    Rng rng(38);
    const std::vector<double> xv = testing::random_vector(rng, 6, 0.0, 1.5);
    const std::vector<double> hv = testing::random_vector(rng, 2, -0.5, 0.5);
    const std::vector<double> cv = testing::random_vector(rng, 2, -0.5, 0.5);
    auto loss_fn = [&](Tape& t) {
        auto step = cell.step(t, t.constant(xv, {1, 6}), t.constant(hv, {1, 2}), t.constant(cv, {1, 2}));
        return sum(mul(step.h, step.h));
    };
    std::vector<Parameter*> params{&cell.in_proj.weight, &cell.in_proj.bias,  &cell.out_proj.weight,
                                   &cell.out_proj.bias,  &cell.gate_forget,   &cell.gate_input,
                                   &cell.gate_update,    &cell.gate_output};
    CHECK(param_grad_check(loss_fn, params, 1e-5).pass);
}

TEST_CASE("qlstm model structure") {
    QlstmModel qlstm(Rng(39));
    CHECK(qlstm.param_count() == 6521);
    CHECK(qlstm.cell().circuit_param_count() == 60);  // 4 gates x 3 layers x 5 qubits

    // zero head weights force the sigmoid midpoint
    std::fill(qlstm.cell().out_proj.weight.value.begin(), qlstm.cell().out_proj.weight.value.end(), 0.0);
    auto named = qlstm.named_params();
    for (auto& np : named)
        if (np.name == "head.weight" || np.name == "head.bias")
            std::fill(np.param->value.begin(), np.param->value.end(), 0.0);
    Rng rng(40);
    data::Matrix x = make_matrix(rng, 2, data::kFeatureCount, 0.0, 1.5);
    Tape t;
    for (double p : qlstm.forward(t, x).value()) CHECK(p == Approx(0.5));
}

TEST_CASE("hybrid parameter split covers the full model") {
    HybridModel hybrid(Rng(41));
    CHECK(hybrid.param_count() == 774);
    std::size_t qsnn = 0, qlstm = 0;
    for (auto& np : hybrid.qsnn_params()) qsnn += np.param->size();
    for (auto& np : hybrid.qlstm_params()) qlstm += np.param->size();
    CHECK(qsnn == 347);   // front linear + circuit + retained head
    CHECK(qlstm == 427);  // projections, gate circuits, final head
    CHECK(qsnn + qlstm == 774);
}

TEST_CASE("hybrid with silent spikes and zero weights outputs one half") {
    HybridModel hybrid(Rng(43));
    hybrid.qlif().use_vqc_init = false;  // a zero current cannot be embedded
    zero_all(hybrid);
    Rng rng(44);
    data::Matrix x = l2_normalized(make_matrix(rng, 2));
    Tape t;
    const auto spikes = hybrid.spike_train(t, x, nn::SpikeMode::Binary);
    for (const Tensor& s : spikes)
        for (double v : s.value()) CHECK(v == 0.0);
    for (double p : hybrid.joint_forward(t, x).value()) CHECK(p == Approx(0.5));
}

TEST_CASE("sigmoid heads score strictly inside (0, 1) even when saturated") {
    AnnModel ann(Rng(47));
    for (auto& np : ann.named_params())
        for (double& v : np.param->value) v = v > 0 ? 400.0 : -400.0;  // force saturation
    Rng rng(48);
    data::Matrix x = make_matrix(rng, 4);
    Tape t;
    for (double p : ann.forward(t, x).value()) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("hybrid end-to-end gradients through the 25-step unroll") {
    HybridModel hybrid(Rng(45));
    hybrid.spike_mode = nn::SpikeMode::Smooth;
    Rng rng(46);
    const data::Matrix x = l2_normalized(make_matrix(rng, 2));
    const std::vector<int> y{1, 0};
    auto loss_fn = [&](Tape& t) { return hybrid.joint_loss(t, x, y).loss; };
    CHECK(sampled_param_grad_check(loss_fn, hybrid.params(), 1e-4, 4).pass);
}
