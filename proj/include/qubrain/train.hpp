#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qubrain/dataset.hpp"
#include "qubrain/metrics.hpp"
#include "qubrain/models.hpp"
#include "qubrain/optim.hpp"

// Training loops: the single-optimizer epoch loop shared by six models and
// the three-phase procedure of the composite model, plus the per-model
// hyperparameter table and preprocessing pipeline.

namespace qubrain::models {

struct TrainConfig {
    std::string optimizer = "sgd";  // sgd | adam | rmsprop
    double lr = 1e-2;
    std::size_t batch_size = 128;
    std::size_t epochs = 1;
    bool plateau = false;
    std::size_t patience = 0;
    std::size_t steps = 25;  // spiking horizon where applicable
    std::uint64_t seed = 0;
};

enum class Preprocess { Standard, StandardThenL2, MinMaxHalfPi };

struct ModelSetup {
    std::unique_ptr<Model> model;
    TrainConfig cfg;
    data::Regime regime = data::Regime::Classical;
    Preprocess preprocess = Preprocess::Standard;
};

inline const std::vector<std::string>& model_ids() {
    static const std::vector<std::string> ids{"ann", "snn", "lstm", "qnn", "qsnn", "qlstm", "qsnn-qlstm"};
    return ids;
}

/// Expected registered-parameter totals, used by the count oracles and the
/// checkpoint sanity checks.
inline std::size_t expected_param_count(const std::string& id) {
    if (id == "ann") return 731;
    if (id == "snn") return 3302;
    if (id == "lstm") return 43457;
    if (id == "qnn") return 108;
    if (id == "qsnn") return 362;
    if (id == "qlstm") return 6521;
    if (id == "qsnn-qlstm") return 774;
    throw std::invalid_argument("unknown model id: " + id);
}

/// Builds a model with its benchmark hyperparameters; weights drawn from the
/// per-model init stream of `seed`.
inline ModelSetup make_model(const std::string& id, std::uint64_t seed) {
    Rng init = Rng::derive(seed, "init/" + id);
    ModelSetup s;
    s.cfg.seed = seed;
    if (id == "ann") {
        s.model = std::make_unique<AnnModel>(init);
        s.cfg = {.optimizer = "sgd", .lr = 1e-2, .batch_size = 128, .epochs = 700, .seed = seed};
        s.regime = data::Regime::Classical;
        s.preprocess = Preprocess::Standard;
    } else if (id == "snn") {
        s.model = std::make_unique<SnnModel>(init);
        s.cfg = {.optimizer = "adam", .lr = 1e-3, .batch_size = 64, .epochs = 350, .seed = seed};
        s.regime = data::Regime::Classical;
        s.preprocess = Preprocess::Standard;
    } else if (id == "lstm") {
        s.model = std::make_unique<LstmModel>(init);
        s.cfg = {.optimizer = "adam",
                 .lr = 1e-3,
                 .batch_size = 128,
                 .epochs = 350,
                 .plateau = true,
                 .patience = 30,
                 .seed = seed};
        s.regime = data::Regime::Classical;
        s.preprocess = Preprocess::Standard;
    } else if (id == "qnn") {
        s.model = std::make_unique<QnnModel>(init);
        s.cfg = {.optimizer = "rmsprop", .lr = 1e-2, .batch_size = 256, .epochs = 70, .seed = seed};
        s.regime = data::Regime::Quantum;
        s.preprocess = Preprocess::StandardThenL2;
    } else if (id == "qsnn") {
        s.model = std::make_unique<QsnnModel>(init);
        s.cfg = {.optimizer = "sgd", .lr = 1e-3, .batch_size = 64, .epochs = 80, .seed = seed};
        s.regime = data::Regime::Quantum;
        s.preprocess = Preprocess::StandardThenL2;
    } else if (id == "qlstm") {
        s.model = std::make_unique<QlstmModel>(init);
        s.cfg = {.optimizer = "adam",
                 .lr = 1e-2,
                 .batch_size = 256,
                 .epochs = 100,
                 .plateau = true,
                 .patience = 20,
                 .seed = seed};
        s.regime = data::Regime::Quantum;
        s.preprocess = Preprocess::MinMaxHalfPi;
    } else if (id == "qsnn-qlstm") {
        s.model = std::make_unique<HybridModel>(init);
        // Adam drives the QSNN group and RMSprop the QLSTM group during the
        // joint phase; epochs here is the phase-I + phase-III total.
        s.cfg = {.optimizer = "adam", .lr = 1e-2, .batch_size = 128, .epochs = 40, .seed = seed};
        s.regime = data::Regime::Quantum;
        s.preprocess = Preprocess::StandardThenL2;
    } else {
        throw std::invalid_argument("unknown model id: " + id);
    }
    return s;
}

inline std::unique_ptr<nn::Optimizer> make_optimizer(const std::string& kind,
                                                     std::vector<autodiff::Parameter*> params, double lr) {
    if (kind == "sgd") return std::make_unique<nn::Sgd>(std::move(params), lr);
    if (kind == "adam") return std::make_unique<nn::Adam>(std::move(params), lr);
    if (kind == "rmsprop") return std::make_unique<nn::RmsProp>(std::move(params), lr);
    throw std::invalid_argument("unknown optimizer: " + kind);
}

struct TrainData {
    data::Matrix train_x;
    std::vector<int> train_y;
    data::Matrix val_x;
    std::vector<int> val_y;
    data::Matrix test_x;
    std::vector<int> test_y;
};

/// Scales the three splits with statistics fitted on the training rows only.
inline TrainData preprocess_splits(const data::Dataset& ds, const data::Split& split, Preprocess kind) {
    TrainData out;
    out.train_x = data::gather_features(ds, split.train);
    out.val_x = data::gather_features(ds, split.val);
    out.test_x = data::gather_features(ds, split.test);
    out.train_y = data::gather_labels(ds, split.train);
    out.val_y = data::gather_labels(ds, split.val);
    out.test_y = data::gather_labels(ds, split.test);

    const data::Scaler scaler = kind == Preprocess::MinMaxHalfPi
                                    ? data::Scaler::fit_minmax(out.train_x, 0.0, 1.5707963267948966)
                                    : data::Scaler::fit_standard(out.train_x);
    out.train_x = scaler.apply(out.train_x);
    out.val_x = scaler.apply(out.val_x);
    out.test_x = scaler.apply(out.test_x);
    if (kind == Preprocess::StandardThenL2) {
        const data::Scaler l2 = data::Scaler::l2row();
        out.train_x = l2.apply(out.train_x);
        out.val_x = l2.apply(out.val_x);
        out.test_x = l2.apply(out.test_x);
    }
    return out;
}

namespace detail {

inline data::Matrix take_rows(const data::Matrix& m, const std::vector<std::size_t>& rows) {
    data::Matrix out;
    out.rows = rows.size();
    out.cols = m.cols;
    out.values.reserve(out.rows * out.cols);
    for (std::size_t r : rows)
        out.values.insert(out.values.end(), m.values.begin() + static_cast<std::ptrdiff_t>(r * m.cols),
                          m.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * m.cols));
    return out;
}

inline std::vector<int> take_labels(const std::vector<int>& y, const std::vector<std::size_t>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(y[r]);
    return out;
}

}  // namespace detail

/// Loss and scores over a split without gradient tracking, evaluated in
/// fixed-size chunks.
template <class LossFn>
inline std::pair<double, std::vector<double>> evaluate(LossFn&& forward, const data::Matrix& x,
                                                       const std::vector<int>& y, std::size_t chunk = 256) {
    double loss_acc = 0.0;
    std::vector<double> scores;
    scores.reserve(x.rows);
    for (std::size_t start = 0; start < x.rows; start += chunk) {
        const std::size_t end = std::min(x.rows, start + chunk);
        std::vector<std::size_t> rows(end - start);
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = start + i;
        const data::Matrix bx = detail::take_rows(x, rows);
        const std::vector<int> by = detail::take_labels(y, rows);
        Tape tape;
        ForwardResult r = forward(tape, bx, by);
        loss_acc += r.loss.value()[0] * static_cast<double>(bx.rows);
        scores.insert(scores.end(), r.scores.begin(), r.scores.end());
    }
    return {loss_acc / static_cast<double>(x.rows), std::move(scores)};
}

/// The shared epoch loop: seeded shuffled mini-batches, per-epoch train and
/// validation losses, optional plateau scheduling, final test metrics.
inline bench::RunRecord train_model(Model& model, const TrainConfig& cfg, const TrainData& d) {
    if (d.train_x.rows == 0 || d.val_x.rows == 0 || d.test_x.rows == 0)
        throw std::invalid_argument("train_model: every split must be non-empty");
    const auto t0 = std::chrono::steady_clock::now();

    auto opt = make_optimizer(cfg.optimizer, model.params(), cfg.lr);
    std::optional<nn::PlateauScheduler> sched;
    if (cfg.plateau) sched.emplace(cfg.patience);

    bench::RunRecord rec;
    rec.model = model.id();
    rec.seed = cfg.seed;
    rec.epochs = cfg.epochs;

    auto forward = [&model](Tape& t, const data::Matrix& x, const std::vector<int>& y) {
        return model.forward_loss(t, x, y);
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (const auto& batch : data::make_batches(d.train_x.rows, cfg.batch_size, cfg.seed, epoch)) {
            const data::Matrix bx = detail::take_rows(d.train_x, batch);
            const std::vector<int> by = detail::take_labels(d.train_y, batch);
            Tape tape;
            ForwardResult r = model.forward_loss(tape, bx, by);
            tape.backward(r.loss);
            opt->step();
            opt->zero_grad();
            epoch_loss += r.loss.value()[0] * static_cast<double>(bx.rows);
        }
        rec.train_loss.push_back(epoch_loss / static_cast<double>(d.train_x.rows));
        const auto [val_loss, val_scores] = evaluate(forward, d.val_x, d.val_y);
        rec.val_loss.push_back(val_loss);
        if (sched) sched->step(val_loss, *opt);
    }

    const auto [test_loss, test_scores] = evaluate(forward, d.test_x, d.test_y);
    (void)test_loss;
    rec.metrics = bench::compute_metrics(test_scores, d.test_y, 0.5);
    rec.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

/// Drives the composite model through its three phases in order:
///   I   spiking front end alone (Adam), 20 epochs,
///   II  one single pass updating only the QLSTM branch (RMSprop),
///   III joint training, Adam on the QSNN group and RMSprop on the QLSTM
///       group, 20 epochs, loss taken from the QLSTM head only.
class ThreePhaseTrainer {
  public:
    ThreePhaseTrainer(HybridModel& model, const TrainConfig& cfg, const TrainData& d)
        : model_(model), cfg_(cfg), d_(d) {}

    std::size_t phase1_epochs() const { return cfg_.epochs / 2; }
    std::size_t phase3_epochs() const { return cfg_.epochs - phase1_epochs(); }
    std::size_t phase2_samples_seen() const { return phase2_samples_; }

    void run_phase1() {
        require_phase(0);
        auto opt = make_optimizer("adam", to_params(model_.qsnn_params()), cfg_.lr);
        for (std::size_t epoch = 0; epoch < phase1_epochs(); ++epoch) {
            const double train = run_epoch(
                [&](Tape& t, const data::Matrix& x, const std::vector<int>& y) { return model_.phase1_loss(t, x, y); },
                *opt, epoch);
            record_.train_loss.push_back(train);
            record_.val_loss.push_back(phase1_val_loss());
        }
        phase_ = 1;
    }

    void run_phase2() {
        require_phase(1);
        auto opt = make_optimizer("rmsprop", to_params(model_.qlstm_params()), cfg_.lr);
        phase2_samples_ = 0;
        const double train = run_epoch(
            [&](Tape& t, const data::Matrix& x, const std::vector<int>& y) {
                phase2_samples_ += x.rows;
                return model_.joint_loss(t, x, y);
            },
            *opt, phase1_epochs());
        record_.train_loss.push_back(train);
        record_.val_loss.push_back(joint_val_loss());
        phase_ = 2;
    }

    void run_phase3() {
        require_phase(2);
        auto qsnn_opt = make_optimizer("adam", to_params(model_.qsnn_params()), cfg_.lr);
        auto qlstm_opt = make_optimizer("rmsprop", to_params(model_.qlstm_params()), cfg_.lr);
        for (std::size_t epoch = 0; epoch < phase3_epochs(); ++epoch) {
            double epoch_loss = 0.0;
            const std::size_t shuffle_epoch = phase1_epochs() + 1 + epoch;
            for (const auto& batch : data::make_batches(d_.train_x.rows, cfg_.batch_size, cfg_.seed, shuffle_epoch)) {
                const data::Matrix bx = detail::take_rows(d_.train_x, batch);
                const std::vector<int> by = detail::take_labels(d_.train_y, batch);
                Tape tape;
                ForwardResult r = model_.joint_loss(tape, bx, by);
                tape.backward(r.loss);
                qsnn_opt->step();
                qlstm_opt->step();
                qsnn_opt->zero_grad();
                qlstm_opt->zero_grad();
                epoch_loss += r.loss.value()[0] * static_cast<double>(bx.rows);
            }
            record_.train_loss.push_back(epoch_loss / static_cast<double>(d_.train_x.rows));
            record_.val_loss.push_back(joint_val_loss());
        }
        phase_ = 3;
    }

    bench::RunRecord finish() {
        require_phase(3);
        auto forward = [&](Tape& t, const data::Matrix& x, const std::vector<int>& y) {
            return model_.joint_loss(t, x, y);
        };
        const auto [test_loss, test_scores] = evaluate(forward, d_.test_x, d_.test_y);
        (void)test_loss;
        record_.model = model_.id();
        record_.seed = cfg_.seed;
        record_.epochs = record_.train_loss.size();
        record_.metrics = bench::compute_metrics(test_scores, d_.test_y, 0.5);
        return record_;
    }

  private:
    void require_phase(int expected) const {
        if (phase_ != expected)
            throw std::logic_error("three-phase training: phase " + std::to_string(expected + 1) +
                                   " requested after phase " + std::to_string(phase_));
    }

    static std::vector<autodiff::Parameter*> to_params(const std::vector<NamedParam>& named) {
        std::vector<autodiff::Parameter*> out;
        for (const auto& np : named) out.push_back(np.param);
        return out;
    }

    template <class LossFn>
    double run_epoch(LossFn&& loss_fn, nn::Optimizer& opt, std::size_t shuffle_epoch) {
        double epoch_loss = 0.0;
        for (const auto& batch : data::make_batches(d_.train_x.rows, cfg_.batch_size, cfg_.seed, shuffle_epoch)) {
            const data::Matrix bx = detail::take_rows(d_.train_x, batch);
            const std::vector<int> by = detail::take_labels(d_.train_y, batch);
            Tape tape;
            ForwardResult r = loss_fn(tape, bx, by);
            tape.backward(r.loss);
            opt.step();
            opt.zero_grad();
            epoch_loss += r.loss.value()[0] * static_cast<double>(bx.rows);
        }
        return epoch_loss / static_cast<double>(d_.train_x.rows);
    }

    double phase1_val_loss() {
        auto forward = [&](Tape& t, const data::Matrix& x, const std::vector<int>& y) {
            return model_.phase1_loss(t, x, y);
        };
        return evaluate(forward, d_.val_x, d_.val_y).first;
    }

    double joint_val_loss() {
        auto forward = [&](Tape& t, const data::Matrix& x, const std::vector<int>& y) {
            return model_.joint_loss(t, x, y);
        };
        return evaluate(forward, d_.val_x, d_.val_y).first;
    }

    HybridModel& model_;
    TrainConfig cfg_;
    const TrainData& d_;
    bench::RunRecord record_;
    int phase_ = 0;
    std::size_t phase2_samples_ = 0;
};

inline bench::RunRecord train_hybrid_three_phase(HybridModel& model, const TrainConfig& cfg, const TrainData& d) {
    const auto t0 = std::chrono::steady_clock::now();
    ThreePhaseTrainer trainer(model, cfg, d);
    trainer.run_phase1();
    trainer.run_phase2();
    trainer.run_phase3();
    bench::RunRecord rec = trainer.finish();
    rec.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

/// Dispatches on the model id so callers need not special-case the composite.
inline bench::RunRecord train_any(ModelSetup& setup, const TrainData& d) {
    if (auto* hybrid = dynamic_cast<HybridModel*>(setup.model.get()))
        return train_hybrid_three_phase(*hybrid, setup.cfg, d);
    return train_model(*setup.model, setup.cfg, d);
}

}  // namespace qubrain::models
