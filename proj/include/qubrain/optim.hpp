#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qubrain/tensor.hpp"

namespace qubrain::nn {

class Optimizer {
  public:
    Optimizer(std::vector<autodiff::Parameter*> params, double lr) : params_(std::move(params)), lr_(lr) {}
    virtual ~Optimizer() = default;

    virtual void step() = 0;

    void zero_grad() {
        for (auto* p : params_) p->zero_grad();
    }

    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }
    const std::vector<autodiff::Parameter*>& params() const { return params_; }

  protected:
    void check_grads() const {
        for (const auto* p : params_)
            if (p->grad.size() != p->value.size())
                throw std::logic_error("optimizer: parameter gradient buffer of size " +
                                       std::to_string(p->grad.size()) + " does not mirror value size " +
                                       std::to_string(p->value.size()));
    }

    std::vector<autodiff::Parameter*> params_;
    double lr_;
};

class Sgd final : public Optimizer {
  public:
    using Optimizer::Optimizer;

    void step() override {
        check_grads();
        for (auto* p : params_)
            for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr_ * p->grad[i];
    }
};

/// Adam with bias correction; defaults beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
class Adam final : public Optimizer {
  public:
    Adam(std::vector<autodiff::Parameter*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : Optimizer(std::move(params), lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (const auto* p : params_) {
            m_.emplace_back(p->value.size(), 0.0);
            v_.emplace_back(p->value.size(), 0.0);
        }
    }

    void step() override {
        check_grads();
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t pi = 0; pi < params_.size(); ++pi) {
            auto& p = *params_[pi];
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                const double g = p.grad[i];
                m_[pi][i] = beta1_ * m_[pi][i] + (1.0 - beta1_) * g;
                v_[pi][i] = beta2_ * v_[pi][i] + (1.0 - beta2_) * g * g;
                const double mhat = m_[pi][i] / bc1;
                const double vhat = v_[pi][i] / bc2;
                p.value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

  private:
    double beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

/// RMSprop with square-average decay 0.99 and eps = 1e-8 (no momentum).
class RmsProp final : public Optimizer {
  public:
    RmsProp(std::vector<autodiff::Parameter*> params, double lr, double alpha = 0.99, double eps = 1e-8)
        : Optimizer(std::move(params), lr), alpha_(alpha), eps_(eps) {
        for (const auto* p : params_) sq_.emplace_back(p->value.size(), 0.0);
    }

    void step() override {
        check_grads();
        for (std::size_t pi = 0; pi < params_.size(); ++pi) {
            auto& p = *params_[pi];
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                const double g = p.grad[i];
                sq_[pi][i] = alpha_ * sq_[pi][i] + (1.0 - alpha_) * g * g;
                p.value[i] -= lr_ * g / (std::sqrt(sq_[pi][i]) + eps_);
            }
        }
    }

  private:
    double alpha_, eps_;
    std::vector<std::vector<double>> sq_;
};

/// Multiplies the learning rate by `factor` once the monitored validation
/// loss has not improved by more than `min_improvement` for `patience`
/// consecutive epochs.
class PlateauScheduler {
  public:
    explicit PlateauScheduler(std::size_t patience, double factor = 0.1, double min_improvement = 1e-8)
        : patience_(patience), factor_(factor), min_improvement_(min_improvement) {
        if (factor <= 0.0 || factor >= 1.0) throw std::domain_error("PlateauScheduler: factor must lie in (0, 1)");
    }

    void step(double val_loss, Optimizer& opt) {
        if (val_loss < best_ - min_improvement_) {
            best_ = val_loss;
            wait_ = 0;
        } else if (++wait_ > patience_) {
            opt.set_lr(opt.lr() * factor_);
            wait_ = 0;
        }
    }

    double best() const { return best_; }
    std::size_t wait() const { return wait_; }

  private:
    std::size_t patience_;
    double factor_;
    double min_improvement_;
    double best_ = std::numeric_limits<double>::infinity();
    std::size_t wait_ = 0;
};

}  // namespace qubrain::nn
