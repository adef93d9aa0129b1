#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/tensor.hpp"

namespace gliomkit::net {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-3;
    double momentum = 0.0;  // sgd only
    double beta1 = 0.9;     // adam
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Updates a fixed set of registered tensors from their .g buffers.
template <typename T>
class Optimizer {
public:
    Optimizer(OptimizerConfig cfg, std::vector<Tensor<T>*> params)
        : cfg_(cfg), params_(std::move(params)) {
        if (cfg_.kind == OptimizerKind::adam || cfg_.momentum != 0.0) {
            m_.resize(params_.size());
            for (std::size_t i = 0; i < params_.size(); ++i)
                m_[i].assign(params_[i]->v.size(), T{});
        }
        if (cfg_.kind == OptimizerKind::adam) {
            v_.resize(params_.size());
            for (std::size_t i = 0; i < params_.size(); ++i)
                v_[i].assign(params_[i]->v.size(), T{});
        }
    }

    void step() {
        if (cfg_.kind == OptimizerKind::sgd) {
            step_sgd();
        } else {
            ++t_;
            step_adam();
        }
    }

    const OptimizerConfig& config() const { return cfg_; }

private:
    void step_sgd() {
        const T lr = static_cast<T>(cfg_.lr);
        const T mu = static_cast<T>(cfg_.momentum);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Tensor<T>& p = *params_[i];
            p.ensure_grad();
            if (mu == T{}) {
                for (std::size_t k = 0; k < p.v.size(); ++k) p.v[k] -= lr * p.g[k];
            } else {
                auto& vel = m_[i];
                for (std::size_t k = 0; k < p.v.size(); ++k) {
                    vel[k] = mu * vel[k] + p.g[k];
                    p.v[k] -= lr * vel[k];
                }
            }
        }
    }

    void step_adam() {
        const double lr = cfg_.lr;
        const double b1 = cfg_.beta1, b2 = cfg_.beta2, eps = cfg_.epsilon;
        const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Tensor<T>& p = *params_[i];
            p.ensure_grad();
            auto& m = m_[i];
            auto& v = v_[i];
            for (std::size_t k = 0; k < p.v.size(); ++k) {
                const double g = static_cast<double>(p.g[k]);
                m[k] = static_cast<T>(b1 * m[k] + (1.0 - b1) * g);
                v[k] = static_cast<T>(b2 * v[k] + (1.0 - b2) * g * g);
                const double mhat = static_cast<double>(m[k]) / bc1;
                const double vhat = static_cast<double>(v[k]) / bc2;
                p.v[k] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + eps));
            }
        }
    }

    OptimizerConfig cfg_;
    std::vector<Tensor<T>*> params_;
    std::vector<std::vector<T>> m_; // first moment / sgd velocity
    std::vector<std::vector<T>> v_; // second moment
    std::int64_t t_ = 0;
};

} // namespace gliomkit::net
