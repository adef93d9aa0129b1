#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/rng.hpp"
#include "gliomkit/survival/cohort.hpp"

namespace gliomkit::survival {

struct AnnConfig {
    int hidden = 100;
    int epochs = 900;
    int batch = 10;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    // Adam moments
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
};

// One-hidden-layer ReLU regressor trained with Adam on MSE. Features and the
// target are standardized by training statistics stored with the model; the
// prediction path applies them and clamps the output at >= 0 days.
struct AnnModel {
    std::vector<std::string> feature_names;
    Standardizer features_std;
    double target_mean = 0.0, target_std = 1.0;
    int input_dim = 0, hidden = 0;
    std::vector<double> w1; // (input_dim, hidden) row-major
    std::vector<double> b1; // (hidden)
    std::vector<double> w2; // (hidden)
    double b2 = 0.0;
    std::vector<double> train_loss; // per-epoch mean MSE, days^2

    // Standardized-space forward pass.
    double forward_standardized(const std::vector<double>& x) const {
        double out = b2;
        for (int h = 0; h < hidden; ++h) {
            double a = b1[static_cast<std::size_t>(h)];
            for (int j = 0; j < input_dim; ++j)
                a += x[static_cast<std::size_t>(j)] * w1[static_cast<std::size_t>(j * hidden + h)];
            if (a > 0.0) out += a * w2[static_cast<std::size_t>(h)];
        }
        return out;
    }

    double predict(const std::vector<double>& features) const {
        if (static_cast<int>(features.size()) != input_dim)
            throw shape_error(concat("predict: feature length ", features.size(),
                                     " does not match model input ", input_dim));
        const double y = forward_standardized(features_std.apply(features));
        return std::max(0.0, y * target_std + target_mean);
    }
};

inline AnnModel train_ann(const CohortTable& cohort, const AnnConfig& cfg,
                          const CohortTable* validation = nullptr,
                          std::vector<double>* validation_curve = nullptr) {
    const std::size_t n = cohort.size();
    if (n < 2) throw value_error("train_ann: need at least 2 training rows");
    for (std::size_t i = 0; i < n; ++i)
        if (!cohort.has_target(i))
            throw value_error(concat("train_ann: subject ", cohort.ids[i], " has no survival target"));
    if (cfg.hidden < 1) throw value_error("train_ann: hidden width must be >= 1");

    int batch = cfg.batch;
    if (static_cast<std::size_t>(batch) > n) {
        log_warn("train_ann: batch ", batch, " larger than cohort (", n, "); clamping");
        batch = static_cast<int>(n);
    }

    AnnModel model;
    model.feature_names = cohort.feature_names;
    model.features_std = Standardizer::fit(cohort.features);
    model.input_dim = static_cast<int>(cohort.features[0].size());
    model.hidden = cfg.hidden;

    const auto X = model.features_std.apply_all(cohort.features);
    double ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) ym += cohort.survival_days[i];
    ym /= static_cast<double>(n);
    double ys = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        ys += (cohort.survival_days[i] - ym) * (cohort.survival_days[i] - ym);
    ys = std::sqrt(ys / static_cast<double>(n));
    model.target_mean = ym;
    model.target_std = ys > 0.0 ? ys : 1.0;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = (cohort.survival_days[i] - model.target_mean) / model.target_std;

    const int p = model.input_dim, h = cfg.hidden;
    Rng rng(cfg.seed);
    model.w1.resize(static_cast<std::size_t>(p * h));
    model.b1.assign(static_cast<std::size_t>(h), 0.0);
    model.w2.resize(static_cast<std::size_t>(h));
    const double s1 = std::sqrt(2.0 / static_cast<double>(p));
    const double s2 = std::sqrt(2.0 / static_cast<double>(h));
    for (auto& w : model.w1) w = rng.normal(0.0, s1);
    for (auto& w : model.w2) w = rng.normal(0.0, s2);

    // Adam state
    std::vector<double> m_w1(model.w1.size(), 0.0), v_w1(model.w1.size(), 0.0);
    std::vector<double> m_b1(model.b1.size(), 0.0), v_b1(model.b1.size(), 0.0);
    std::vector<double> m_w2(model.w2.size(), 0.0), v_w2(model.w2.size(), 0.0);
    double m_b2 = 0.0, v_b2 = 0.0;
    std::int64_t t = 0;

    std::vector<double> g_w1(model.w1.size()), g_b1(model.b1.size()), g_w2(model.w2.size());
    std::vector<double> act(static_cast<std::size_t>(h)), pre(static_cast<std::size_t>(h));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    auto adam_update = [&](std::vector<double>& w, std::vector<double>& m, std::vector<double>& v,
                           const std::vector<double>& g, double bc1, double bc2) {
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            w[k] -= cfg.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + cfg.epsilon);
        }
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::int64_t n_batches = 0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch)) {
            const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch));
            const double bsz = static_cast<double>(end - start);
            std::fill(g_w1.begin(), g_w1.end(), 0.0);
            std::fill(g_b1.begin(), g_b1.end(), 0.0);
            std::fill(g_w2.begin(), g_w2.end(), 0.0);
            double g_b2 = 0.0;
            double batch_loss = 0.0;
            for (std::size_t bi = start; bi < end; ++bi) {
                const auto& x = X[order[bi]];
                double out = model.b2;
                for (int k = 0; k < h; ++k) {
                    double a = model.b1[static_cast<std::size_t>(k)];
                    for (int j = 0; j < p; ++j)
                        a += x[static_cast<std::size_t>(j)] * model.w1[static_cast<std::size_t>(j * h + k)];
                    pre[static_cast<std::size_t>(k)] = a;
                    act[static_cast<std::size_t>(k)] = a > 0.0 ? a : 0.0;
                    out += act[static_cast<std::size_t>(k)] * model.w2[static_cast<std::size_t>(k)];
                }
                const double err = out - y[order[bi]];
                batch_loss += err * err;
                const double d_out = 2.0 * err / bsz;
                g_b2 += d_out;
                for (int k = 0; k < h; ++k) {
                    g_w2[static_cast<std::size_t>(k)] += d_out * act[static_cast<std::size_t>(k)];
                    if (pre[static_cast<std::size_t>(k)] > 0.0) {
                        const double dh = d_out * model.w2[static_cast<std::size_t>(k)];
                        g_b1[static_cast<std::size_t>(k)] += dh;
                        for (int j = 0; j < p; ++j)
                            g_w1[static_cast<std::size_t>(j * h + k)] += dh * x[static_cast<std::size_t>(j)];
                    }
                }
            }
            batch_loss /= bsz;
            if (!std::isfinite(batch_loss))
                throw value_error(concat("train_ann: non-finite loss at epoch ", epoch));
            ++t;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
            adam_update(model.w1, m_w1, v_w1, g_w1, bc1, bc2);
            adam_update(model.b1, m_b1, v_b1, g_b1, bc1, bc2);
            adam_update(model.w2, m_w2, v_w2, g_w2, bc1, bc2);
            m_b2 = cfg.beta1 * m_b2 + (1.0 - cfg.beta1) * g_b2;
            v_b2 = cfg.beta2 * v_b2 + (1.0 - cfg.beta2) * g_b2 * g_b2;
            model.b2 -= cfg.lr * (m_b2 / bc1) / (std::sqrt(v_b2 / bc2) + cfg.epsilon);
            epoch_loss += batch_loss;
            ++n_batches;
        }
        model.train_loss.push_back(epoch_loss / static_cast<double>(n_batches) * model.target_std *
                                   model.target_std);
        if (validation && validation_curve) {
            double vmse = 0.0;
            for (std::size_t i = 0; i < validation->size(); ++i) {
                const double d = model.predict(validation->features[i]) - validation->survival_days[i];
                vmse += d * d;
            }
            validation_curve->push_back(vmse / static_cast<double>(validation->size()));
        }
    }
    return model;
}

} // namespace gliomkit::survival
