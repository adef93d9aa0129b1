#pragma once

#include <cstdint>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/rng.hpp"
#include "gliomkit/survival/metrics.hpp"
#include "gliomkit/survival/model.hpp"

namespace gliomkit::survival {

struct CvResult {
    std::vector<SurvivalEval> folds;
    SurvivalEval mean; // metric means over folds; cases summed
    // ANN only: per-epoch curves averaged over folds (days^2); the validation
    // curve is the held-out fold, so train-vs-validation divergence is visible.
    std::vector<double> train_curve;
    std::vector<double> validation_curve;
};

// Seeded shuffled k-fold split. All standardization happens inside the model
// fit on the training fold only.
inline CvResult cross_validate(const CohortTable& cohort, const ModelConfig& cfg, int k_folds,
                               std::uint64_t seed, const BucketThresholds& th = {}) {
    const std::size_t n = cohort.size();
    if (k_folds < 2) throw value_error("cross_validate: need k >= 2");
    if (static_cast<std::size_t>(k_folds) > n)
        throw value_error(concat("cross_validate: k = ", k_folds, " exceeds cohort size ", n));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    CvResult res;
    std::vector<double> train_curve_sum, val_curve_sum;
    for (int f = 0; f < k_folds; ++f) {
        const std::size_t lo = n * static_cast<std::size_t>(f) / static_cast<std::size_t>(k_folds);
        const std::size_t hi =
            n * (static_cast<std::size_t>(f) + 1) / static_cast<std::size_t>(k_folds);
        std::vector<std::size_t> test_rows(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                           order.begin() + static_cast<std::ptrdiff_t>(hi));
        std::vector<std::size_t> train_rows;
        train_rows.reserve(n - test_rows.size());
        for (std::size_t i = 0; i < n; ++i)
            if (i < lo || i >= hi) train_rows.push_back(order[i]);

        const CohortTable train = cohort.select(train_rows);
        const CohortTable test = cohort.select(test_rows);
        const std::uint64_t fold_seed = Rng(seed).fork(static_cast<std::uint64_t>(f)).next_u64();

        std::vector<double> pred, truth;
        if (cfg.kind == ModelKind::ann) {
            AnnConfig acfg = cfg.ann;
            acfg.seed = fold_seed;
            std::vector<double> val_curve;
            const AnnModel model = train_ann(train, acfg, &test, &val_curve);
            for (std::size_t i = 0; i < test.size(); ++i) {
                pred.push_back(model.predict(test.features[i]));
                truth.push_back(test.survival_days[i]);
            }
            if (train_curve_sum.empty()) {
                train_curve_sum.assign(model.train_loss.size(), 0.0);
                val_curve_sum.assign(val_curve.size(), 0.0);
            }
            for (std::size_t e = 0; e < model.train_loss.size(); ++e)
                train_curve_sum[e] += model.train_loss[e];
            for (std::size_t e = 0; e < val_curve.size(); ++e) val_curve_sum[e] += val_curve[e];
        } else {
            const SurvivalModel model = SurvivalModel::fit(train, cfg, fold_seed);
            for (std::size_t i = 0; i < test.size(); ++i) {
                pred.push_back(model.predict(test.features[i]));
                truth.push_back(test.survival_days[i]);
            }
        }
        res.folds.push_back(evaluate_survival(pred, truth, th));
    }

    res.mean.thresholds = th;
    for (const auto& ev : res.folds) {
        res.mean.cases += ev.cases;
        res.mean.accuracy += ev.accuracy;
        res.mean.mse += ev.mse;
        res.mean.median_se += ev.median_se;
        res.mean.std_se += ev.std_se;
        res.mean.spearman_r += ev.spearman_r;
    }
    const double k = static_cast<double>(res.folds.size());
    res.mean.accuracy /= k;
    res.mean.mse /= k;
    res.mean.median_se /= k;
    res.mean.std_se /= k;
    res.mean.spearman_r /= k;

    for (std::size_t e = 0; e < train_curve_sum.size(); ++e)
        res.train_curve.push_back(train_curve_sum[e] / k);
    for (std::size_t e = 0; e < val_curve_sum.size(); ++e)
        res.validation_curve.push_back(val_curve_sum[e] / k);
    return res;
}

} // namespace gliomkit::survival
