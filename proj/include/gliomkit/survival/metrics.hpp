#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gliomkit/common.hpp"

namespace gliomkit::survival {

// Survival class thresholds in days: short < short_max <= mid < long_min <= long.
struct BucketThresholds {
    double short_max = 304.0; // ~10 months
    double long_min = 456.0;  // ~15 months
};

inline int bucket(double days, const BucketThresholds& th) {
    if (days < th.short_max) return 0;
    if (days < th.long_min) return 1;
    return 2;
}

namespace detail {

// Average ranks (ties share the mean of their rank range).
inline std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0; // constant after tie handling
    return sab / std::sqrt(saa * sbb);
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace detail

// Tie-aware Spearman rank correlation; 0 when either side is constant.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw shape_error("spearman: length mismatch");
    if (a.empty()) throw value_error("spearman: empty input");
    return detail::pearson(detail::average_ranks(a), detail::average_ranks(b));
}

struct SurvivalEval {
    std::int64_t cases = 0;
    double accuracy = 0.0;   // 3-bucket agreement
    double mse = 0.0;
    double median_se = 0.0;
    double std_se = 0.0;     // sample std of squared errors
    double spearman_r = 0.0;
    BucketThresholds thresholds; // recorded with the report
};

inline SurvivalEval evaluate_survival(const std::vector<double>& pred_days,
                                      const std::vector<double>& true_days,
                                      const BucketThresholds& th = {}) {
    if (pred_days.size() != true_days.size())
        throw shape_error(concat("evaluate_survival: ", pred_days.size(), " predictions vs ",
                                 true_days.size(), " truths"));
    if (pred_days.empty()) throw value_error("evaluate_survival: no cases");

    SurvivalEval ev;
    ev.cases = static_cast<std::int64_t>(pred_days.size());
    ev.thresholds = th;
    std::vector<double> se(pred_days.size());
    std::int64_t hits = 0;
    double sum_se = 0.0;
    for (std::size_t i = 0; i < pred_days.size(); ++i) {
        const double d = pred_days[i] - true_days[i];
        se[i] = d * d;
        sum_se += se[i];
        hits += bucket(pred_days[i], th) == bucket(true_days[i], th);
    }
    ev.accuracy = static_cast<double>(hits) / static_cast<double>(pred_days.size());
    ev.mse = sum_se / static_cast<double>(se.size());
    ev.median_se = detail::median(se);
    if (se.size() > 1) {
        double ss = 0.0;
        for (double v : se) ss += (v - ev.mse) * (v - ev.mse);
        ev.std_se = std::sqrt(ss / static_cast<double>(se.size() - 1));
    }
    ev.spearman_r = spearman(pred_days, true_days);
    return ev;
}

} // namespace gliomkit::survival
