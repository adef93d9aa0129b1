#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/csv.hpp"

namespace gliomkit::survival {

struct CohortTable {
    std::vector<std::string> ids;
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> features; // one row per subject
    std::vector<double> survival_days;         // NaN when unknown

    std::size_t size() const { return ids.size(); }
    std::size_t n_features() const { return feature_names.size(); }

    bool has_target(std::size_t i) const { return !std::isnan(survival_days[i]); }

    void add_row(std::string id, std::vector<double> row, double days) {
        if (!feature_names.empty() && row.size() != feature_names.size())
            throw shape_error(concat("cohort row for ", id, " has ", row.size(), " features, expected ",
                                     feature_names.size()));
        if (!std::isnan(days) && !(days > 0))
            throw value_error(concat("cohort: survival_days must be > 0, got ", days, " for ", id));
        ids.push_back(std::move(id));
        features.push_back(std::move(row));
        survival_days.push_back(days);
    }

    CohortTable select(const std::vector<std::size_t>& rows) const {
        CohortTable out;
        out.feature_names = feature_names;
        for (std::size_t r : rows) {
            out.ids.push_back(ids[r]);
            out.features.push_back(features[r]);
            out.survival_days.push_back(survival_days[r]);
        }
        return out;
    }
};

// Age + survival ground truth in the BraTS survival-CSV layout.
struct SurvivalRecord {
    double age = std::numeric_limits<double>::quiet_NaN();
    double days = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<std::pair<std::string, SurvivalRecord>> load_survival_csv(
    const std::string& path) {
    const csv::Table t = csv::read(path);
    const int id_col = t.column("BraTS18ID");
    const int age_col = t.column("Age");
    const int days_col = t.column("Survival");
    if (id_col < 0 || age_col < 0 || days_col < 0)
        throw format_error(concat(path, ": expected columns BraTS18ID, Age, Survival"));
    std::vector<std::pair<std::string, SurvivalRecord>> out;
    for (const auto& row : t.rows) {
        SurvivalRecord rec;
        const std::string& age_s = row[static_cast<std::size_t>(age_col)];
        const std::string& days_s = row[static_cast<std::size_t>(days_col)];
        if (!age_s.empty()) rec.age = std::stod(age_s);
        if (!days_s.empty()) rec.days = std::stod(days_s);
        out.emplace_back(row[static_cast<std::size_t>(id_col)], rec);
    }
    return out;
}

// Per-feature affine scaling fitted on a training set; constant features are
// left unscaled rather than dividing by zero.
struct Standardizer {
    std::vector<double> mean, std_dev;

    static Standardizer fit(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) throw value_error("standardizer: no rows");
        const std::size_t p = rows[0].size();
        Standardizer s;
        s.mean.assign(p, 0.0);
        s.std_dev.assign(p, 1.0);
        for (const auto& r : rows)
            for (std::size_t j = 0; j < p; ++j) s.mean[j] += r[j];
        for (auto& m : s.mean) m /= static_cast<double>(rows.size());
        std::vector<double> ss(p, 0.0);
        for (const auto& r : rows)
            for (std::size_t j = 0; j < p; ++j) ss[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
        for (std::size_t j = 0; j < p; ++j) {
            const double sd = std::sqrt(ss[j] / static_cast<double>(rows.size()));
            s.std_dev[j] = sd > 0.0 ? sd : 1.0;
        }
        return s;
    }

    std::vector<double> apply(const std::vector<double>& row) const {
        if (row.size() != mean.size())
            throw shape_error(concat("standardizer: row has ", row.size(), " features, expected ",
                                     mean.size()));
        std::vector<double> out(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / std_dev[j];
        return out;
    }

    std::vector<std::vector<double>> apply_all(const std::vector<std::vector<double>>& rows) const {
        std::vector<std::vector<double>> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(apply(r));
        return out;
    }
};

} // namespace gliomkit::survival
