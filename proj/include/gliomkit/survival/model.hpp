#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gliomkit/checkpoint.hpp"
#include "gliomkit/common.hpp"
#include "gliomkit/survival/ann.hpp"
#include "gliomkit/survival/baselines.hpp"
#include "gliomkit/survival/cohort.hpp"

namespace gliomkit::survival {

enum class ModelKind { ann, linear, logistic, random_forest, svr_rbf };

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "ann") return ModelKind::ann;
    if (s == "linear") return ModelKind::linear;
    if (s == "logistic") return ModelKind::logistic;
    if (s == "random_forest") return ModelKind::random_forest;
    if (s == "svr_rbf" || s == "svm") return ModelKind::svr_rbf;
    throw value_error(concat("unknown survival model kind '", s,
                             "'; available: ann, linear, logistic, random_forest, svr_rbf"));
}

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::ann: return "ann";
        case ModelKind::linear: return "linear";
        case ModelKind::logistic: return "logistic";
        case ModelKind::random_forest: return "random_forest";
        case ModelKind::svr_rbf: return "svr_rbf";
    }
    return "?";
}

struct ModelConfig {
    ModelKind kind = ModelKind::ann;
    AnnConfig ann;
    BaselineConfig baseline;
};

constexpr char survival_checkpoint_magic[checkpoint::magic_size] = {'G', 'L', 'K', 'S',
                                                                    'R', 'V', '1', '\0'};

// A fitted survival regressor of any kind, with uniform predict and
// persistence. Predictions are days, clamped at >= 0.
class SurvivalModel {
public:
    static SurvivalModel fit(const CohortTable& cohort, ModelConfig cfg, std::uint64_t seed) {
        for (std::size_t i = 0; i < cohort.size(); ++i)
            if (!cohort.has_target(i))
                throw value_error(concat("fit: subject ", cohort.ids[i], " has no survival target"));
        SurvivalModel m;
        m.kind_ = cfg.kind;
        m.feature_names_ = cohort.feature_names;
        switch (cfg.kind) {
            case ModelKind::ann: {
                cfg.ann.seed = seed;
                m.impl_ = train_ann(cohort, cfg.ann);
                break;
            }
            case ModelKind::linear:
                m.impl_ = LinearModel::fit(cohort.features, cohort.survival_days, cfg.baseline);
                break;
            case ModelKind::logistic:
                m.impl_ = LogisticModel::fit(cohort.features, cohort.survival_days, cfg.baseline);
                break;
            case ModelKind::random_forest: {
                cfg.baseline.seed = seed;
                m.impl_ = ForestModel::fit(cohort.features, cohort.survival_days, cfg.baseline);
                break;
            }
            case ModelKind::svr_rbf:
                m.impl_ = SvrModel::fit(cohort.features, cohort.survival_days, cfg.baseline);
                break;
        }
        return m;
    }

    double predict(const std::vector<double>& features) const {
        const double days = std::visit([&](const auto& mod) { return mod.predict(features); }, impl_);
        return std::max(0.0, days);
    }

    ModelKind kind() const { return kind_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }

    template <typename M>
    const M& as() const {
        return std::get<M>(impl_);
    }

    void save(const std::string& path) const {
        nlohmann::json meta;
        meta["format"] = "gliomkit-survival";
        meta["format_version"] = 1;
        meta["kind"] = to_string(kind_);
        meta["feature_names"] = feature_names_;
        std::vector<Tensor<double>> tensors;
        switch (kind_) {
            case ModelKind::ann: {
                const auto& m = std::get<AnnModel>(impl_);
                meta["standardizer"] = {{"mean", m.features_std.mean}, {"std", m.features_std.std_dev}};
                meta["target_mean"] = m.target_mean;
                meta["target_std"] = m.target_std;
                meta["hidden"] = m.hidden;
                meta["input_dim"] = m.input_dim;
                tensors.push_back(vec_tensor(m.w1, {m.input_dim, m.hidden}));
                tensors.push_back(vec_tensor(m.b1, {m.hidden}));
                tensors.push_back(vec_tensor(m.w2, {m.hidden}));
                tensors.push_back(vec_tensor({m.b2}, {1}));
                break;
            }
            case ModelKind::linear: {
                const auto& m = std::get<LinearModel>(impl_);
                meta["coefficients"] = m.coefficients;
                meta["intercept"] = m.intercept;
                break;
            }
            case ModelKind::logistic: {
                const auto& m = std::get<LogisticModel>(impl_);
                meta["standardizer"] = {{"mean", m.xs.mean}, {"std", m.xs.std_dev}};
                meta["weights"] = m.w;
                meta["midpoints"] = m.midpoints;
                meta["p"] = m.p;
                break;
            }
            case ModelKind::random_forest: {
                const auto& m = std::get<ForestModel>(impl_);
                meta["n_trees"] = m.trees.size();
                for (const auto& tree : m.trees) {
                    Tensor<double> t({static_cast<std::int64_t>(tree.nodes.size()), 5});
                    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
                        const auto& nd = tree.nodes[i];
                        t.v[i * 5 + 0] = nd.feature;
                        t.v[i * 5 + 1] = nd.threshold;
                        t.v[i * 5 + 2] = nd.left;
                        t.v[i * 5 + 3] = nd.right;
                        t.v[i * 5 + 4] = nd.value;
                    }
                    tensors.push_back(std::move(t));
                }
                break;
            }
            case ModelKind::svr_rbf: {
                const auto& m = std::get<SvrModel>(impl_);
                meta["standardizer"] = {{"mean", m.xs.mean}, {"std", m.xs.std_dev}};
                meta["y_mean"] = m.y_mean;
                meta["y_std"] = m.y_std;
                meta["bias"] = m.bias;
                meta["gamma"] = m.gamma;
                meta["epsilon"] = m.epsilon;
                meta["c"] = m.c;
                meta["beta"] = m.beta;
                Tensor<double> sup({static_cast<std::int64_t>(m.support.size()),
                                    static_cast<std::int64_t>(m.support.empty() ? 0 : m.support[0].size())});
                for (std::size_t i = 0; i < m.support.size(); ++i)
                    for (std::size_t j = 0; j < m.support[i].size(); ++j)
                        sup.v[i * m.support[i].size() + j] = m.support[i][j];
                tensors.push_back(std::move(sup));
                break;
            }
        }
        std::vector<const Tensor<double>*> ptrs;
        for (const auto& t : tensors) ptrs.push_back(&t);
        checkpoint::save(path, survival_checkpoint_magic, meta, ptrs);
    }

    static SurvivalModel load(const std::string& path) {
        auto loaded = checkpoint::load(path, survival_checkpoint_magic);
        const auto& meta = loaded.meta;
        SurvivalModel out;
        out.kind_ = model_kind_from_string(meta.at("kind").get<std::string>());
        out.feature_names_ = meta.value("feature_names", std::vector<std::string>{});
        switch (out.kind_) {
            case ModelKind::ann: {
                AnnModel m;
                m.feature_names = out.feature_names_;
                m.features_std.mean = meta.at("standardizer").at("mean").get<std::vector<double>>();
                m.features_std.std_dev = meta.at("standardizer").at("std").get<std::vector<double>>();
                m.target_mean = meta.at("target_mean").get<double>();
                m.target_std = meta.at("target_std").get<double>();
                m.hidden = meta.at("hidden").get<int>();
                m.input_dim = meta.at("input_dim").get<int>();
                m.w1 = tensor_vec(loaded.tensors.at(0));
                m.b1 = tensor_vec(loaded.tensors.at(1));
                m.w2 = tensor_vec(loaded.tensors.at(2));
                m.b2 = loaded.tensors.at(3).v.at(0);
                out.impl_ = std::move(m);
                break;
            }
            case ModelKind::linear: {
                LinearModel m;
                m.coefficients = meta.at("coefficients").get<std::vector<double>>();
                m.intercept = meta.at("intercept").get<double>();
                out.impl_ = std::move(m);
                break;
            }
            case ModelKind::logistic: {
                LogisticModel m;
                m.xs.mean = meta.at("standardizer").at("mean").get<std::vector<double>>();
                m.xs.std_dev = meta.at("standardizer").at("std").get<std::vector<double>>();
                m.w = meta.at("weights").get<std::vector<double>>();
                m.midpoints = meta.at("midpoints").get<std::array<double, 3>>();
                m.p = meta.at("p").get<int>();
                out.impl_ = std::move(m);
                break;
            }
            case ModelKind::random_forest: {
                ForestModel m;
                for (const auto& t : loaded.tensors) {
                    ForestModel::Tree tree;
                    const std::int64_t rows = t.dim(0);
                    tree.nodes.resize(static_cast<std::size_t>(rows));
                    for (std::int64_t i = 0; i < rows; ++i) {
                        auto& nd = tree.nodes[static_cast<std::size_t>(i)];
                        nd.feature = static_cast<int>(t.v[static_cast<std::size_t>(i * 5 + 0)]);
                        nd.threshold = t.v[static_cast<std::size_t>(i * 5 + 1)];
                        nd.left = static_cast<std::int32_t>(t.v[static_cast<std::size_t>(i * 5 + 2)]);
                        nd.right = static_cast<std::int32_t>(t.v[static_cast<std::size_t>(i * 5 + 3)]);
                        nd.value = t.v[static_cast<std::size_t>(i * 5 + 4)];
                    }
                    m.trees.push_back(std::move(tree));
                }
                out.impl_ = std::move(m);
                break;
            }
            case ModelKind::svr_rbf: {
                SvrModel m;
                m.xs.mean = meta.at("standardizer").at("mean").get<std::vector<double>>();
                m.xs.std_dev = meta.at("standardizer").at("std").get<std::vector<double>>();
                m.y_mean = meta.at("y_mean").get<double>();
                m.y_std = meta.at("y_std").get<double>();
                m.bias = meta.at("bias").get<double>();
                m.gamma = meta.at("gamma").get<double>();
                m.epsilon = meta.at("epsilon").get<double>();
                m.c = meta.at("c").get<double>();
                m.beta = meta.at("beta").get<std::vector<double>>();
                const auto& sup = loaded.tensors.at(0);
                const std::int64_t rows = sup.dim(0), cols = sup.dim(1);
                m.support.assign(static_cast<std::size_t>(rows),
                                 std::vector<double>(static_cast<std::size_t>(cols)));
                for (std::int64_t i = 0; i < rows; ++i)
                    for (std::int64_t j = 0; j < cols; ++j)
                        m.support[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                            sup.v[static_cast<std::size_t>(i * cols + j)];
                out.impl_ = std::move(m);
                break;
            }
        }
        return out;
    }

private:
    static Tensor<double> vec_tensor(const std::vector<double>& v,
                                     std::vector<std::int64_t> shape) {
        Tensor<double> t(std::move(shape));
        t.v = v;
        return t;
    }
    static std::vector<double> tensor_vec(const Tensor<float>& t) {
        std::vector<double> v(t.v.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = t.v[i];
        return v;
    }

    ModelKind kind_ = ModelKind::ann;
    std::vector<std::string> feature_names_;
    std::variant<AnnModel, LinearModel, LogisticModel, ForestModel, SvrModel> impl_;
};

} // namespace gliomkit::survival
