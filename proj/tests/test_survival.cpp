#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gliomkit/rng.hpp"
#include "gliomkit/survival.hpp"

using namespace gliomkit;
using namespace gliomkit::survival;

namespace {

// y = w.x + intercept + noise over p features (only the first few weights
// large), x standard normal.
CohortTable synthetic_cohort(std::size_t n, std::size_t p, double noise_std, std::uint64_t seed,
                             std::vector<double>* w_out = nullptr) {
    Rng rng(seed);
    std::vector<double> w(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) w[j] = j < 5 ? rng.uniform(40.0, 80.0) : rng.uniform(-2.0, 2.0);
    if (w_out) *w_out = w;
    CohortTable cohort;
    for (std::size_t j = 0; j < p; ++j) cohort.feature_names.push_back("f" + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(p);
        for (auto& v : x) v = rng.normal();
        double y = 400.0;
        for (std::size_t j = 0; j < p; ++j) y += w[j] * x[j];
        y += rng.normal(0.0, noise_std);
        y = std::max(30.0, y);
        cohort.add_row("s" + std::to_string(i), std::move(x), y);
    }
    return cohort;
}

} // namespace

TEST_CASE("evaluate_survival: hand-computed 3-case example at 1e-9") {
    const std::vector<double> pred = {100, 400, 500};
    const std::vector<double> truth = {200, 400, 600};
    const auto ev = evaluate_survival(pred, truth, {304.0, 456.0});
    CHECK(ev.cases == 3);
    // buckets: (short, mid, long) on both sides
    CHECK(ev.accuracy == Catch::Approx(1.0).margin(1e-12));
    const double mse = (10000.0 + 0.0 + 10000.0) / 3.0;
    CHECK(ev.mse == Catch::Approx(mse).margin(1e-9));
    CHECK(ev.median_se == Catch::Approx(10000.0).margin(1e-9));
    // sample std of {10000, 0, 10000}
    const double m = mse;
    const double ss = (10000 - m) * (10000 - m) * 2 + m * m;
    CHECK(ev.std_se == Catch::Approx(std::sqrt(ss / 2.0)).margin(1e-9));
    CHECK(ev.spearman_r == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("evaluate_survival: perfect predictions") {
    const std::vector<double> days = {120, 360, 520, 90};
    const auto ev = evaluate_survival(days, days);
    CHECK(ev.accuracy == 1.0);
    CHECK(ev.mse == 0.0);
    CHECK(ev.median_se == 0.0);
    CHECK(ev.spearman_r == 1.0);
}

TEST_CASE("spearman: monotone, anti-monotone, constant-after-ties") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == Catch::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {40, 30, 20, 10}) == Catch::Approx(-1.0));
    CHECK(spearman({5, 5, 5, 5}, {1, 2, 3, 4}) == 0.0);
    // invariant under strictly monotone transforms
    CHECK(spearman({1, 4, 9, 25}, {2, 3, 5, 7}) ==
          Catch::Approx(spearman({1, 2, 3, 5}, {20, 30, 50, 70})));
    // ties get average ranks
    CHECK(spearman({1, 1, 2}, {1, 1, 2}) == Catch::Approx(1.0));
}

TEST_CASE("bucket thresholds: boundary membership") {
    const BucketThresholds th{304, 456};
    CHECK(bucket(303.9, th) == 0);
    CHECK(bucket(304.0, th) == 1);
    CHECK(bucket(455.9, th) == 1);
    CHECK(bucket(456.0, th) == 2);
}

TEST_CASE("ann: learns a one-feature linear law to high precision") {
    // y = 3x, no noise
    CohortTable cohort;
    cohort.feature_names = {"x"};
    Rng rng(81);
    for (int i = 0; i < 120; ++i) {
        const double x = rng.uniform(50.0, 250.0);
        cohort.add_row("s" + std::to_string(i), {x}, 3.0 * x);
    }
    CohortTable train, test;
    train.feature_names = test.feature_names = cohort.feature_names;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        auto& dst = i % 5 == 0 ? test : train;
        dst.add_row(cohort.ids[i], cohort.features[i], cohort.survival_days[i]);
    }
    AnnConfig cfg;
    cfg.hidden = 32;
    cfg.epochs = 400;
    cfg.batch = 10;
    cfg.lr = 3e-3;
    cfg.seed = 5;
    const AnnModel model = train_ann(train, cfg);
    double mse = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double d = model.predict(test.features[i]) - test.survival_days[i];
        mse += d * d;
    }
    mse /= static_cast<double>(test.size());
    // normalized-space MSE < 1e-2 means raw MSE < 1e-2 * target_var
    CHECK(mse / (model.target_std * model.target_std) < 1e-2);
}

TEST_CASE("ann: zero learning rate keeps the initial weights") {
    auto cohort = synthetic_cohort(20, 5, 10.0, 82);
    AnnConfig cfg;
    cfg.hidden = 8;
    cfg.epochs = 3;
    cfg.lr = 0.0;
    cfg.seed = 7;
    const AnnModel trained = train_ann(cohort, cfg);
    cfg.epochs = 0;
    const AnnModel init = train_ann(cohort, cfg);
    CHECK(trained.w1 == init.w1);
    CHECK(trained.b1 == init.b1);
    CHECK(trained.w2 == init.w2);
    CHECK(trained.b2 == init.b2);
}

TEST_CASE("ann: fixed seed reproduces identical weights") {
    auto cohort = synthetic_cohort(30, 8, 20.0, 83);
    AnnConfig cfg;
    cfg.hidden = 16;
    cfg.epochs = 20;
    cfg.seed = 7;
    const AnnModel a = train_ann(cohort, cfg);
    const AnnModel b = train_ann(cohort, cfg);
    CHECK(a.w1 == b.w1);
    CHECK(a.b1 == b.b1);
    CHECK(a.w2 == b.w2);
    CHECK(a.b2 == b.b2);
    CHECK(a.train_loss == b.train_loss);
}

TEST_CASE("ann predict: zero weights with bias, hand ReLU chain, clamp at 0") {
    AnnModel m;
    m.input_dim = 3;
    m.hidden = 2;
    m.features_std.mean = {0, 0, 0};
    m.features_std.std_dev = {1, 1, 1};
    m.target_mean = 0.0;
    m.target_std = 1.0;
    m.w1.assign(6, 0.0);
    m.b1.assign(2, 0.0);
    m.w2.assign(2, 0.0);
    m.b2 = 200.0;
    CHECK(m.predict({1.0, -5.0, 100.0}) == 200.0);

    // 1 -> 1 -> 1 hand chain: h = relu(2x + 1), y = 3h - 4
    AnnModel h;
    h.input_dim = 1;
    h.hidden = 1;
    h.features_std.mean = {0};
    h.features_std.std_dev = {1};
    h.target_mean = 0.0;
    h.target_std = 1.0;
    h.w1 = {2.0};
    h.b1 = {1.0};
    h.w2 = {3.0};
    h.b2 = -4.0;
    CHECK(h.predict({2.0}) == Catch::Approx(3.0 * 5.0 - 4.0)); // 11
    CHECK(h.predict({-3.0}) == 0.0);                           // relu kills, then clamp(-4) -> 0

    m.b2 = -50.0;
    CHECK(m.predict({0.0, 0.0, 0.0}) == 0.0);

    CHECK_THROWS_AS(m.predict({1.0}), shape_error);
}

TEST_CASE("linear baseline: interpolates exact linear data and recovers coefficients") {
    Rng rng(84);
    const std::size_t n = 200, p = 50;
    std::vector<double> w(p);
    for (auto& v : w) v = rng.uniform(-5.0, 5.0);
    const double intercept = 123.0;
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(p);
        for (auto& v : x) v = rng.normal();
        double t = intercept;
        for (std::size_t j = 0; j < p; ++j) t += w[j] * x[j];
        X.push_back(std::move(x));
        y.push_back(t);
    }
    const LinearModel m = LinearModel::fit(X, y);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(m.predict(X[i]) - y[i]) <= 1e-6);
    for (std::size_t j = 0; j < p; ++j) CHECK(m.coefficients[j] == Catch::Approx(w[j]).margin(1e-3));
    CHECK(m.intercept == Catch::Approx(intercept).margin(1e-3));
}

TEST_CASE("linear baseline: singular Gram falls back to ridge without crashing") {
    // duplicated feature makes X'X singular
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    Rng rng(85);
    for (int i = 0; i < 30; ++i) {
        const double a = rng.normal();
        X.push_back({a, a, rng.normal()});
        y.push_back(2.0 * a + 1.0);
    }
    const LinearModel m = LinearModel::fit(X, y);
    for (std::size_t i = 0; i < X.size(); ++i) CHECK(m.predict(X[i]) == Catch::Approx(y[i]).margin(1e-3));
}

TEST_CASE("random forest: constant target predicts the constant; forest = mean of trees") {
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    Rng rng(86);
    for (int i = 0; i < 50; ++i) {
        X.push_back({rng.normal(), rng.normal(), rng.normal()});
        y.push_back(365.0);
    }
    BaselineConfig cfg;
    cfg.n_trees = 20;
    cfg.seed = 3;
    const ForestModel constant = ForestModel::fit(X, y, cfg);
    for (const auto& x : X) CHECK(constant.predict(x) == Catch::Approx(365.0));

    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 100.0 * X[i][0] + 50.0 * X[i][1] + 300.0;
    const ForestModel m = ForestModel::fit(X, y, cfg);
    const std::vector<double> probe = {0.3, -0.2, 0.9};
    double mean = 0.0;
    for (const auto& tree : m.trees) mean += tree.predict(probe);
    mean /= static_cast<double>(m.trees.size());
    CHECK(m.predict(probe) == Catch::Approx(mean).margin(1e-12));
}

TEST_CASE("svr: near-linear data stays within epsilon + 0.05 (standardized)") {
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int i = 0; i < 20; ++i) {
        const double x = static_cast<double>(i) / 19.0;
        X.push_back({x});
        y.push_back(x); // y = x
    }
    BaselineConfig cfg;
    cfg.svr_epsilon = 0.02; // tight tube, standardized units
    cfg.svr_c = 10.0;
    cfg.svr_gamma = 2.0;
    const SvrModel m = SvrModel::fit(X, y, cfg);
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double err = std::abs(m.predict(X[i]) - y[i]) / m.y_std;
        CHECK(err <= cfg.svr_epsilon + 0.05);
    }
    CHECK(m.kkt_residual <= 1e-3);
}

TEST_CASE("svr: KKT residual small at convergence on a noisy problem") {
    Rng rng(87);
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int i = 0; i < 40; ++i) {
        std::vector<double> x = {rng.normal(), rng.normal()};
        y.push_back(200.0 + 60.0 * x[0] - 40.0 * x[1] + rng.normal(0.0, 5.0));
        X.push_back(std::move(x));
    }
    const SvrModel m = SvrModel::fit(X, y);
    CHECK(m.kkt_residual <= 1e-3);
    // sum of beta must vanish (equality constraint)
    double s = 0.0;
    for (double b : m.beta) s += b;
    CHECK(std::abs(s) < 1e-9);
}

TEST_CASE("cross_validate: leave-one-out on a 5-row cohort gives 5 single-case folds") {
    auto cohort = synthetic_cohort(5, 3, 5.0, 88);
    ModelConfig mc;
    mc.kind = ModelKind::linear;
    const CvResult res = cross_validate(cohort, mc, 5, 42);
    CHECK(res.folds.size() == 5);
    for (const auto& f : res.folds) CHECK(f.cases == 1);
    CHECK(res.mean.cases == 5);

    CHECK_THROWS_AS(cross_validate(cohort, mc, 6, 42), value_error);
}

TEST_CASE("cross_validate: identical metrics across runs with the same seed") {
    auto cohort = synthetic_cohort(40, 6, 25.0, 89);
    ModelConfig mc;
    mc.kind = ModelKind::random_forest;
    mc.baseline.n_trees = 10;
    const CvResult a = cross_validate(cohort, mc, 4, 7);
    const CvResult b = cross_validate(cohort, mc, 4, 7);
    REQUIRE(a.folds.size() == b.folds.size());
    for (std::size_t f = 0; f < a.folds.size(); ++f) {
        CHECK(a.folds[f].mse == b.folds[f].mse);
        CHECK(a.folds[f].accuracy == b.folds[f].accuracy);
        CHECK(a.folds[f].spearman_r == b.folds[f].spearman_r);
    }
}

TEST_CASE("constant predictor scores chance accuracy on a bucket-balanced cohort") {
    // direct simulation of the chance level
    Rng rng(90);
    std::vector<double> truth, pred;
    for (int i = 0; i < 3000; ++i) {
        const int b = static_cast<int>(rng.uniform_index(3));
        truth.push_back(b == 0 ? rng.uniform(30, 303) : b == 1 ? rng.uniform(305, 455)
                                                               : rng.uniform(457, 900));
        pred.push_back(380.0); // constant mid-bucket guess
    }
    const auto ev = evaluate_survival(pred, truth);
    CHECK(ev.accuracy == Catch::Approx(1.0 / 3.0).margin(0.1));
    CHECK(ev.spearman_r == 0.0);
}

TEST_CASE("feature standardization absorbs per-feature affine rescaling") {
    auto cohort = synthetic_cohort(60, 4, 10.0, 91);
    // exact power-of-two scales leave the standardized values bit-identical;
    // a shift perturbs only by rounding
    std::vector<double> scale = {4.0, 0.5, 2.0, 8.0};
    std::vector<double> shift = {10.0, -3.0, 7.0, 0.25};
    CohortTable rescaled = cohort;
    for (auto& row : rescaled.features)
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = row[j] * scale[j] + shift[j];

    AnnConfig cfg;
    cfg.hidden = 12;
    cfg.epochs = 40;
    cfg.seed = 13;
    const AnnModel a = train_ann(cohort, cfg);
    const AnnModel b = train_ann(rescaled, cfg);
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const double pa = a.predict(cohort.features[i]);
        const double pb = b.predict(rescaled.features[i]);
        CHECK(pa == Catch::Approx(pb).margin(1e-6));
    }
}

TEST_CASE("survival model wrapper: fit, save, load, identical predictions") {
    auto cohort = synthetic_cohort(50, 6, 15.0, 92);
    namespace fs = std::filesystem;
    for (ModelKind kind : {ModelKind::ann, ModelKind::linear, ModelKind::logistic,
                           ModelKind::random_forest, ModelKind::svr_rbf}) {
        ModelConfig mc;
        mc.kind = kind;
        mc.ann.epochs = 30;
        mc.ann.hidden = 8;
        mc.baseline.n_trees = 10;
        const SurvivalModel m = SurvivalModel::fit(cohort, mc, 19);
        const std::string path =
            (fs::temp_directory_path() / ("gk_model_" + to_string(kind) + ".bin")).string();
        m.save(path);
        const SurvivalModel back = SurvivalModel::load(path);
        for (std::size_t i = 0; i < 10; ++i) {
            const double pa = m.predict(cohort.features[i]);
            const double pb = back.predict(cohort.features[i]);
            // float32 checkpoint rounding for ann weights; others exact via JSON
            CHECK(pa == Catch::Approx(pb).margin(kind == ModelKind::ann ? 0.5 : 1e-9));
            CHECK(pb >= 0.0);
        }
        std::remove(path.c_str());
    }
}

TEST_CASE("train_ann validation: too few rows, missing targets, batch clamp") {
    CohortTable tiny;
    tiny.feature_names = {"x"};
    tiny.add_row("a", {1.0}, 100.0);
    AnnConfig cfg;
    CHECK_THROWS_AS(train_ann(tiny, cfg), value_error);

    tiny.add_row("b", {2.0}, std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(train_ann(tiny, cfg), value_error);

    CohortTable small;
    small.feature_names = {"x"};
    for (int i = 0; i < 4; ++i) small.add_row("s" + std::to_string(i), {double(i)}, 100.0 + i);
    cfg.batch = 10; // larger than the cohort; clamps with a warning
    cfg.epochs = 2;
    cfg.hidden = 4;
    CHECK_NOTHROW(train_ann(small, cfg));
}
