#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gliomkit/cli.hpp"

using namespace gliomkit;
using namespace gliomkit::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / ("gk_cli_" + name);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path operator/(const std::string& s) const { return path / s; }
};

RunContext ctx_for(const fs::path& out, std::uint64_t seed = 0) {
    RunContext ctx;
    ctx.out_dir = out;
    ctx.seed = seed;
    ctx.seed_overridden = true;
    ctx.threads = 1;
    return ctx;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

json tiny_net() {
    return {{"in_channels", 4},
            {"blocks", json::array({{{"out_channels", 6}, {"batch_norm", true}},
                                    {{"out_channels", 8}, {"batch_norm", true}}})},
            {"pool_after", {0}},
            {"hypercolumn_taps", {0, 1}},
            {"mlp_widths", {12, 12, 4}}};
}

void gen_phantoms(const fs::path& dir, int n, std::uint64_t seed, json extra = {}) {
    json cfg = {{"n_subjects", n}, {"dims", {16, 16, 4}}, {"noise_std", 0.05}};
    for (auto& [k, v] : extra.items()) cfg[k] = v;
    REQUIRE(run_command("phantom-gen", cfg, ctx_for(dir, seed)) == 0);
}

} // namespace

TEST_CASE("phantom-gen writes cohort files plus a survival CSV") {
    TempDir dir("phantom");
    gen_phantoms(dir.path, 3, 7);
    for (const char* id : {"phantom00", "phantom01", "phantom02"}) {
        for (const char* suffix : {"flair", "t1", "t1ce", "t2", "seg"}) {
            const fs::path f = dir.path / id / (std::string(id) + "_" + suffix + ".nii.gz");
            INFO(f.string());
            CHECK(fs::exists(f));
        }
    }
    const csv::Table t = csv::read((dir / "survival.csv").string());
    CHECK(t.header == std::vector<std::string>{"BraTS18ID", "Age", "Survival"});
    CHECK(t.rows.size() == 3);
}

TEST_CASE("unknown config keys are rejected naming the key") {
    TempDir dir("badkey");
    const json cfg = {{"n_subjects", 2}, {"typo_key", 1}};
    CHECK(run_command("phantom-gen", cfg, ctx_for(dir.path)) != 0);
    try {
        cmd_phantom_gen(cfg, ctx_for(dir.path));
        FAIL("expected value_error");
    } catch (const value_error& e) {
        CHECK(std::string(e.what()).find("typo_key") != std::string::npos);
    }
}

TEST_CASE("full segmentation pipeline: train, predict, eval on phantoms") {
    TempDir data("segdata");
    gen_phantoms(data.path, 4, 11);

    TempDir train_out("segtrain");
    const json train_cfg = {{"data_dir", data.path.string()},
                            {"net", tiny_net()},
                            {"sampler", {{"pixels_per_image", 300}, {"batch", 4}}},
                            {"optimizer", {{"kind", "sgd"}, {"lr", 0.3}, {"momentum", 0.9}}},
                            {"epochs", 3}};
    REQUIRE(run_command("seg-train", train_cfg, ctx_for(train_out.path, 5)) == 0);
    CHECK(fs::exists(train_out / "checkpoint.bin"));
    const csv::Table losses = csv::read((train_out / "loss_log.csv").string());
    CHECK(losses.rows.size() == 3);
    // loss decreases over the run
    CHECK(std::stod(losses.rows.back()[1]) < std::stod(losses.rows.front()[1]));

    TempDir pred_out("segpred");
    const json pred_cfg = {{"data_dir", data.path.string()},
                           {"checkpoint", (train_out / "checkpoint.bin").string()},
                           {"largest_component", true}};
    REQUIRE(run_command("seg-predict", pred_cfg, ctx_for(pred_out.path)) == 0);
    for (int i = 0; i < 4; ++i) {
        const fs::path f = pred_out.path / ("phantom0" + std::to_string(i) + "_pred.nii.gz");
        REQUIRE(fs::exists(f));
        const LabelVolume pred = nifti::read_labels(f.string());
        for (auto v : pred.data) CHECK((v == 0 || v == 1 || v == 2 || v == 4));
    }

    TempDir eval_out("segeval");
    const json eval_cfg = {{"data_dir", data.path.string()},
                           {"pred_dir", pred_out.path.string()}};
    REQUIRE(run_command("seg-eval", eval_cfg, ctx_for(eval_out.path)) == 0);
    const csv::Table cases = csv::read((eval_out / "seg_cases.csv").string());
    CHECK(cases.header ==
          std::vector<std::string>{"subject_id", "region", "dice", "hd", "hd95"});
    CHECK(cases.rows.size() == 4 * 3);
    CHECK(fs::exists(eval_out / "seg_summary.csv"));
}

TEST_CASE("seg-eval with predictions equal to ground truth scores all ones") {
    TempDir data("segself");
    gen_phantoms(data.path, 3, 13);
    TempDir pred_out("segselfpred");
    // copy ground truth as predictions
    for (int i = 0; i < 3; ++i) {
        const std::string id = "phantom0" + std::to_string(i);
        const LabelVolume truth =
            nifti::read_labels((data.path / id / (id + "_seg.nii.gz")).string());
        nifti::write_labels(truth, (pred_out.path / (id + "_pred.nii.gz")).string());
    }
    TempDir eval_out("segselfeval");
    const json cfg = {{"data_dir", data.path.string()}, {"pred_dir", pred_out.path.string()}};
    REQUIRE(run_command("seg-eval", cfg, ctx_for(eval_out.path)) == 0);
    const csv::Table cases = csv::read((eval_out / "seg_cases.csv").string());
    for (const auto& row : cases.rows) {
        CHECK(std::stod(row[2]) == 1.0);
        CHECK(std::stod(row[3]) == 0.0);
    }
    const csv::Table summary = csv::read((eval_out / "seg_summary.csv").string());
    REQUIRE(summary.rows[0][0] == "Mean");
    CHECK(std::stod(summary.rows[0][1]) == 1.0); // dice_wt mean
}

TEST_CASE("seg-predict on an all-zero stack writes an all-zero NIfTI") {
    TempDir data("zerostack");
    const std::string id = "zero01";
    fs::create_directories(data.path / id);
    for (const char* suffix : {"flair", "t1", "t1ce", "t2"})
        nifti::write_volume(Volume3D({16, 16, 4}, Spacing3{}, 0.0f),
                            (data.path / id / (id + std::string("_") + suffix + ".nii.gz")).string());

    // train a checkpoint on real phantoms first
    TempDir tdata("zerotrain");
    gen_phantoms(tdata.path, 2, 17);
    TempDir tout("zerockpt");
    const json tcfg = {{"data_dir", tdata.path.string()},
                       {"net", tiny_net()},
                       {"sampler", {{"pixels_per_image", 200}, {"batch", 2}}},
                       {"epochs", 1}};
    REQUIRE(run_command("seg-train", tcfg, ctx_for(tout.path, 5)) == 0);

    TempDir pout("zeropred");
    const json pcfg = {{"data_dir", data.path.string()},
                       {"checkpoint", (tout / "checkpoint.bin").string()}};
    REQUIRE(run_command("seg-predict", pcfg, ctx_for(pout.path)) == 0);
    const LabelVolume pred = nifti::read_labels((pout.path / (id + "_pred.nii.gz")).string());
    for (auto v : pred.data) CHECK(v == 0);
}

TEST_CASE("features: isolation of corrupt subjects, spec columns, determinism") {
    TempDir data("featdata");
    gen_phantoms(data.path, 3, 19);
    // corrupt one subject's seg file
    {
        std::ofstream bad(data.path / "phantom01" / "phantom01_seg.nii.gz",
                          std::ios::binary | std::ios::trunc);
        bad << "not a nifti";
    }
    TempDir out_a("feat_a");
    const json cfg = {{"data_dir", data.path.string()},
                      {"labels", "seg"},
                      {"survival_csv", (data / "survival.csv").string()},
                      {"feature_spec", "paper50"}};
    REQUIRE(run_command("features", cfg, ctx_for(out_a.path)) == 0);
    const csv::Table ft = csv::read((out_a / "features.csv").string());
    CHECK(ft.header.size() == 52); // id + 50 + age_source
    CHECK(ft.header.front() == "subject_id");
    CHECK(ft.header.back() == "age_source");
    CHECK(ft.rows.size() == 2); // phantom01 skipped
    for (const auto& row : ft.rows) CHECK(row.back() == "cohort_csv");
    const csv::Table skipped = csv::read((out_a / "features_skipped.csv").string());
    REQUIRE(skipped.rows.size() == 1);
    CHECK(skipped.rows[0][0] == "phantom01");

    // byte-identical rerun
    TempDir out_b("feat_b");
    REQUIRE(run_command("features", cfg, ctx_for(out_b.path)) == 0);
    CHECK(slurp(out_a / "features.csv") == slurp(out_b / "features.csv"));

    // the "all" spec contains every paper50 column
    TempDir out_all("feat_all");
    json cfg_all = cfg;
    cfg_all["feature_spec"] = "all";
    REQUIRE(run_command("features", cfg_all, ctx_for(out_all.path)) == 0);
    const csv::Table fall = csv::read((out_all / "features.csv").string());
    for (const auto& name : ft.header)
        CHECK(std::find(fall.header.begin(), fall.header.end(), name) != fall.header.end());
}

TEST_CASE("survival pipeline: train, predict, eval, cv, comparison") {
    TempDir data("survdata");
    gen_phantoms(data.path, 12, 23);
    TempDir feat("survfeat");
    const json fcfg = {{"data_dir", data.path.string()},
                       {"labels", "seg"},
                       {"survival_csv", (data / "survival.csv").string()}};
    REQUIRE(run_command("features", fcfg, ctx_for(feat.path)) == 0);
    const std::string features_csv = (feat / "features.csv").string();
    const std::string survival_csv = (data / "survival.csv").string();

    TempDir model_out("survmodel");
    const json tcfg = {{"features_csv", features_csv},
                       {"survival_csv", survival_csv},
                       {"model", {{"kind", "ann"}, {"hidden", 8}, {"epochs", 40}}}};
    REQUIRE(run_command("surv-train", tcfg, ctx_for(model_out.path, 3)) == 0);
    CHECK(fs::exists(model_out / "survival_model.bin"));
    CHECK(fs::exists(model_out / "surv_train_loss.csv"));

    TempDir pred_out("survpred");
    const json pcfg = {{"model_file", (model_out / "survival_model.bin").string()},
                       {"features_csv", features_csv}};
    REQUIRE(run_command("surv-predict", pcfg, ctx_for(pred_out.path)) == 0);
    const csv::Table preds = csv::read((pred_out / "predictions.csv").string());
    CHECK(preds.header == std::vector<std::string>{"subject_id", "predicted_days"});
    CHECK(preds.rows.size() == 12);
    for (const auto& row : preds.rows) CHECK(std::stod(row[1]) >= 0.0);

    // perfect predictions give accuracy 1 and mse 0
    TempDir perf("survperf");
    {
        csv::Writer w((perf / "predictions.csv").string());
        w.row({"subject_id", "predicted_days"});
        const csv::Table truth = csv::read(survival_csv);
        for (const auto& row : truth.rows) w.row({row[0], row[2]});
        w.close();
    }
    TempDir eval_out("surveval");
    const json ecfg = {{"predictions_csv", (perf / "predictions.csv").string()},
                       {"survival_csv", survival_csv}};
    REQUIRE(run_command("surv-eval", ecfg, ctx_for(eval_out.path)) == 0);
    const csv::Table ev = csv::read((eval_out / "survival_eval.csv").string());
    CHECK(ev.header == std::vector<std::string>{"Cases", "Accuracy", "MSE", "MedianSE", "stdSE",
                                                "SpearmanR"});
    REQUIRE(ev.rows.size() == 1);
    CHECK(ev.rows[0][0] == "12");
    CHECK(std::stod(ev.rows[0][1]) == 1.0);
    CHECK(std::stod(ev.rows[0][2]) == 0.0);

    // reproducible cv folds
    TempDir cv_a("survcv_a"), cv_b("survcv_b");
    const json cvcfg = {{"features_csv", features_csv},
                        {"survival_csv", survival_csv},
                        {"model", {{"kind", "linear"}}},
                        {"k_folds", 3}};
    REQUIRE(run_command("surv-cv", cvcfg, ctx_for(cv_a.path, 9)) == 0);
    REQUIRE(run_command("surv-cv", cvcfg, ctx_for(cv_b.path, 9)) == 0);
    CHECK(slurp(cv_a / "cv_folds.csv") == slurp(cv_b / "cv_folds.csv"));
    const csv::Table folds = csv::read((cv_a / "cv_folds.csv").string());
    CHECK(folds.rows.size() == 4); // 3 folds + mean
    CHECK(folds.rows.back()[0] == "mean");

    // model comparison emits one row per kind (Table 5 layout)
    TempDir cmp("survcmp");
    json cmp_cfg = cvcfg;
    cmp_cfg["model"] = "all";
    cmp_cfg["k_folds"] = 3;
    REQUIRE(run_command("surv-cv", cmp_cfg, ctx_for(cmp.path, 9)) == 0);
    const csv::Table cmp_table = csv::read((cmp.path / "model_comparison.csv").string());
    CHECK(cmp_table.header == std::vector<std::string>{"Models", "Accuracy", "MSE", "MedianSE",
                                                       "stdSE", "SpearmanR"});
    REQUIRE(cmp_table.rows.size() == 5);
    CHECK(cmp_table.rows[0][0] == "linear");
    CHECK(cmp_table.rows[4][0] == "ann");
    CHECK(fs::exists(cmp.path / "cv_curves.csv"));
}

TEST_CASE("surv-eval join mismatch lists the missing ids") {
    TempDir dir("joinfail");
    {
        csv::Writer w((dir / "predictions.csv").string());
        w.row({"subject_id", "predicted_days"});
        w.row({"ghost42", "100"});
        w.close();
        csv::Writer s((dir / "survival.csv").string());
        s.row({"BraTS18ID", "Age", "Survival"});
        s.row({"other", "60", "300"});
        s.close();
    }
    const json cfg = {{"predictions_csv", (dir / "predictions.csv").string()},
                      {"survival_csv", (dir / "survival.csv").string()}};
    try {
        cmd_surv_eval(cfg, ctx_for(dir / "out"));
        FAIL("expected join failure");
    } catch (const value_error& e) {
        CHECK(std::string(e.what()).find("ghost42") != std::string::npos);
    }
}

TEST_CASE("missing modality file fails with the subject id") {
    TempDir data("missingmod");
    gen_phantoms(data.path, 1, 29);
    fs::remove(data.path / "phantom00" / "phantom00_t2.nii.gz");
    TempDir out("missingout");
    const json cfg = {{"data_dir", data.path.string()},
                      {"net", tiny_net()},
                      {"epochs", 1}};
    try {
        cmd_seg_train(cfg, ctx_for(out.path));
        FAIL("expected missing-modality failure");
    } catch (const io_error& e) {
        CHECK(std::string(e.what()).find("phantom00") != std::string::npos);
    }
}

TEST_CASE("phantom-gen is byte-identical across runs with the same seed") {
    TempDir a("det_a"), b("det_b");
    gen_phantoms(a.path, 2, 31);
    gen_phantoms(b.path, 2, 31);
    for (const char* id : {"phantom00", "phantom01"})
        for (const char* suffix : {"flair", "t1", "t1ce", "t2", "seg"}) {
            const std::string f = std::string(id) + "_" + suffix + ".nii.gz";
            CHECK(slurp(a.path / id / f) == slurp(b.path / id / f));
        }
    CHECK(slurp(a / "survival.csv") == slurp(b / "survival.csv"));
}
