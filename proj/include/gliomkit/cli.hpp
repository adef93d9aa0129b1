#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gliomkit/common.hpp"
#include "gliomkit/csv.hpp"
#include "gliomkit/features.hpp"
#include "gliomkit/net.hpp"
#include "gliomkit/net/trainer.hpp"
#include "gliomkit/nifti.hpp"
#include "gliomkit/phantom.hpp"
#include "gliomkit/segmetrics.hpp"
#include "gliomkit/survival.hpp"

namespace gliomkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunContext {
    fs::path out_dir;
    std::uint64_t seed = 0;
    bool seed_overridden = false; // --seed beats the config value
    int threads = 1;
};

// Unknown keys are config errors, not typos to ignore.
inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& context) {
    if (!j.is_object()) throw value_error(concat("config ", context, ": expected a JSON object"));
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key))
            throw value_error(concat("config ", context, ": unknown key '", key, "'"));
    }
}

inline std::uint64_t effective_seed(const json& cfg, const RunContext& ctx) {
    if (ctx.seed_overridden) return ctx.seed;
    return cfg.value("seed", std::uint64_t{0});
}

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min<int>(threads, static_cast<int>(n));
    pool.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// cohort directory layout: one directory per subject holding
// <id>_flair.nii.gz, <id>_t1.nii.gz, <id>_t1ce.nii.gz, <id>_t2.nii.gz and
// optionally <id>_seg.nii.gz (plain .nii also accepted).

struct SubjectPaths {
    std::string id;
    std::map<std::string, std::string> modality_files; // key: flair/t1/t1c/t2
    std::string seg_file;                              // empty when absent
};

namespace detail {

inline std::string find_file(const fs::path& dir, const std::string& stem) {
    for (const char* ext : {".nii.gz", ".nii"}) {
        const fs::path p = dir / (stem + ext);
        if (fs::exists(p)) return p.string();
    }
    return {};
}

// BraTS file suffix -> modality key (t1ce maps to t1c).
inline const std::map<std::string, std::string>& modality_suffixes() {
    static const std::map<std::string, std::string> m = {
        {"flair", "flair"}, {"t1", "t1"}, {"t1ce", "t1c"}, {"t2", "t2"}};
    return m;
}

} // namespace detail

inline std::vector<SubjectPaths> discover_subjects(const fs::path& data_dir,
                                                   const std::vector<std::string>& wanted = {}) {
    if (!fs::is_directory(data_dir))
        throw io_error(concat("data directory does not exist: ", data_dir.string()));
    std::vector<std::string> ids;
    if (wanted.empty()) {
        for (const auto& entry : fs::directory_iterator(data_dir))
            if (entry.is_directory()) ids.push_back(entry.path().filename().string());
        std::sort(ids.begin(), ids.end());
    } else {
        ids = wanted;
    }
    std::vector<SubjectPaths> out;
    for (const auto& id : ids) {
        SubjectPaths sp;
        sp.id = id;
        const fs::path dir = data_dir / id;
        for (const auto& [suffix, key] : detail::modality_suffixes()) {
            const std::string f = detail::find_file(dir, id + "_" + suffix);
            if (!f.empty()) sp.modality_files[key] = f;
        }
        sp.seg_file = detail::find_file(dir, id + "_seg");
        if (!sp.modality_files.empty() || !sp.seg_file.empty()) out.push_back(std::move(sp));
        else if (!wanted.empty())
            throw io_error(concat("subject ", id, ": no NIfTI files under ", dir.string()));
    }
    return out;
}

inline ModalityStack load_stack(const SubjectPaths& sp,
                                const std::vector<std::string>& modalities) {
    ModalityStack stack;
    stack.subject_id = sp.id;
    for (const auto& m : modalities) {
        auto it = sp.modality_files.find(m);
        if (it == sp.modality_files.end())
            throw io_error(concat("subject ", sp.id, ": modality ", m, " file missing"));
        stack.add(m, nifti::read_volume(it->second));
    }
    return stack;
}

namespace detail {

inline net::NetSpec netspec_from_config(const json& j) {
    if (j.is_string()) return net::preset(j.get<std::string>());
    check_keys(j, {"in_channels", "blocks", "pool_after", "hypercolumn_taps", "mlp_widths",
                   "bn_momentum", "bn_epsilon"},
               "net");
    return net::netspec_from_json(j);
}

inline net::OptimizerConfig optimizer_from_config(const json& j) {
    check_keys(j, {"kind", "lr", "momentum", "beta1", "beta2", "epsilon"}, "optimizer");
    net::OptimizerConfig cfg;
    const std::string kind = j.value("kind", "adam");
    if (kind == "adam") cfg.kind = net::OptimizerKind::adam;
    else if (kind == "sgd") cfg.kind = net::OptimizerKind::sgd;
    else throw value_error(concat("config optimizer: unknown kind '", kind, "'"));
    cfg.lr = j.value("lr", 1e-3);
    cfg.momentum = j.value("momentum", 0.0);
    cfg.beta1 = j.value("beta1", 0.9);
    cfg.beta2 = j.value("beta2", 0.999);
    cfg.epsilon = j.value("epsilon", 1e-8);
    return cfg;
}

inline survival::BucketThresholds thresholds_from_config(const json& cfg) {
    survival::BucketThresholds th;
    if (cfg.contains("thresholds")) {
        const auto t = cfg.at("thresholds").get<std::vector<double>>();
        if (t.size() != 2 || !(t[0] < t[1]))
            throw value_error("config thresholds: expected [short_max, long_min] with short_max < long_min");
        th.short_max = t[0];
        th.long_min = t[1];
    }
    return th;
}

inline void ensure_out_dir(const RunContext& ctx) {
    if (ctx.out_dir.empty()) throw value_error("--out directory is required");
    fs::create_directories(ctx.out_dir);
}

inline std::vector<std::string> subject_filter(const json& cfg) {
    return cfg.value("subjects", std::vector<std::string>{});
}

} // namespace detail

// ---------------------------------------------------------------------------
// phantom-gen

inline void cmd_phantom_gen(const json& cfg, const RunContext& ctx) {
    check_keys(cfg, {"n_subjects", "dims", "seed", "noise_std", "missing_ncr_fraction",
                     "missing_ed_fraction", "with_survival_csv"},
               "phantom-gen");
    detail::ensure_out_dir(ctx);
    phantom::PhantomConfig pc;
    pc.n_subjects = cfg.value("n_subjects", 40);
    if (cfg.contains("dims")) {
        const auto d = cfg.at("dims").get<std::vector<std::int64_t>>();
        if (d.size() != 3) throw value_error("config phantom-gen: dims must have 3 entries");
        pc.dims = {d[0], d[1], d[2]};
    }
    pc.seed = effective_seed(cfg, ctx);
    pc.noise_std = cfg.value("noise_std", 0.06);
    pc.missing_ncr_fraction = cfg.value("missing_ncr_fraction", 0.0);
    pc.missing_ed_fraction = cfg.value("missing_ed_fraction", 0.0);

    std::vector<std::array<std::string, 3>> survival_rows(static_cast<std::size_t>(pc.n_subjects));
    parallel_for(static_cast<std::size_t>(pc.n_subjects), ctx.threads, [&](std::size_t i) {
        const phantom::PhantomSubject subj = phantom::make_phantom(pc, static_cast<int>(i));
        const std::string& id = subj.stack.subject_id;
        const fs::path dir = ctx.out_dir / id;
        fs::create_directories(dir);
        for (const auto& [suffix, key] : detail::modality_suffixes())
            nifti::write_volume(subj.stack.modality(key), (dir / (id + "_" + suffix + ".nii.gz")).string());
        nifti::write_labels(subj.labels, (dir / (id + "_seg.nii.gz")).string());
        survival_rows[i] = {id, csv::num(subj.age), csv::num(subj.survival_days)};
    });
    if (cfg.value("with_survival_csv", true)) {
        csv::Writer w((ctx.out_dir / "survival.csv").string());
        w.row({"BraTS18ID", "Age", "Survival"});
        for (const auto& r : survival_rows) w.row({r[0], r[1], r[2]});
        w.close();
    }
    log_info("phantom-gen: wrote ", pc.n_subjects, " subjects to ", ctx.out_dir.string());
}

// ---------------------------------------------------------------------------
// seg-train

inline void cmd_seg_train(const json& cfg, const RunContext& ctx) {
    check_keys(cfg, {"data_dir", "subjects", "net", "optimizer", "sampler", "epochs", "seed",
                     "augment_flip"},
               "seg-train");
    detail::ensure_out_dir(ctx);

    net::SegTrainConfig tc;
    tc.net = cfg.contains("net") ? detail::netspec_from_config(cfg.at("net")) : net::toy4_preset();
    tc.optimizer = cfg.contains("optimizer") ? detail::optimizer_from_config(cfg.at("optimizer"))
                                             : net::OptimizerConfig{};
    if (cfg.contains("sampler")) {
        check_keys(cfg.at("sampler"), {"pixels_per_image", "batch"}, "sampler");
        tc.pixels_per_image = cfg.at("sampler").value("pixels_per_image", 2000);
        tc.batch = cfg.at("sampler").value("batch", 10);
    }
    tc.epochs = cfg.value("epochs", 20);
    tc.seed = effective_seed(cfg, ctx);
    tc.augment_flip = cfg.value("augment_flip", true);

    const auto subjects =
        discover_subjects(cfg.at("data_dir").get<std::string>(), detail::subject_filter(cfg));
    net::SliceDataset data;
    net::Network<float> probe(tc.net); // for the canonical modality list
    int used = 0;
    for (const auto& sp : subjects) {
        if (sp.seg_file.empty()) continue;
        const ModalityStack stack = load_stack(sp, probe.modalities());
        const LabelVolume labels = nifti::read_labels(sp.seg_file);
        net::append_subject_slices(data, stack, labels, probe.modalities());
        ++used;
    }
    if (used == 0) throw value_error("seg-train: no subjects with ground-truth segmentations");
    log_info("seg-train: ", used, " subjects, ", data.slices.size(), " slices");

    csv::Writer loss_log((ctx.out_dir / "loss_log.csv").string());
    loss_log.row({"epoch", "mean_loss"});
    net::Network<float> trained = net::train_segmenter<float>(
        data, tc, [&](const net::EpochStats& st, net::Network<float>&) {
            loss_log.row({std::to_string(st.epoch), csv::num(st.mean_loss)});
            log_info("seg-train epoch ", st.epoch, " loss ", st.mean_loss);
            return true;
        });
    loss_log.close();
    trained.save((ctx.out_dir / "checkpoint.bin").string());
}

// ---------------------------------------------------------------------------
// seg-predict

inline void cmd_seg_predict(const json& cfg, const RunContext& ctx) {
    check_keys(cfg, {"data_dir", "subjects", "checkpoint", "largest_component", "connectivity",
                     "seed"},
               "seg-predict");
    detail::ensure_out_dir(ctx);
    const bool lcc = cfg.value("largest_component", true);
    const int connectivity = cfg.value("connectivity", 26);
    const auto subjects =
        discover_subjects(cfg.at("data_dir").get<std::string>(), detail::subject_filter(cfg));
    if (subjects.empty()) throw value_error("seg-predict: no subjects found");

    const std::string ckpt = cfg.at("checkpoint").get<std::string>();
    const net::Network<float> model = net::Network<float>::load(ckpt);
    parallel_for(subjects.size(), ctx.threads, [&](std::size_t i) {
        net::Network<float> local = model; // eval passes are read-only, but keep instances separate
        const ModalityStack stack = load_stack(subjects[i], local.modalities());
        LabelVolume pred = local.predict_volume(stack);
        if (lcc) pred = segmetrics::largest_component_filter(pred, connectivity);
        nifti::write_labels(pred, (ctx.out_dir / (subjects[i].id + "_pred.nii.gz")).string());
    });
    log_info("seg-predict: wrote ", subjects.size(), " predictions");
}

// ---------------------------------------------------------------------------
// seg-eval

inline void cmd_seg_eval(const json& cfg, const RunContext& ctx) {
    check_keys(cfg, {"data_dir", "pred_dir", "subjects", "region_mode", "seed"}, "seg-eval");
    detail::ensure_out_dir(ctx);
    const fs::path pred_dir = cfg.at("pred_dir").get<std::string>();
    const std::string mode_name = cfg.value("region_mode", "standard");
    segmetrics::RegionMode mode;
    if (mode_name == "standard") mode = segmetrics::RegionMode::standard;
    else if (mode_name == "strict-paper") mode = segmetrics::RegionMode::strict_paper;
    else throw value_error(concat("config seg-eval: unknown region_mode '", mode_name, "'"));

    const auto subjects =
        discover_subjects(cfg.at("data_dir").get<std::string>(), detail::subject_filter(cfg));
    std::vector<const SubjectPaths*> with_truth;
    for (const auto& sp : subjects)
        if (!sp.seg_file.empty()) with_truth.push_back(&sp);
    if (with_truth.empty()) throw value_error("seg-eval: no subjects with ground truth");

    std::vector<segmetrics::CaseMetrics> cases(with_truth.size());
    parallel_for(with_truth.size(), ctx.threads, [&](std::size_t i) {
        const auto& sp = *with_truth[i];
        const std::string pred_file = detail::find_file(pred_dir, sp.id + "_pred");
        if (pred_file.empty())
            throw io_error(concat("seg-eval: prediction for subject ", sp.id, " not found in ",
                                  pred_dir.string()));
        const LabelVolume pred = nifti::read_labels(pred_file);
        const LabelVolume truth = nifti::read_labels(sp.seg_file);
        cases[i] = segmetrics::evaluate_case(sp.id, pred, truth, mode);
    });

    csv::Writer per_case((ctx.out_dir / "seg_cases.csv").string());
    per_case.row({"subject_id", "region", "dice", "hd", "hd95"});
    for (const auto& c : cases)
        for (int r = 0; r < 3; ++r)
            per_case.row({c.subject_id, segmetrics::region_names()[static_cast<std::size_t>(r)],
                          csv::num(c.dice[static_cast<std::size_t>(r)]),
                          csv::num(c.hd[static_cast<std::size_t>(r)]),
                          csv::num(c.hd95[static_cast<std::size_t>(r)])});
    per_case.close();

    const segmetrics::CohortReport rep = segmetrics::aggregate(cases);
    csv::Writer summary((ctx.out_dir / "seg_summary.csv").string());
    summary.row({"stat", "dice_wt", "dice_tc", "dice_et", "hd_wt", "hd_tc", "hd_et", "hd95_wt",
                 "hd95_tc", "hd95_et"});
    const char* stat_names[3] = {"Mean", "StdDev", "Median"};
    for (int s = 0; s < 3; ++s) {
        std::vector<std::string> row{stat_names[s]};
        for (int metric = 0; metric < 3; ++metric)
            for (int r = 0; r < 3; ++r) {
                const auto& sm = rep.stats[static_cast<std::size_t>(metric)][static_cast<std::size_t>(r)];
                row.push_back(csv::num(s == 0 ? sm.mean : s == 1 ? sm.stddev : sm.median));
            }
        summary.row(row);
    }
    // count note: Hausdorff excludes missing-region cases
    std::vector<std::string> counts{"Cases"};
    for (int metric = 0; metric < 3; ++metric)
        for (int r = 0; r < 3; ++r)
            counts.push_back(std::to_string(
                rep.stats[static_cast<std::size_t>(metric)][static_cast<std::size_t>(r)].count));
    summary.row(counts);
    summary.close();
}

// ---------------------------------------------------------------------------
// features

inline void cmd_features(const json& cfg, const RunContext& ctx) {
    check_keys(cfg, {"data_dir", "subjects", "labels", "pred_dir", "survival_csv", "feature_spec",
                     "bins", "seed"},
               "features");
    detail::ensure_out_dir(ctx);
    const std::string labels_from = cfg.value("labels", "seg");
    if (labels_from != "seg" && labels_from != "pred")
        throw value_error("config features: labels must be \"seg\" or \"pred\"");
    const fs::path pred_dir = cfg.value("pred_dir", std::string{});
    const int bins = cfg.value("bins", 32);
    const radiomics::FeatureSpec spec =
        radiomics::feature_spec(cfg.value("feature_spec", std::string("paper50")));

    std::map<std::string, survival::SurvivalRecord> ages;
    if (cfg.contains("survival_csv"))
        for (auto& [id, rec] : survival::load_survival_csv(cfg.at("survival_csv").get<std::string>()))
            ages[id] = rec;

    const auto subjects =
        discover_subjects(cfg.at("data_dir").get<std::string>(), detail::subject_filter(cfg));
    if (subjects.empty()) throw value_error("features: no subjects found");

    struct Row {
        bool ok = false;
        std::string id, age_source, reason;
        std::vector<double> values;
    };
    std::vector<Row> rows(subjects.size());
    const auto& modalities = ModalityStack::modality_names();
    parallel_for(subjects.size(), ctx.threads, [&](std::size_t i) {
        Row& row = rows[i];
        row.id = subjects[i].id;
        try {
            std::string label_file = labels_from == "seg"
                                         ? subjects[i].seg_file
                                         : detail::find_file(pred_dir, subjects[i].id + "_pred");
            if (label_file.empty())
                throw io_error(concat("no ", labels_from == "seg" ? "seg" : "pred",
                                      " label file for subject ", subjects[i].id));
            const ModalityStack stack = load_stack(
                subjects[i], std::vector<std::string>(modalities.begin(), modalities.end()));
            const LabelVolume labels = nifti::read_labels(label_file);
            double age = 0.0;
            row.age_source = "missing";
            auto it = ages.find(subjects[i].id);
            if (it != ages.end() && !std::isnan(it->second.age)) {
                age = it->second.age;
                row.age_source = "cohort_csv";
            }
            const radiomics::FeatureVector fv =
                radiomics::assemble_features(labels, stack, age, spec, bins);
            row.values = fv.values;
            row.ok = true;
        } catch (const std::exception& e) {
            row.reason = e.what();
        }
    });

    csv::Writer out((ctx.out_dir / "features.csv").string());
    std::vector<std::string> header{"subject_id"};
    header.insert(header.end(), spec.feature_names.begin(), spec.feature_names.end());
    header.push_back("age_source");
    out.row(header);
    std::size_t written = 0;
    for (const auto& row : rows) {
        if (!row.ok) continue;
        std::vector<std::string> fields{row.id};
        for (double v : row.values) fields.push_back(csv::num(v));
        fields.push_back(row.age_source);
        out.row(fields);
        ++written;
    }
    out.close();

    csv::Writer skipped((ctx.out_dir / "features_skipped.csv").string());
    skipped.row({"subject_id", "reason"});
    for (const auto& row : rows)
        if (!row.ok) skipped.row({row.id, row.reason});
    skipped.close();
    if (written == 0) throw value_error("features: every subject failed feature extraction");
    log_info("features: ", written, " subjects written, ", subjects.size() - written, " skipped");
}

// ---------------------------------------------------------------------------
// survival commands

namespace detail {

inline survival::ModelConfig model_from_config(const json& j) {
    survival::ModelConfig mc;
    if (j.is_string()) {
        mc.kind = survival::model_kind_from_string(j.get<std::string>());
        return mc;
    }
    check_keys(j, {"kind", "hidden", "epochs", "batch", "lr", "ridge_lambda", "iters", "l2",
                   "midpoints", "n_trees", "min_leaf", "mtry", "c", "epsilon", "gamma", "tol"},
               "model");
    mc.kind = survival::model_kind_from_string(j.at("kind").get<std::string>());
    mc.ann.hidden = j.value("hidden", 100);
    mc.ann.epochs = j.value("epochs", 900);
    mc.ann.batch = j.value("batch", 10);
    mc.ann.lr = j.value("lr", 1e-3);
    mc.baseline.ridge_lambda = j.value("ridge_lambda", 1e-8);
    mc.baseline.logistic_iters = j.value("iters", 2000);
    mc.baseline.logistic_lr = j.value("lr", 0.5);
    mc.baseline.logistic_l2 = j.value("l2", 1e-6);
    if (j.contains("midpoints"))
        mc.baseline.bucket_midpoints = j.at("midpoints").get<std::array<double, 3>>();
    mc.baseline.n_trees = j.value("n_trees", 100);
    mc.baseline.min_leaf = j.value("min_leaf", 2);
    mc.baseline.mtry = j.value("mtry", 0);
    mc.baseline.svr_c = j.value("c", 1.0);
    mc.baseline.svr_epsilon = j.value("epsilon", 0.0);
    mc.baseline.svr_gamma = j.value("gamma", 0.0);
    mc.baseline.svr_tol = j.value("tol", 1e-4);
    return mc;
}

struct FeatureTable {
    std::vector<std::string> ids;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
};

inline FeatureTable load_features_csv(const std::string& path) {
    const csv::Table t = csv::read(path);
    const int id_col = t.column("subject_id");
    if (id_col != 0) throw format_error(concat(path, ": first column must be subject_id"));
    const int age_source_col = t.column("age_source");
    FeatureTable ft;
    const std::size_t end = age_source_col < 0 ? t.header.size()
                                               : static_cast<std::size_t>(age_source_col);
    for (std::size_t c = 1; c < end; ++c) ft.names.push_back(t.header[c]);
    for (const auto& row : t.rows) {
        ft.ids.push_back(row[0]);
        std::vector<double> vals;
        for (std::size_t c = 1; c < end; ++c) vals.push_back(std::stod(row[c]));
        ft.rows.push_back(std::move(vals));
    }
    return ft;
}

// Joins features with the survival CSV; every survival row with a target must
// have features, or the command fails listing the missing ids.
inline survival::CohortTable join_cohort(const std::string& features_csv,
                                         const std::string& survival_csv) {
    const FeatureTable ft = load_features_csv(features_csv);
    survival::CohortTable cohort;
    cohort.feature_names = ft.names;
    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < ft.ids.size(); ++i) by_id[ft.ids[i]] = i;

    std::vector<std::string> missing;
    for (const auto& [id, rec] : survival::load_survival_csv(survival_csv)) {
        if (std::isnan(rec.days)) continue;
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            missing.push_back(id);
            continue;
        }
        cohort.add_row(id, ft.rows[it->second], rec.days);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
        throw value_error(concat("survival cohort join: no features for ", missing.size(),
                                 " subject(s): ", list));
    }
    if (cohort.size() == 0) throw value_error("survival cohort join: no labeled subjects");
    return cohort;
}

inline std::vector<std::string> eval_row(const survival::SurvivalEval& ev) {
    return {std::to_string(ev.cases), csv::num(ev.accuracy), csv::num(ev.mse),
            csv::num(ev.median_se), csv::num(ev.std_se), csv::num(ev.spearman_r)};
}

} // namespace detail

inline void cmd_surv_train(const json& cfg, const RunContext& ctx) {
    check_keys(cfg, {"features_csv", "survival_csv", "model", "seed"}, "surv-train");
    detail::ensure_out_dir(ctx);
    const survival::CohortTable cohort = detail::join_cohort(
        cfg.at("features_csv").get<std::string>(), cfg.at("survival_csv").get<std::string>());
    const survival::ModelConfig mc =
        cfg.contains("model") ? detail::model_from_config(cfg.at("model")) : survival::ModelConfig{};
    const survival::SurvivalModel model =
        survival::SurvivalModel::fit(cohort, mc, effective_seed(cfg, ctx));
    model.save((ctx.out_dir / "survival_model.bin").string());
    if (mc.kind == survival::ModelKind::ann) {
        csv::Writer w((ctx.out_dir / "surv_train_loss.csv").string());
        w.row({"epoch", "train_mse"});
        const auto& trace = model.as<survival::AnnModel>().train_loss;
        for (std::size_t e = 0; e < trace.size(); ++e)
            w.row({std::to_string(e), csv::num(trace[e])});
        w.close();
    }
    log_info("surv-train: fitted ", survival::to_string(mc.kind), " on ", cohort.size(), " rows");
}

inline void cmd_surv_predict(const json& cfg, const RunContext& ctx) {
    check_keys(cfg, {"model_file", "features_csv", "seed"}, "surv-predict");
    detail::ensure_out_dir(ctx);
    const survival::SurvivalModel model =
        survival::SurvivalModel::load(cfg.at("model_file").get<std::string>());
    const detail::FeatureTable ft =
        detail::load_features_csv(cfg.at("features_csv").get<std::string>());
    if (!model.feature_names().empty() && model.feature_names() != ft.names)
        throw value_error("surv-predict: feature columns do not match the model's training features");
    csv::Writer w((ctx.out_dir / "predictions.csv").string());
    w.row({"subject_id", "predicted_days"});
    for (std::size_t i = 0; i < ft.ids.size(); ++i)
        w.row({ft.ids[i], csv::num(model.predict(ft.rows[i]))});
    w.close();
}

inline void cmd_surv_eval(const json& cfg, const RunContext& ctx) {
    check_keys(cfg, {"predictions_csv", "survival_csv", "thresholds", "seed"}, "surv-eval");
    detail::ensure_out_dir(ctx);
    const csv::Table pt = csv::read(cfg.at("predictions_csv").get<std::string>());
    const int idc = pt.column("subject_id"), pc = pt.column("predicted_days");
    if (idc < 0 || pc < 0)
        throw format_error("predictions CSV must have columns subject_id, predicted_days");
    std::map<std::string, survival::SurvivalRecord> truth;
    for (auto& [id, rec] : survival::load_survival_csv(cfg.at("survival_csv").get<std::string>()))
        truth[id] = rec;

    std::vector<double> pred, days;
    std::vector<std::string> missing;
    for (const auto& row : pt.rows) {
        const std::string& id = row[static_cast<std::size_t>(idc)];
        auto it = truth.find(id);
        if (it == truth.end() || std::isnan(it->second.days)) {
            missing.push_back(id);
            continue;
        }
        pred.push_back(std::stod(row[static_cast<std::size_t>(pc)]));
        days.push_back(it->second.days);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
        throw value_error(concat("surv-eval: no survival ground truth for: ", list));
    }
    const survival::SurvivalEval ev =
        survival::evaluate_survival(pred, days, detail::thresholds_from_config(cfg));
    csv::Writer w((ctx.out_dir / "survival_eval.csv").string());
    w.row({"Cases", "Accuracy", "MSE", "MedianSE", "stdSE", "SpearmanR"});
    w.row(detail::eval_row(ev));
    w.close();
}

inline void cmd_surv_cv(const json& cfg, const RunContext& ctx) {
    check_keys(cfg, {"features_csv", "survival_csv", "model", "k_folds", "seed", "thresholds"},
               "surv-cv");
    detail::ensure_out_dir(ctx);
    const survival::CohortTable cohort = detail::join_cohort(
        cfg.at("features_csv").get<std::string>(), cfg.at("survival_csv").get<std::string>());
    const int k = cfg.value("k_folds", 5);
    const std::uint64_t seed = effective_seed(cfg, ctx);
    const survival::BucketThresholds th = detail::thresholds_from_config(cfg);

    const json model_cfg = cfg.contains("model") ? cfg.at("model") : json("ann");
    const bool compare_all = model_cfg.is_string() && model_cfg.get<std::string>() == "all";

    if (compare_all) {
        // Table 5 layout: one row per model kind over the same folds.
        csv::Writer w((ctx.out_dir / "model_comparison.csv").string());
        w.row({"Models", "Accuracy", "MSE", "MedianSE", "stdSE", "SpearmanR"});
        using survival::ModelKind;
        for (ModelKind kind : {ModelKind::linear, ModelKind::svr_rbf, ModelKind::random_forest,
                               ModelKind::logistic, ModelKind::ann}) {
            survival::ModelConfig mc;
            mc.kind = kind;
            const survival::CvResult res = survival::cross_validate(cohort, mc, k, seed, th);
            std::vector<std::string> row{survival::to_string(kind)};
            const auto fields = detail::eval_row(res.mean);
            row.insert(row.end(), fields.begin() + 1, fields.end());
            w.row(row);
            if (kind == ModelKind::ann && !res.train_curve.empty()) {
                csv::Writer curves((ctx.out_dir / "cv_curves.csv").string());
                curves.row({"epoch", "train_mse", "validation_mse"});
                for (std::size_t e = 0; e < res.train_curve.size(); ++e)
                    curves.row({std::to_string(e), csv::num(res.train_curve[e]),
                                csv::num(e < res.validation_curve.size() ? res.validation_curve[e]
                                                                         : 0.0)});
                curves.close();
            }
        }
        w.close();
        return;
    }

    const survival::ModelConfig mc = detail::model_from_config(model_cfg);
    const survival::CvResult res = survival::cross_validate(cohort, mc, k, seed, th);
    csv::Writer w((ctx.out_dir / "cv_folds.csv").string());
    w.row({"fold", "Cases", "Accuracy", "MSE", "MedianSE", "stdSE", "SpearmanR"});
    for (std::size_t f = 0; f < res.folds.size(); ++f) {
        std::vector<std::string> row{std::to_string(f)};
        const auto fields = detail::eval_row(res.folds[f]);
        row.insert(row.end(), fields.begin(), fields.end());
        w.row(row);
    }
    std::vector<std::string> mean_row{"mean"};
    const auto fields = detail::eval_row(res.mean);
    mean_row.insert(mean_row.end(), fields.begin(), fields.end());
    w.row(mean_row);
    w.close();
    if (mc.kind == survival::ModelKind::ann && !res.train_curve.empty()) {
        csv::Writer curves((ctx.out_dir / "cv_curves.csv").string());
        curves.row({"epoch", "train_mse", "validation_mse"});
        for (std::size_t e = 0; e < res.train_curve.size(); ++e)
            curves.row({std::to_string(e), csv::num(res.train_curve[e]),
                        csv::num(e < res.validation_curve.size() ? res.validation_curve[e] : 0.0)});
        curves.close();
    }
}

// ---------------------------------------------------------------------------

inline int run_command(const std::string& command, const json& cfg, const RunContext& ctx) {
    try {
        if (command == "phantom-gen") cmd_phantom_gen(cfg, ctx);
        else if (command == "seg-train") cmd_seg_train(cfg, ctx);
        else if (command == "seg-predict") cmd_seg_predict(cfg, ctx);
        else if (command == "seg-eval") cmd_seg_eval(cfg, ctx);
        else if (command == "features") cmd_features(cfg, ctx);
        else if (command == "surv-train") cmd_surv_train(cfg, ctx);
        else if (command == "surv-predict") cmd_surv_predict(cfg, ctx);
        else if (command == "surv-eval") cmd_surv_eval(cfg, ctx);
        else if (command == "surv-cv") cmd_surv_cv(cfg, ctx);
        else {
            std::cerr << "unknown command: " << command << "\n";
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "gliomkit " << command << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace gliomkit::cli
