#include "context.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "emit.hpp"
#include "gnlab/errors.hpp"
#include "gnlab/global_am.hpp"
#include "gnlab/harness.hpp"
#include "gnlab/metrics.hpp"
#include "gnlab/parallel.hpp"
#include "gnlab/rng.hpp"

namespace gnlab::harness {

std::string RunContext::path(const std::string& name) {
    files.push_back(name);
    return (std::filesystem::path(out_dir) / name).string();
}

void RunContext::finish() {
    {
        std::ofstream snapshot(std::filesystem::path(out_dir) / "config_snapshot.txt",
                               std::ios::binary);
        require(snapshot.good(), ErrorKind::io, "cannot write config snapshot");
        snapshot << "seed = " << seed << "\n" << config.canonical_text();
    }
    files.push_back("config_snapshot.txt");
    write_manifest(out_dir, files);
}

DataBundle build_dataset(const RunContext& ctx) {
    const ConfigFile& c = ctx.config;
    const std::string kind = c.get_string("dataset", "kind", "glyphs");
    DataBundle bundle;
    if (kind == "glyphs") {
        const size_t n = c.get_size("dataset", "n", 4096);
        const size_t side = c.get_size("dataset", "side", 12);
        const size_t classes = c.get_size("dataset", "classes", 4);
        const double noise_std = c.get_double("dataset", "noise_std", 0.3);
        const std::string mask = c.get_string("dataset", "mask", "box");
        require(mask == "box" || mask == "exact", ErrorKind::config,
                "dataset.mask must be box or exact");
        const size_t test_size = c.get_size("dataset", "test_size", 512);
        Dataset all = make_masked_glyph(n, side, classes, noise_std, ctx.seed,
                                        mask == "box" ? MaskKind::bounding_box
                                                      : MaskKind::exact);
        auto [train_set, test_set] = split_dataset(all, test_size, ctx.seed);
        bundle.train = std::move(train_set);
        bundle.test = std::move(test_set);
    } else if (kind == "toy_gauss") {
        ToyGaussSpec spec;
        spec.n_points = c.get_size("dataset", "n", 1024);
        spec.variance = c.get_double("dataset", "variance", 0.5);
        spec.test_size = c.get_size("dataset", "test_size", 64);
        auto [train_set, test_set] = make_toy_gauss(spec, ctx.seed);
        bundle.train = std::move(train_set);
        bundle.test = std::move(test_set);
    } else if (kind == "file") {
        const std::string path = c.get_string("dataset", "path", "");
        require(!path.empty(), ErrorKind::config, "dataset.path required for kind=file");
        Dataset all = load_dataset(path);
        const size_t test_size =
            c.get_size("dataset", "test_size", std::min<size_t>(all.size() / 4, 512));
        auto [train_set, test_set] = split_dataset(all, test_size, ctx.seed);
        bundle.train = std::move(train_set);
        bundle.test = std::move(test_set);
    } else {
        raise(ErrorKind::config, "unknown dataset.kind '" + kind + "'");
    }
    return bundle;
}

MlpModel resolve_model(RunContext& ctx, const DataBundle& data, TrainReport* report_out) {
    const ConfigFile& c = ctx.config;
    const std::string checkpoint = c.get_string("model", "checkpoint", "");
    if (!checkpoint.empty()) {
        return load_model(checkpoint);
    }
    require(data.train.size() > 0, ErrorKind::config,
            "cannot train a model from an empty training set");
    std::vector<size_t> dims{data.train.input_dim()};
    {
        const std::string hidden = c.get_string("model", "hidden", "64");
        std::istringstream in(hidden);
        size_t h = 0;
        while (in >> h) {
            dims.push_back(h);
        }
    }
    dims.push_back(data.train.num_classes());
    MlpModel model = MlpModel::random(dims, c.get_u64("model", "init_seed", ctx.seed));
    TrainConfig tc;
    tc.epochs = c.get_size("train", "epochs", 30);
    tc.learning_rate = c.get_double("train", "lr", 0.1);
    tc.momentum = c.get_double("train", "momentum", 0.9);
    tc.batch_size = c.get_size("train", "batch", 32);
    tc.seed = ctx.seed;
    TrainReport report = train(model, data.train, &data.test, tc);
    if (report_out != nullptr) {
        *report_out = std::move(report);
    }
    save_model(model, ctx.path("model.mlp"));
    return model;
}

NoiseLevels resolve_noise(const RunContext& ctx, const MlpModel& model,
                          const Dataset& calib_data) {
    const ConfigFile& c = ctx.config;
    NoiseLevels noise;
    const double alpha_sg = c.get_double("enhancer", "alpha_sg", 0.2);
    const double target = c.get_double("enhancer", "target_drop", 0.05);
    const double tol = c.get_double("enhancer", "drop_tol", 0.01);

    const auto explicit_sg = c.get_auto_double("enhancer", "sigma_sg");
    const auto explicit_ng = c.get_auto_double("enhancer", "sigma_ng");
    noise.sigma_sg = explicit_sg.has_value() ? *explicit_sg
                                             : sigma_sg_rule(calib_data, alpha_sg);
    noise.sigma_ng = explicit_ng.has_value()
                         ? *explicit_ng
                         : calibrate_ng(model, calib_data, target, tol, ctx.seed).sigma;

    const std::string fg_mode = c.get_string("enhancer", "fg_mode", "joint");
    if (explicit_sg.has_value() && explicit_ng.has_value()) {
        // Both levels pinned by hand: halve them for the fusion, whatever
        // the mode.
        std::tie(noise.fg_sigma_sg, noise.fg_sigma_ng) =
            fg_halve(noise.sigma_sg, noise.sigma_ng);
    } else if (fg_mode == "halve") {
        std::tie(noise.fg_sigma_sg, noise.fg_sigma_ng) =
            fg_halve(noise.sigma_sg, noise.sigma_ng);
    } else if (fg_mode == "joint") {
        const FgCalibration fg = calibrate_fg(model, calib_data,
                                              FgCalibrationMode::joint_drop, target,
                                              tol, ctx.seed);
        noise.fg_sigma_sg = fg.sigma_sg;
        noise.fg_sigma_ng = fg.sigma_ng;
    } else {
        raise(ErrorKind::config, "enhancer.fg_mode must be joint or halve");
    }
    return noise;
}

ExplainerSpec explainer_from_config(const ConfigFile& config, const DataBundle& data) {
    ExplainerSpec spec;
    spec.method = method_from_name(config.get_string("explainer", "method", "saliency"));
    spec.ig_steps = config.get_size("explainer", "ig_steps", 128);
    spec.shap_samples = config.get_size("explainer", "shap_samples", 8);
    spec.shap_sigma = config.get_double("explainer", "shap_sigma", -1.0);
    spec.occlusion_patch = config.get_size("explainer", "occlusion_patch", 1);
    spec.occlusion_fill = config.get_double("explainer", "occlusion_fill", 0.0);
    spec.gamma = config.get_double("explainer", "gamma", 0.25);
    if (spec.method == ExplainMethod::gradshap) {
        // Baseline pool: the first 8 training samples.
        const size_t pool = std::min<size_t>(8, data.train.size());
        for (size_t i = 0; i < pool; ++i) {
            spec.shap_baseline_pool.push_back(data.train.inputs[i]);
        }
    }
    return spec;
}

EnhancerConfig enhancer_base_config(const ConfigFile& config) {
    EnhancerConfig cfg;
    cfg.n_inputs = config.get_size("enhancer", "n", 10);
    cfg.m_models = config.get_size("enhancer", "m", 10);
    cfg.share_xi = config.get_bool("enhancer", "share_xi", true);
    cfg.average_pre_abs = config.get_bool("enhancer", "pre_abs", false);
    return cfg;
}

void cmd_train(RunContext& ctx) {
    DataBundle data = build_dataset(ctx);
    TrainReport report;
    MlpModel model = resolve_model(ctx, data, &report);
    CsvFile csv(ctx.path("train_report.csv"),
                {"epoch", "train_loss", "train_accuracy", "test_accuracy"});
    for (size_t e = 0; e < report.train_loss.size(); ++e) {
        csv.row({std::to_string(e), fmt_full(report.train_loss[e]),
                 fmt_full(report.train_accuracy[e]),
                 e < report.test_accuracy.size() ? fmt_full(report.test_accuracy[e])
                                                 : ""});
    }
    csv.close();
    const double final_test =
        report.test_accuracy.empty() ? accuracy(model, data.test)
                                     : report.test_accuracy.back();
    CsvFile summary(ctx.path("train_summary.csv"),
                    {"train_size", "test_size", "final_test_accuracy"});
    summary.row({std::to_string(data.train.size()), std::to_string(data.test.size()),
                 fmt_full(final_test)});
    summary.close();
}

void cmd_explain(RunContext& ctx) {
    DataBundle data = build_dataset(ctx);
    MlpModel model = resolve_model(ctx, data);
    const ExplainerSpec spec = explainer_from_config(ctx.config, data);
    const EnhancerKind kind =
        enhancer_from_name(ctx.config.get_string("enhancer", "kind", "ng"));
    NoiseLevels noise;
    if (kind != EnhancerKind::none) {
        noise = resolve_noise(ctx, model, data.test);
    }

    const size_t n = std::min(ctx.config.get_size("explain", "samples", 8),
                              data.test.size());
    require(n > 0, ErrorKind::config, "explain: no samples available");

    std::vector<AttributionRecord> records(n);
    parallel_for(n, [&](size_t i) {
        EnhancerConfig cfg = enhancer_base_config(ctx.config);
        cfg.base_seed = derive_seed(ctx.seed, stream::sample, i);
        switch (kind) {
            case EnhancerKind::none: break;
            case EnhancerKind::sg: cfg.sigma_sg = noise.sigma_sg; break;
            case EnhancerKind::ng: cfg.sigma_ng = noise.sigma_ng; break;
            case EnhancerKind::fg:
                cfg.sigma_sg = noise.fg_sigma_sg;
                cfg.sigma_ng = noise.fg_sigma_ng;
                break;
        }
        const size_t cls = static_cast<size_t>(data.test.labels[i]);
        records[i].attribution =
            enhance(model, data.test.inputs[i], cls, spec, kind, cfg);
        records[i].sample_index = i;
        records[i].class_index = cls;
        records[i].shape = data.test.inputs[i].shape;
    });

    std::ofstream archive(ctx.path("attributions.ngar"), std::ios::binary);
    require(archive.good(), ErrorKind::io, "cannot write attribution archive");
    CsvFile index(ctx.path("explain_index.csv"),
                  {"sample_id", "label", "method", "enhancer", "sigma_sg", "sigma_ng",
                   "attribution_sum"});
    for (size_t i = 0; i < n; ++i) {
        append_attribution(archive, records[i]);
        const EnhancerConfig& cfg = *records[i].attribution.config;
        index.row({std::to_string(i), std::to_string(data.test.labels[i]),
                   method_name(spec.method), enhancer_name(kind),
                   fmt_full(cfg.sigma_sg), fmt_full(cfg.sigma_ng),
                   fmt_full(records[i].attribution.values.sum())});
    }
    index.close();
    require(archive.good(), ErrorKind::io, "attribution archive write failed");
}

void cmd_calibrate(RunContext& ctx) {
    DataBundle data = build_dataset(ctx);
    MlpModel model = resolve_model(ctx, data);
    const double target = ctx.config.get_double("enhancer", "target_drop", 0.05);
    const double tol = ctx.config.get_double("enhancer", "drop_tol", 0.01);

    const CalibrationResult ng = calibrate_ng(model, data.test, target, tol, ctx.seed);
    {
        // acc is reconstructed from the recorded drop; at clamped points
        // (drop 0) it reads as the clean accuracy.
        CsvFile csv(ctx.path("calibration_trace.csv"), {"sigma", "acc", "drop"});
        for (const auto& [sigma, drop] : ng.trace) {
            const double acc =
                ng.chance_level + (1.0 - drop) * (ng.acc_clean - ng.chance_level);
            csv.row({fmt_full(sigma), fmt_full(acc), fmt_full(drop)});
        }
        csv.close();
    }
    const std::string fg_mode = ctx.config.get_string("enhancer", "fg_mode", "joint");
    const FgCalibration fg =
        calibrate_fg(model, data.test,
                     fg_mode == "halve" ? FgCalibrationMode::halve_solo
                                        : FgCalibrationMode::joint_drop,
                     target, tol, ctx.seed);
    CsvFile summary(ctx.path("calibration.csv"),
                    {"quantity", "sigma", "achieved_drop", "acc_at_sigma", "acc_clean",
                     "chance_level", "evaluations"});
    summary.row({"ng", fmt_full(ng.sigma), fmt_full(ng.achieved_drop),
                 fmt_full(ng.acc_at_sigma), fmt_full(ng.acc_clean),
                 fmt_full(ng.chance_level), std::to_string(ng.evaluations)});
    summary.row({"fg_sigma_sg", fmt_full(fg.sigma_sg), "", "", "", "", ""});
    summary.row({"fg_sigma_ng", fmt_full(fg.sigma_ng), fmt_full(fg.search.achieved_drop),
                 fmt_full(fg.search.acc_at_sigma), fmt_full(fg.search.acc_clean),
                 fmt_full(fg.search.chance_level),
                 std::to_string(fg.search.evaluations)});
    summary.close();
}

void cmd_sanity(RunContext& ctx) {
    DataBundle data = build_dataset(ctx);
    MlpModel model = resolve_model(ctx, data);
    const ExplainerSpec spec = explainer_from_config(ctx.config, data);
    const size_t n = std::min(ctx.config.get_size("sanity", "samples", 64),
                              data.test.size());
    require(n > 0, ErrorKind::config, "sanity: no samples available");
    Dataset subset;
    subset.name = data.test.name;
    for (size_t i = 0; i < n; ++i) {
        subset.inputs.push_back(data.test.inputs[i]);
        subset.labels.push_back(data.test.labels[i]);
    }
    const uint64_t seed = ctx.seed;
    const ExplainFn fn = [&spec, seed](const MlpModel& m, const Tensor& x, size_t cls) {
        return explain(m, x, cls, spec, derive_seed(seed, stream::explainer, 0)).values;
    };
    const SanityResult result = sanity_randomization(model, fn, subset, ctx.seed);

    CsvFile csv(ctx.path("sanity.csv"), {"sample_id", "spearman"});
    for (size_t i = 0; i < result.per_sample.size(); ++i) {
        csv.row({std::to_string(i), fmt_full(result.per_sample[i])});
    }
    csv.close();
    CsvFile summary(ctx.path("sanity_summary.csv"),
                    {"mean_spearman", "samples", "excluded"});
    summary.row({fmt_full(result.mean_correlation),
                 std::to_string(result.per_sample.size()),
                 std::to_string(result.excluded)});
    summary.close();
}

void cmd_am(RunContext& ctx) {
    DataBundle data = build_dataset(ctx);
    MlpModel model = resolve_model(ctx, data);

    AmConfig cfg;
    cfg.target.layer = model.num_layers() - 1;
    cfg.target.unit = ctx.config.get_size("am", "class", 0);
    cfg.steps = ctx.config.get_size("am", "steps", 512);
    cfg.step_size = ctx.config.get_double("am", "step_size", 0.05);
    cfg.l2_penalty = ctx.config.get_double("am", "l2", 1e-3);
    cfg.jitter_std = ctx.config.get_double("am", "jitter", 0.01);
    cfg.box_lo = ctx.config.get_double("am", "box_lo", 0.0);
    cfg.box_hi = ctx.config.get_double("am", "box_hi", 1.0);
    cfg.m_models = ctx.config.get_size("am", "m", 10);
    cfg.seed = ctx.seed;
    const auto explicit_ng = ctx.config.get_auto_double("am", "sigma_ng");
    if (explicit_ng.has_value()) {
        cfg.sigma_ng = *explicit_ng;
    } else if (cfg.m_models > 1) {
        cfg.sigma_ng = calibrate_ng(model, data.test,
                                    ctx.config.get_double("enhancer", "target_drop", 0.05),
                                    ctx.config.get_double("enhancer", "drop_tol", 0.01),
                                    ctx.seed)
                           .sigma;
    }

    const AmResult result = activation_maximize(model, cfg);
    CsvFile trace(ctx.path("am_trace.csv"), {"step", "objective"});
    for (size_t s = 0; s < result.objective_trace.size(); ++s) {
        trace.row({std::to_string(s), fmt_full(result.objective_trace[s])});
    }
    trace.close();

    // Image render when the inputs carry a 2d shape; vectors are rendered
    // as a single row.
    std::vector<size_t> shape = data.test.size() > 0 ? data.test.inputs[0].shape
                                                     : std::vector<size_t>{};
    if (shape.size() != 2) {
        shape = {1, result.x_star.size()};
    }
    am_render(result.x_star, shape, ctx.path("am.pgm"), ctx.path("am.svg"));

    CsvFile summary(ctx.path("am_summary.csv"),
                    {"class", "sigma_ng", "m", "first_objective", "final_objective"});
    summary.row({std::to_string(cfg.target.unit), fmt_full(cfg.sigma_ng),
                 std::to_string(cfg.m_models), fmt_full(result.objective_trace.front()),
                 fmt_full(result.objective_trace.back())});
    summary.close();
}

void run_command(const std::string& command, RunContext& ctx) {
    if (command == "train") {
        cmd_train(ctx);
    } else if (command == "explain") {
        cmd_explain(ctx);
    } else if (command == "calibrate") {
        cmd_calibrate(ctx);
    } else if (command == "compare") {
        cmd_compare(ctx);
    } else if (command == "sweep") {
        cmd_sweep(ctx);
    } else if (command == "toy") {
        cmd_toy(ctx);
    } else if (command == "heuristic-curve") {
        cmd_heuristic_curve(ctx);
    } else if (command == "sanity") {
        cmd_sanity(ctx);
    } else if (command == "am") {
        cmd_am(ctx);
    } else {
        raise(ErrorKind::config, "unknown command '" + command + "'");
    }
}

}  // namespace gnlab::harness

namespace gnlab {

void run_command(const std::string& command, const ConfigFile& config,
                 const std::string& out_dir, const RunOverrides& overrides) {
    harness::RunContext ctx;
    ctx.config = config;
    ctx.out_dir = out_dir;
    if (overrides.samples.has_value()) {
        const std::string n = std::to_string(*overrides.samples);
        for (const char* section : {"compare", "sweep", "heuristic", "sanity", "explain"}) {
            ctx.config.override_value(section, "samples", n);
        }
    }
    ctx.seed = overrides.seed.value_or(ctx.config.get_u64("run", "seed", 42));
    set_max_threads(
        overrides.threads.value_or(ctx.config.get_size("run", "threads", 1)));

    DirLock lock(out_dir);
    harness::run_command(command, ctx);
    ctx.finish();
}

}  // namespace gnlab
