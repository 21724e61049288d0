#include "hienet/config.hpp"
#include "hienet/dataset.hpp"
#include "hienet/gradient_suite.hpp"
#include "hienet/synthetic.hpp"
#include "hienet/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace hienet;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;

struct CommonFlags {
    std::string preset = "desk";
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<Seconds> window;
    std::optional<std::size_t> epochs;
    std::vector<std::string> disabled;
    std::string fusion;
    std::string out;

    void attach(CLI::App* app, bool with_model_flags = true) {
        app->add_option("--preset", preset, "Base hyperparameters: desk or paper")->check(CLI::IsMember({"desk", "paper"}));
        app->add_option("--config", config_path, "JSON config file; flags override its keys");
        app->add_option("--seed", seed, "Random seed");
        app->add_option("--window", window, "Observation window (dataset time units)");
        app->add_option("--out", out, "Output directory");
        if (!with_model_flags) return;
        app->add_option("--epochs", epochs, "Training epochs");
        app->add_option("--disable-branch", disabled, "Disable a branch (repeatable)")
            ->check(CLI::IsMember({"cs", "sg", "cg"}));
        app->add_option("--fusion", fusion, "Fusion mode")->check(CLI::IsMember({"transformer", "concat"}));
    }

    TrainConfig resolve() const {
        TrainConfig c = preset_config(preset);
        if (!config_path.empty()) c = load_config_file(config_path, c);
        if (seed) c.seed = *seed;
        if (window) c.window = *window;
        if (epochs) c.epochs = *epochs;
        for (const auto& b : disabled) c.model.set_branch(branch_from_string(b), false);
        if (!fusion.empty()) c.model.fusion = fusion_mode_from_string(fusion);
        c.validate();
        return c;
    }
};

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("failed to write " + path.string());
}

void print_load_errors(const LoadReport& report, const fs::path& file) {
    for (const auto& e : report.errors) std::cerr << file.string() << ": " << e.what() << '\n';
}

Dataset load_strict(const std::string& path, UserInterner users = {}) {
    LoadReport report;
    Dataset d = load_dataset(path, std::move(users), &report);
    if (!report.errors.empty()) {
        print_load_errors(report, cascade_file_path(path));
        throw DataError(std::to_string(report.errors.size()) + " malformed line(s) in " + path);
    }
    return d;
}

std::vector<CascadeFeatures> pick_split(PreparedCorpus& corpus, const std::string& split) {
    if (split == "train") return std::move(corpus.train);
    if (split == "validation") return std::move(corpus.validation);
    if (split == "test") return std::move(corpus.test);
    auto all = std::move(corpus.train);
    for (auto* part : {&corpus.validation, &corpus.test})
        all.insert(all.end(), std::make_move_iterator(part->begin()), std::make_move_iterator(part->end()));
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.message_id < b.message_id; });
    return all;
}

// Shared by eval and predict.
std::pair<LoadedCheckpoint, std::vector<CascadeFeatures>> load_for_inference(const std::string& checkpoint,
                                                                            const std::string& data,
                                                                            std::optional<Seconds> window,
                                                                            const std::string& split) {
    LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
    Dataset d = load_strict(data, ckpt.users);
    if (d.manifest.time_unit != ckpt.time_unit)
        throw DataError("dataset time unit '" + d.manifest.time_unit + "' does not match checkpoint unit '" +
                        ckpt.time_unit + "'");
    if (window && *window != ckpt.config.window)
        throw DataError("window " + std::to_string(*window) + " does not match the checkpoint's training window " +
                        std::to_string(ckpt.config.window));
    TrainConfig cfg = ckpt.config;
    if (split == "all") cfg.split = SplitMode::Hash;
    PreparedCorpus corpus = prepare_corpus(d, cfg, ckpt.vocab_users);
    auto features = pick_split(corpus, split);
    if (features.empty()) throw DataError("no cascades in split '" + split + "'");
    return {std::move(ckpt), std::move(features)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cascade popularity prediction: synthetic data, training, evaluation and checks"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic cascade corpus");
    SyntheticSpec spec;
    std::string synth_out;
    synth->add_option("--cascades", spec.num_cascades, "Number of cascades");
    synth->add_option("--users", spec.num_users, "Number of users in the social graph");
    synth->add_option("--branching", spec.mean_branching, "Mean offspring per infected user at t=0");
    synth->add_option("--spread", spec.branching_spread, "Lognormal sigma of per-cascade virality");
    synth->add_option("--influence", spec.influence_spread, "Lognormal sigma of per-user influence");
    synth->add_option("--decay", spec.decay_rate, "Infection probability decay rate (1/s)");
    synth->add_option("--delay", spec.mean_delay, "Mean retweet delay (s)");
    synth->add_option("--window", spec.window, "Observation window recorded in the manifest (s)");
    synth->add_option("--horizon", spec.horizon, "Label horizon (s)");
    synth->add_option("--max-size", spec.max_size, "Retweet cap per cascade");
    synth->add_option("--min-observed", spec.min_observed, "Resample cascades with fewer retweets in the window");
    synth->add_option("--seed", spec.seed, "Random seed");
    synth->add_option("-o,--out", synth_out, "Output directory")->required();

    auto* ingest = app.add_subcommand("ingest", "Parse and validate a cascade file");
    std::string ingest_data, ingest_out;
    ingest->add_option("--data", ingest_data, "Cascade file or dataset directory")->required();
    ingest->add_option("--out", ingest_out, "Write the canonical dataset here");

    auto* train_cmd = app.add_subcommand("train", "Train a model");
    CommonFlags train_flags;
    std::string train_data, resume;
    train_flags.attach(train_cmd);
    train_cmd->add_option("--data", train_data, "Cascade file or dataset directory")->required();
    train_cmd->add_option("--resume", resume, "Initialise from a checkpoint directory");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    std::string eval_ckpt, eval_data, eval_out, eval_split = "test";
    std::optional<Seconds> eval_window;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint directory")->required();
    eval_cmd->add_option("--data", eval_data, "Cascade file or dataset directory")->required();
    eval_cmd->add_option("--window", eval_window, "Observation window; must match the checkpoint");
    eval_cmd->add_option("--split", eval_split, "Which split to score")
        ->check(CLI::IsMember({"train", "validation", "test", "all"}));
    eval_cmd->add_option("--out", eval_out, "Output directory for metrics.json and per_cascade.csv");

    auto* predict_cmd = app.add_subcommand("predict", "Print per-cascade predictions as CSV");
    std::string pred_ckpt, pred_data, pred_split = "all";
    std::optional<Seconds> pred_window;
    predict_cmd->add_option("--checkpoint", pred_ckpt, "Checkpoint directory")->required();
    predict_cmd->add_option("--data", pred_data, "Cascade file or dataset directory")->required();
    predict_cmd->add_option("--window", pred_window, "Observation window; must match the checkpoint");
    predict_cmd->add_option("--split", pred_split, "Which split to predict")
        ->check(CLI::IsMember({"train", "validation", "test", "all"}));

    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
    std::uint64_t grad_seed = 7;
    grad_cmd->add_option("--seed", grad_seed, "Random seed");

    auto* ablate_cmd = app.add_subcommand("ablate", "Branch and fusion ablation grid");
    CommonFlags ablate_flags;
    std::string ablate_data;
    ablate_flags.attach(ablate_cmd, false);
    ablate_cmd->add_option("--epochs", ablate_flags.epochs, "Training epochs");
    ablate_cmd->add_option("--data", ablate_data, "Cascade file or dataset directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*synth) {
            const Dataset d = generate_synthetic(spec);
            write_dataset(d, synth_out);
            const auto& fs_stats = d.manifest.extra["final_size"];
            std::cout << "wrote " << d.records.size() << " cascades to " << synth_out << " (median size "
                      << fs_stats["median"] << ", max " << fs_stats["max"] << ")\n";
        } else if (*ingest) {
            LoadReport report;
            const Dataset d = load_dataset(ingest_data, &report);
            print_load_errors(report, cascade_file_path(ingest_data));
            std::size_t events = 0;
            for (const auto& r : d.records) events += r.events.size() - 1;
            std::cout << "lines: " << report.lines << "\nrecords: " << d.records.size() << "\nretweets: " << events
                      << "\nusers: " << d.users.size() << "\nerrors: " << report.errors.size() << '\n';
            if (!ingest_out.empty()) write_dataset(d, ingest_out);
            return report.errors.empty() ? kOk : kDataError;
        } else if (*train_cmd) {
            const TrainConfig cfg = train_flags.resolve();
            const Dataset d = load_strict(train_data);
            const PreparedCorpus corpus = prepare_corpus(d, cfg);
            std::optional<LoadedCheckpoint> ckpt;
            TrainOptions opts;
            if (!resume.empty()) {
                ckpt = load_checkpoint(resume);
                opts.resume = &ckpt->tensors;
            }
            opts.on_epoch = [](const EpochLog& e) {
                std::fprintf(stderr, "epoch %zu  train MSLE %.4f  val MSLE %.4f\n", e.epoch, e.train_msle,
                             e.validation_msle);
            };
            const TrainResult result = train(cfg, corpus, opts);
            const fs::path out = train_flags.out.empty() ? fs::path("run") : fs::path(train_flags.out);
            fs::create_directories(out);
            write_json(out / "metrics.json", metrics_json(cfg, result));
            write_json(out / "config.json", to_json(cfg));
            save_checkpoint(out / "checkpoint", *result.model, cfg, d.users, d.manifest);
            const auto& eval_set = corpus.test.empty() ? corpus.validation : corpus.test;
            if (!eval_set.empty())
                write_predictions_csv(out / "per_cascade.csv", eval_set,
                                      evaluate(*result.model, eval_set, cfg.threads).predictions);
            std::printf("best epoch %zu  val MSLE %.4f  test MSLE %.4f mSLE %.4f  (mean-predictor val %.4f)\n",
                        result.best_epoch, result.validation.msle, result.test.msle, result.test.msle_median,
                        result.baseline_validation.msle);
        } else if (*eval_cmd) {
            auto [ckpt, features] = load_for_inference(eval_ckpt, eval_data, eval_window, eval_split);
            const Evaluation e = evaluate(*ckpt.model, features, ckpt.config.threads);
            // Corpus-mean baseline over the scored set, for reference.
            const Metrics base = constant_baseline(mean_target(features), features);
            nlohmann::json j = {{"split", eval_split},
                                {"count", features.size()},
                                {"msle", e.metrics.msle},
                                {"msle_median", e.metrics.msle_median},
                                {"mean_predictor", {{"msle", base.msle}, {"msle_median", base.msle_median}}}};
            std::cout << j.dump(2) << '\n';
            if (!eval_out.empty()) {
                fs::create_directories(eval_out);
                write_json(fs::path(eval_out) / "metrics.json", j);
                write_predictions_csv(fs::path(eval_out) / "per_cascade.csv", features, e.predictions);
            }
        } else if (*predict_cmd) {
            auto [ckpt, features] = load_for_inference(pred_ckpt, pred_data, pred_window, pred_split);
            const Evaluation e = evaluate(*ckpt.model, features, ckpt.config.threads);
            std::printf("message_id,true,predicted\n");
            for (std::size_t i = 0; i < features.size(); ++i)
                std::printf("%s,%lld,%.6f\n", features[i].message_id.c_str(),
                            static_cast<long long>(features[i].label), popularity_from_log(e.predictions[i]));
        } else if (*grad_cmd) {
            bool ok = true;
            for (const auto& r : run_gradient_suite(grad_seed)) {
                const bool pass = r.result.max_rel_error < kGradientTolerance;
                ok = ok && pass;
                std::printf("%-18s max rel err %.3e  (%zu entries, worst %s)  %s\n", r.layer.c_str(),
                            r.result.max_rel_error, r.result.checked, r.result.worst.c_str(), pass ? "ok" : "FAIL");
            }
            return ok ? kOk : kDataError;
        } else if (*ablate_cmd) {
            const TrainConfig cfg = ablate_flags.resolve();
            const Dataset d = load_strict(ablate_data);
            const auto rows = run_ablation(d, cfg, [](const AblationRow& r) {
                std::fprintf(stderr, "%s: val MSLE %.4f\n", r.name.c_str(), r.validation_msle);
            });
            const std::string table = ablation_markdown(rows);
            std::cout << table;
            const fs::path out = ablate_flags.out.empty() ? fs::path("ablation") : fs::path(ablate_flags.out);
            fs::create_directories(out);
            std::ofstream(out / "ablation.md", std::ios::binary) << table;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kOk;
}
