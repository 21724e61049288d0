#include "hienet/trainer.hpp"

#include "hienet/nn/optim.hpp"
#include "hienet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

namespace hienet {

SplitPart split_of(const std::string& message_id) {
    const auto bucket = splitmix64(fnv1a64(message_id)) % 10;
    if (bucket < 8) return SplitPart::Train;
    return bucket == 8 ? SplitPart::Validation : SplitPart::Test;
}

namespace {

std::size_t worker_count(std::size_t requested, std::size_t jobs) {
    std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs fn(i) for i in [0, n); results must be written to per-index slots.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
    const std::size_t workers = worker_count(threads, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<CascadeFeatures> extract_all(const std::vector<const CascadeRecord*>& records, Seconds window,
                                         const GlobalSocialGraph& global, const EmbeddingVocab& vocab,
                                         const FeatureConfig& features, std::uint64_t seed, std::size_t threads) {
    std::vector<CascadeFeatures> out(records.size());
    parallel_for(records.size(), threads, [&](std::size_t i) {
        out[i] = extract_features(*records[i], window, global, vocab, features, seed);
    });
    return out;
}

PreparedCorpus prepare_corpus(const Dataset& data, const TrainConfig& config, std::optional<std::size_t> vocab_users) {
    config.validate();
    config.validate_against(data.manifest);
    PreparedCorpus corpus;
    corpus.vocab.users = vocab_users.value_or(data.users.size());

    std::vector<CascadeRecord> observed;
    observed.reserve(data.records.size());
    for (const auto& r : data.records) observed.push_back(truncate_to_window(r, config.window));
    corpus.global = build_global_graph(observed);

    std::vector<const CascadeRecord*> parts[3];
    for (const auto& r : data.records) {
        if (config.split == SplitMode::All) {
            for (auto& p : parts) p.push_back(&r);
        } else {
            parts[static_cast<int>(split_of(r.message_id))].push_back(&r);
        }
    }
    auto extract = [&](const std::vector<const CascadeRecord*>& recs) {
        return extract_all(recs, config.window, corpus.global, corpus.vocab, config.features, config.seed,
                           config.threads);
    };
    corpus.train = extract(parts[0]);
    corpus.validation = extract(parts[1]);
    corpus.test = extract(parts[2]);
    return corpus;
}

Evaluation evaluate(const HienetModel& model, const std::vector<CascadeFeatures>& data, std::size_t threads) {
    if (data.empty()) throw DataError("evaluation set is empty");
    Evaluation e;
    e.predictions.resize(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) { e.predictions[i] = model.predict_log(data[i]); });
    std::vector<std::int64_t> labels;
    labels.reserve(data.size());
    for (const auto& f : data) labels.push_back(f.label);
    e.metrics = compute_metrics(e.predictions, labels);
    return e;
}

double mean_target(const std::vector<CascadeFeatures>& data) {
    if (data.empty()) throw DataError("mean target of an empty set");
    double s = 0.0;
    for (const auto& f : data) s += f.target();
    return s / static_cast<double>(data.size());
}

Metrics constant_baseline(double mean_log, const std::vector<CascadeFeatures>& data) {
    std::vector<double> preds(data.size(), mean_log);
    std::vector<std::int64_t> labels;
    for (const auto& f : data) labels.push_back(f.label);
    return compute_metrics(preds, labels);
}

TrainResult train(const TrainConfig& config, const PreparedCorpus& corpus, const TrainOptions& options) {
    config.validate();
    if (corpus.train.size() < 2) throw DataError("training needs at least 2 cascades, got " +
                                                 std::to_string(corpus.train.size()));
    const auto& validation = corpus.validation.empty() ? corpus.train : corpus.validation;

    TrainResult result;
    result.model = std::make_unique<HienetModel>(config.model, config.features, corpus.vocab, config.seed);
    HienetModel& model = *result.model;
    nn::ParameterStore& store = model.parameters();
    if (options.resume) nn::unpack(store, *options.resume);
    nn::Adam adam({config.lr});

    auto log_epoch = [&](std::size_t epoch) {
        EpochLog log;
        log.epoch = epoch;
        log.train_msle = evaluate(model, corpus.train, config.threads).metrics.msle;
        const auto v = evaluate(model, validation, config.threads).metrics;
        log.validation_msle = v.msle;
        log.validation_msle_median = v.msle_median;
        result.history.push_back(log);
        if (options.on_epoch) options.on_epoch(log);
        return log;
    };

    nn::TensorArchive best = nn::pack(store);
    result.best_validation_msle = log_epoch(0).validation_msle;

    std::vector<std::size_t> order(corpus.train.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(config.seed, "shuffle"));
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[uniform_index(shuffle_rng, i + 1)]);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            store.zero_grad();
            std::vector<nn::Var> preds;
            std::vector<std::int64_t> sizes;
            for (std::size_t k = start; k < end; ++k) {
                const auto& f = corpus.train[order[k]];
                preds.push_back(model.forward(f));
                sizes.push_back(f.label);
            }
            const nn::Var loss = msle_loss(preds, sizes);
            if (!std::isfinite(loss.item())) {
                const auto op = nn::first_nonfinite_op(loss);
                throw DataError("non-finite loss at epoch " + std::to_string(epoch) +
                                "; first non-finite value produced by '" + op.value_or("unknown") + "'");
            }
            nn::backward(loss);
            adam.step(store);
        }
        const EpochLog log = log_epoch(epoch);
        if (log.validation_msle < result.best_validation_msle) {
            result.best_validation_msle = log.validation_msle;
            result.best_epoch = epoch;
            best = nn::pack(store);
        }
    }

    nn::unpack(store, best);
    store.zero_grad();
    result.validation = evaluate(model, validation, config.threads).metrics;
    if (!corpus.test.empty()) result.test = evaluate(model, corpus.test, config.threads).metrics;
    result.baseline_mean_log = mean_target(corpus.train);
    result.baseline_validation = constant_baseline(result.baseline_mean_log, validation);
    if (!corpus.test.empty()) result.baseline_test = constant_baseline(result.baseline_mean_log, corpus.test);
    return result;
}

nlohmann::json metrics_json(const TrainConfig& config, const TrainResult& result) {
    using nlohmann::json;
    json history = json::array();
    for (const auto& h : result.history)
        history.push_back({{"epoch", h.epoch},
                           {"train_msle", h.train_msle},
                           {"validation_msle", h.validation_msle},
                           {"validation_msle_median", h.validation_msle_median}});
    auto metrics = [](const Metrics& m) { return json{{"msle", m.msle}, {"msle_median", m.msle_median}}; };
    return {
        {"config", to_json(config)},
        {"history", history},
        {"best_epoch", result.best_epoch},
        {"best_validation_msle", result.best_validation_msle},
        {"validation", metrics(result.validation)},
        {"test", metrics(result.test)},
        {"baseline",
         {{"mean_log", result.baseline_mean_log},
          {"validation", metrics(result.baseline_validation)},
          {"test", metrics(result.baseline_test)}}},
    };
}

void save_checkpoint(const std::filesystem::path& dir, const HienetModel& model, const TrainConfig& config,
                     const UserInterner& users, const DatasetManifest& manifest) {
    std::filesystem::create_directories(dir);
    nn::write_archive(nn::pack(model.parameters()), dir / "tensors.json", dir / "tensors.bin");
    const std::size_t vocab_users = model.vocab().users;
    std::vector<std::string> names(users.names().begin(),
                                   users.names().begin() + static_cast<std::ptrdiff_t>(std::min(vocab_users, users.size())));
    nlohmann::json meta = {{"format", "hienet-checkpoint/1"},
                           {"config", to_json(config)},
                           {"vocab_users", vocab_users},
                           {"users", names},
                           {"time_unit", manifest.time_unit},
                           {"label_horizon", manifest.label_horizon}};
    std::ofstream out(dir / "model.json", std::ios::binary);
    out << meta.dump(2) << '\n';
    if (!out) throw DataError("failed to write " + (dir / "model.json").string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream in(dir / "model.json");
    if (!in) throw DataError("no checkpoint at " + dir.string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError((dir / "model.json").string() + ": " + e.what());
    }
    LoadedCheckpoint c;
    try {
        if (meta.at("format").get<std::string>() != "hienet-checkpoint/1")
            throw DataError("unsupported checkpoint format in " + dir.string());
        c.config = config_from_json(meta.at("config"), TrainConfig{});
        c.users = UserInterner::from_names(meta.at("users").get<std::vector<std::string>>());
        c.vocab_users = meta.at("vocab_users").get<std::size_t>();
        c.time_unit = meta.at("time_unit").get<std::string>();
        c.label_horizon = meta.at("label_horizon").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError((dir / "model.json").string() + ": " + e.what());
    }
    c.tensors = nn::read_archive(dir / "tensors.json", dir / "tensors.bin");
    c.model = std::make_unique<HienetModel>(c.config.model, c.config.features, EmbeddingVocab{c.vocab_users},
                                            c.config.seed);
    nn::unpack(c.model->parameters(), c.tensors);
    return c;
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<CascadeFeatures>& data,
                           const std::vector<double>& predictions) {
    std::ofstream out(path, std::ios::binary);
    out << "message_id,true,predicted\n";
    char buf[64];
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6f", popularity_from_log(predictions[i]));
        out << data[i].message_id << ',' << data[i].label << ',' << buf << '\n';
    }
    if (!out) throw DataError("failed to write " + path.string());
}

std::vector<AblationRow> run_ablation(const Dataset& data, const TrainConfig& base,
                                      const std::function<void(const AblationRow&)>& on_row) {
    std::vector<AblationRow> rows;
    auto variant = [&](std::string name, auto edit) {
        AblationRow row;
        row.name = std::move(name);
        row.config = base;
        edit(row.config);
        rows.push_back(std::move(row));
    };
    variant("HIENet (full)", [](TrainConfig&) {});
    for (Branch b : {Branch::CascadeSequence, Branch::SocialGraph, Branch::SubCascade})
        variant("w/o " + to_string(b), [b](TrainConfig& c) { c.model.set_branch(b, false); });
    variant("w/o cascade transformer (concat)", [](TrainConfig& c) { c.model.fusion = FusionMode::Concat; });

    // Features do not depend on the model switches, so one extraction serves all rows.
    const PreparedCorpus corpus = prepare_corpus(data, base);
    for (auto& row : rows) {
        const TrainResult r = train(row.config, corpus);
        row.validation_msle = r.validation.msle;
        row.validation_msle_median = r.validation.msle_median;
        row.test_msle = r.test.msle;
        row.test_msle_median = r.test.msle_median;
        if (on_row) on_row(row);
    }
    return rows;
}

std::string ablation_markdown(const std::vector<AblationRow>& rows) {
    std::string out = "| Variant | Val MSLE | Val mSLE | Test MSLE | Test mSLE |\n|---|---|---|---|---|\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "| %s | %.4f | %.4f | %.4f | %.4f |\n", r.name.c_str(), r.validation_msle,
                      r.validation_msle_median, r.test_msle, r.test_msle_median);
        out += buf;
    }
    return out;
}

}  // namespace hienet
