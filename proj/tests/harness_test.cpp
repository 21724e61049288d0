#include "hienet/config.hpp"
#include "hienet/errors.hpp"
#include "hienet/gradient_suite.hpp"
#include "hienet/synthetic.hpp"
#include "hienet/trainer.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hienet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

SyntheticSpec small_spec() {
    SyntheticSpec s;
    s.num_users = 300;
    s.num_cascades = 40;
    s.max_size = 80;
    return s;
}

TrainConfig tiny_config() {
    TrainConfig c = desk_config();
    c.features.walks = 3;
    c.features.walk_length = 4;
    c.features.m_max = 3;
    c.model.embed_dim = 4;
    c.model.d_model = 8;
    c.model.lstm_hidden = 4;
    c.model.gcn_hidden = 4;
    c.model.heads = 2;
    c.model.ff_dim = 8;
    c.model.mlp_sizes = {8};
    c.epochs = 3;
    c.batch_size = 8;
    c.lr = 1e-2;
    c.threads = 2;
    return c;
}

fs::path temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("hienet_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("synthetic corpus with zero branching is root-only") {
    SyntheticSpec s = small_spec();
    s.mean_branching = 0.0;
    s.min_observed = 0;
    const auto d = generate_synthetic(s);
    REQUIRE(d.records.size() == 40);
    for (const auto& r : d.records) {
        CHECK(r.events.size() == 1);
        CHECK(compute_label(r, s.window) == 0);
    }
}

TEST_CASE("synthetic output is byte-identical for a fixed seed") {
    const auto dir = temp_dir("synth_det");
    write_dataset(generate_synthetic(small_spec()), dir / "a");
    write_dataset(generate_synthetic(small_spec()), dir / "b");
    CHECK(slurp(dir / "a" / "cascades.txt") == slurp(dir / "b" / "cascades.txt"));
    CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
    SyntheticSpec other = small_spec();
    other.seed = 2;
    write_dataset(generate_synthetic(other), dir / "c");
    CHECK(slurp(dir / "a" / "cascades.txt") != slurp(dir / "c" / "cascades.txt"));
    fs::remove_all(dir);
}

TEST_CASE("synthetic records are consistent and reload unchanged") {
    const auto d = generate_synthetic(small_spec());
    for (const auto& r : d.records) {
        CHECK(r.final_size == static_cast<std::int64_t>(r.events.size()) - 1);
        CHECK(std::is_sorted(r.events.begin(), r.events.end(),
                             [](const auto& a, const auto& b) { return a.elapsed < b.elapsed; }));
        CHECK(r.observed_count(3600) >= 5);
    }
    const auto dir = temp_dir("synth_reload");
    write_dataset(d, dir);
    const auto back = load_dataset(dir);
    REQUIRE(back.records.size() == d.records.size());
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        CHECK(back.records[i].final_size == d.records[i].final_size);
        CHECK(back.records[i].events.size() == d.records[i].events.size());
    }
    fs::remove_all(dir);
}

TEST_CASE("default synthetic corpus is heavy-tailed") {
    const auto d = generate_synthetic(SyntheticSpec{});
    const auto& stats = d.manifest.extra["final_size"];
    CHECK(stats["max_over_median"].get<double>() >= d.manifest.extra["heavy_tail_threshold"].get<double>());
}

TEST_CASE("hash split is stable and roughly 80/10/10") {
    std::size_t counts[3] = {};
    for (int i = 0; i < 5000; ++i) ++counts[static_cast<int>(split_of("m" + std::to_string(i)))];
    CHECK(counts[0] > 3800);
    CHECK(counts[0] < 4200);
    CHECK(counts[1] > 380);
    CHECK(counts[2] > 380);
    CHECK(split_of("abc") == split_of("abc"));
}

TEST_CASE("config round-trips through json") {
    TrainConfig c = desk_config();
    c.model.use_sg = false;
    c.model.fusion = FusionMode::Concat;
    c.features.beta = 0.3;
    c.window = 1800;
    c.split = SplitMode::All;
    const auto j = to_json(c);
    const auto back = config_from_json(j, paper_config());
    CHECK(to_json(back) == j);
    CHECK_THROWS_AS(config_from_json({{"train", {{"bogus", 1}}}}, c), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"walk", {{"beta", "high"}}}}, c), ConfigError);
}

TEST_CASE("window must be shorter than the label horizon") {
    DatasetManifest m;
    m.label_horizon = 100;
    TrainConfig c = tiny_config();
    c.window = 100;
    CHECK_THROWS_AS(c.validate_against(m), ConfigError);
}

TEST_CASE("zero learning rate leaves metrics unchanged") {
    TrainConfig c = tiny_config();
    c.lr = 0.0;
    const auto corpus = prepare_corpus(generate_synthetic(small_spec()), c);
    const auto result = train(c, corpus);
    REQUIRE(result.history.size() == 4);
    for (const auto& h : result.history) {
        CHECK(h.train_msle == result.history[0].train_msle);
        CHECK(h.validation_msle == result.history[0].validation_msle);
    }
}

TEST_CASE("training is reproducible and checkpoints round-trip") {
    const TrainConfig c = tiny_config();
    const auto data = generate_synthetic(small_spec());
    const auto corpus = prepare_corpus(data, c);
    const auto a = train(c, corpus);
    const auto b = train(c, prepare_corpus(data, c));
    CHECK(metrics_json(c, a).dump() == metrics_json(c, b).dump());

    const auto dir = temp_dir("checkpoint");
    save_checkpoint(dir / "ckpt", *a.model, c, data.users, data.manifest);
    const auto loaded = load_checkpoint(dir / "ckpt");
    CHECK(nn::pack(loaded.model->parameters()).blob == nn::pack(a.model->parameters()).blob);
    CHECK(to_json(loaded.config) == to_json(c));
    save_checkpoint(dir / "again", *loaded.model, loaded.config, loaded.users, data.manifest);
    for (const char* f : {"tensors.json", "tensors.bin", "model.json"})
        CHECK(slurp(dir / "ckpt" / f) == slurp(dir / "again" / f));

    // Resume, then zero epochs: evaluation equals the saved best.
    TrainConfig zero = c;
    zero.epochs = 0;
    TrainOptions opts;
    opts.resume = &loaded.tensors;
    const auto resumed = train(zero, corpus, opts);
    CHECK(resumed.validation.msle == a.validation.msle);
    CHECK(resumed.test.msle == a.test.msle);
    fs::remove_all(dir);
}

TEST_CASE("evaluating the training set reproduces the logged train loss") {
    TrainConfig c = tiny_config();
    c.split = SplitMode::All;
    c.epochs = 5;
    const auto corpus = prepare_corpus(generate_synthetic(small_spec()), c);
    const auto r = train(c, corpus);
    const double logged = r.history[r.best_epoch].train_msle;
    CHECK(std::abs(evaluate(*r.model, corpus.train).metrics.msle - logged) < 1e-9);
    CHECK_THROWS(evaluate(*r.model, {}));
}

TEST_CASE("training needs at least two cascades") {
    TrainConfig c = tiny_config();
    SyntheticSpec s = small_spec();
    s.num_cascades = 1;
    c.split = SplitMode::All;
    const auto corpus = prepare_corpus(generate_synthetic(s), c);
    CHECK_THROWS_AS(train(c, corpus), DataError);
}

TEST_CASE("mean-predictor baseline") {
    TrainConfig c = tiny_config();
    const auto corpus = prepare_corpus(generate_synthetic(small_spec()), c);
    const double mean = mean_target(corpus.train);
    const auto m = constant_baseline(mean, corpus.train);
    double var = 0.0;
    for (const auto& f : corpus.train) var += (f.target() - mean) * (f.target() - mean);
    CHECK(m.msle == doctest::Approx(var / static_cast<double>(corpus.train.size())));
}

TEST_CASE("predictions csv") {
    TrainConfig c = tiny_config();
    c.epochs = 0;
    const auto corpus = prepare_corpus(generate_synthetic(small_spec()), c);
    const auto r = train(c, corpus);
    const auto e = evaluate(*r.model, corpus.validation);
    const auto dir = temp_dir("csv");
    write_predictions_csv(dir / "p.csv", corpus.validation, e.predictions);
    std::ifstream in(dir / "p.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "message_id,true,predicted");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == corpus.validation.size());
    fs::remove_all(dir);
}

TEST_CASE("gradient suite passes for one seed") {
    for (const auto& r : run_gradient_suite(3)) {
        INFO(r.layer);
        CHECK(r.result.max_rel_error < kGradientTolerance);
        CHECK(r.result.checked > 0);
    }
}
