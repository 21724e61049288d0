#include "hienet/errors.hpp"
#include "hienet/model.hpp"
#include "hienet/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace hienet;
using namespace hienet::nn;

namespace {

FeatureConfig small_features() {
    FeatureConfig f;
    f.walks = 3;
    f.walk_length = 4;
    f.m_max = 4;
    f.encoding = {4, 16};
    return f;
}

ModelConfig small_model() {
    ModelConfig m;
    m.embed_dim = 4;
    m.d_model = 8;
    m.lstm_hidden = 3;
    m.gcn_hidden = 5;
    m.heads = 2;
    m.ff_dim = 6;
    m.mlp_sizes = {6, 4};
    return m;
}

struct Toy {
    UserInterner users;
    std::vector<CascadeRecord> records;
    GlobalSocialGraph global;
    EmbeddingVocab vocab;
};

Toy toy() {
    Toy t;
    t.records.push_back(parse_cascade_line("a\tu0\t0\t6\tu0:0 u0/u1:5 u0/u2:9 u0/u1/u3:20 u0/u2/u4:40", t.users));
    t.records.push_back(parse_cascade_line("b\tu3\t0\t2\tu3:0 u3/u1:7", t.users));
    t.global = build_global_graph(t.records);
    t.vocab.users = t.users.size();
    return t;
}

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t(r, c);
    for (auto& v : t.data()) v = uniform(rng, -1.0, 1.0);
    return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("config validation") {
    ModelConfig m = small_model();
    m.use_cs = m.use_sg = m.use_cg = false;
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m = small_model();
    m.mlp_sizes.clear();
    CHECK_THROWS_AS(m.validate(), ConfigError);
    CHECK(branch_from_string("sg") == Branch::SocialGraph);
    CHECK(to_string(FusionMode::Concat) == "concat");
    CHECK_THROWS_AS(branch_from_string("xx"), ConfigError);
}

TEST_CASE("log transform and clamp") {
    CHECK(popularity_from_log(3.0) == doctest::Approx(7.0));
    CHECK(log_popularity(7) == doctest::Approx(3.0));

    const auto t = toy();
    HienetModel model(small_model(), small_features(), t.vocab, 1);
    model.parameters().at("mlp.out.weight").mutable_value().fill(0.0);
    model.parameters().at("mlp.out.bias").mutable_value().fill(-0.3);
    const auto f = extract_features(t.records[0], 100, t.global, t.vocab, small_features(), 1);
    CHECK(model.forward(f).item() == doctest::Approx(-0.3).epsilon(1e-14));
    CHECK(model.predict_log(f) == 0.0);
}

TEST_CASE("zero weights predict the final bias") {
    const auto t = toy();
    HienetModel model(small_model(), small_features(), t.vocab, 2);
    for (auto* p : model.parameters().all())
        if (p->name.rfind("mlp.", 0) == 0) p->mutable_value().fill(0.0);
    model.parameters().at("mlp.out.bias").mutable_value().fill(1.25);
    const auto f = extract_features(t.records[0], 100, t.global, t.vocab, small_features(), 1);
    CHECK(model.forward(f).item() == 1.25);
}

TEST_CASE("cascade sequence with zero embeddings and weights returns the projection bias") {
    const auto t = toy();
    HienetModel model(small_model(), small_features(), t.vocab, 3);
    for (auto* p : model.parameters().all())
        if (p->name == "embedding.users" || p->name.rfind("cs.", 0) == 0) p->mutable_value().fill(0.0);
    Rng rng(4);
    model.parameters().at("cs.projection.bias").mutable_value() = random_tensor(1, 8, rng);
    const auto f = extract_features(t.records[0], 100, t.global, t.vocab, small_features(), 1);
    CHECK(model.encode_cascade_sequence(f.walk_rows).value() == model.parameters().at("cs.projection.bias").value());
}

TEST_CASE("a single walk still yields a d_model vector") {
    const auto t = toy();
    HienetModel model(small_model(), small_features(), t.vocab, 5);
    const auto out = model.encode_cascade_sequence({{2, 3, 0, 0}});
    CHECK(out.rows() == 1);
    CHECK(out.cols() == 8);
}

TEST_CASE("sub-cascade encoder") {
    const auto t = toy();
    HienetModel model(small_model(), small_features(), t.vocab, 6);
    const TemporalEncoding enc{4, 16};

    const Tensor root = temporal_positional_encoding(0, enc);
    const auto one = model.encode_subcascade(root, {gcn_propagation(1, {})});
    CHECK(one.cols() == 8);

    const auto f = extract_features(t.records[0], 100, t.global, t.vocab, small_features(), 1);
    const auto& last = f.propagation.back();
    const auto single = model.encode_subcascade(f.node_features, {last});
    const auto twice = model.encode_subcascade(f.node_features, {last, last});
    CHECK(max_abs_diff(single.value(), twice.value()) < 1e-12);
}

TEST_CASE("sub-cascade encoder ignores node order") {
    const auto t = toy();
    HienetModel model(small_model(), small_features(), t.vocab, 7);
    Rng rng(8);
    const std::size_t n = 5;
    const Tensor h = random_tensor(n, 4, rng);
    const std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 1}, {0, 2}, {1, 3}, {2, 4}};
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};  // new index of old node i

    Tensor hp(n, 4);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < 4; ++j) hp(perm[i], j) = h(i, j);
    std::vector<std::pair<std::size_t, std::size_t>> ep;
    for (auto [s, d] : edges) ep.push_back({perm[s], perm[d]});

    const auto a = model.encode_subcascade(h, {gcn_propagation(n, edges)});
    const auto b = model.encode_subcascade(hp, {gcn_propagation(n, ep)});
    CHECK(max_abs_diff(a.value(), b.value()) < 1e-12);
}

TEST_CASE("transformer fusion is invariant to token order") {
    const auto t = toy();
    HienetModel model(small_model(), small_features(), t.vocab, 9);
    Rng rng(10);
    const Var a = constant(random_tensor(1, 8, rng));
    const Var b = constant(random_tensor(1, 8, rng));
    const Var c = constant(random_tensor(1, 8, rng));
    const auto ref = model.fuse_tokens({a, b, c}).value();
    for (const auto& order : std::vector<std::vector<Var>>{{a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}})
        CHECK(max_abs_diff(model.fuse_tokens(order).value(), ref) < 1e-9);
}

TEST_CASE("transformer fusion with all tokens equal") {
    const auto t = toy();
    HienetModel model(small_model(), small_features(), t.vocab, 11);
    const Var cas = constant(model.parameters().at("fusion.cas").value());
    const auto alone = model.fuse_tokens({});
    const auto equal = model.fuse_tokens({cas, cas, cas});
    CHECK(max_abs_diff(alone.value(), equal.value()) < 1e-12);
}

TEST_CASE("concat fusion with one branch is a linear map of it") {
    const auto t = toy();
    ModelConfig cfg = small_model();
    cfg.fusion = FusionMode::Concat;
    cfg.use_sg = cfg.use_cg = false;
    HienetModel model(cfg, small_features(), t.vocab, 12);
    Rng rng(13);
    const Tensor x = random_tensor(1, 8, rng);
    const auto& w = model.parameters().at("fusion.concat.weight").value();
    const auto& bias = model.parameters().at("fusion.concat.bias").value();
    REQUIRE(w.rows() == 8);
    const auto y = model.fuse(constant(x), {}, {}).value();
    for (std::size_t j = 0; j < 8; ++j) {
        double expected = bias[j];
        for (std::size_t i = 0; i < 8; ++i) expected += x[i] * w(i, j);
        CHECK(y[j] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("embedding gradient touches only the rows the cascade reads") {
    const auto t = toy();
    HienetModel model(small_model(), small_features(), t.vocab, 14);
    const auto f = extract_features(t.records[1], 100, t.global, t.vocab, small_features(), 1);
    backward(model.forward(f));
    std::set<std::size_t> used(f.social_rows.begin(), f.social_rows.end());
    for (const auto& w : f.walk_rows) used.insert(w.begin(), w.end());
    const auto& g = model.parameters().at("embedding.users").grad();
    REQUIRE(!g.empty());
    bool any = false;
    for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) {
            if (!used.count(r)) CHECK(g(r, c) == 0.0);
            any = any || g(r, c) != 0.0;
        }
    CHECK(any);
}

TEST_CASE("disabled branches receive no gradient") {
    const auto t = toy();
    for (Branch off : {Branch::CascadeSequence, Branch::SocialGraph, Branch::SubCascade}) {
        ModelConfig cfg = small_model();
        cfg.set_branch(off, false);
        HienetModel model(cfg, small_features(), t.vocab, 15);
        const auto f = extract_features(t.records[0], 100, t.global, t.vocab, small_features(), 1);
        backward(model.forward(f));
        for (auto* p : model.branch_parameters(off))
            for (double v : p->grad().data()) CHECK(v == 0.0);
        for (Branch on : {Branch::CascadeSequence, Branch::SocialGraph, Branch::SubCascade}) {
            if (on == off) continue;
            double total = 0.0;
            for (auto* p : model.branch_parameters(on))
                for (double v : p->grad().data()) total += std::abs(v);
            CHECK(total > 0.0);
        }
    }
}

TEST_CASE("msle loss") {
    CHECK(msle_loss({constant(Tensor(1, 1, 3.0))}, {3}).item() == doctest::Approx(1.0));
    CHECK(msle_loss({constant(Tensor(1, 1, 3.0)), constant(Tensor(1, 1, 1.0))}, {7, 1}).item() == 0.0);
    CHECK_THROWS(msle_loss({constant(Tensor(1, 1, 0.0))}, {1, 2}));
}

TEST_CASE("metrics") {
    const auto m = compute_metrics({0.0, 1.0, 2.0}, {0, 0, 0});
    CHECK(m.msle == doctest::Approx(5.0 / 3.0));
    CHECK(m.msle_median == doctest::Approx(1.0));
    const auto perfect = compute_metrics({3.0, 1.0}, {7, 1});
    CHECK(perfect.msle == 0.0);
    CHECK(perfect.msle_median == 0.0);
    const auto single = compute_metrics({2.0}, {1});
    CHECK(single.msle == single.msle_median);
    CHECK_THROWS(compute_metrics({1.0}, {1, 2}));
}

TEST_CASE("feature extraction is deterministic and sized by the config") {
    const auto t = toy();
    const auto a = extract_features(t.records[0], 100, t.global, t.vocab, small_features(), 5);
    const auto b = extract_features(t.records[0], 100, t.global, t.vocab, small_features(), 5);
    CHECK(a.walk_rows == b.walk_rows);
    CHECK(a.walk_rows.size() == 3);
    CHECK(a.walk_rows[0].size() == 4);
    CHECK(a.label == 2);
    CHECK(a.observed == 4);
    CHECK(a.propagation.size() == 4);
    CHECK(a.node_features.rows() == 5);
}
