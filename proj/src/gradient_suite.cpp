#include "hienet/gradient_suite.hpp"

#include "hienet/model.hpp"
#include "hienet/nn/layers.hpp"
#include "hienet/rng.hpp"

namespace hienet {

namespace {

using nn::Tensor;
using nn::Var;

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    Tensor t(r, c);
    for (double& v : t.data()) v = uniform(rng, -scale, scale);
    return t;
}

// Fixed random projection to a scalar so every output entry matters.
Var project(const Var& y, const Tensor& weights) { return nn::sum_all(nn::mul(y, nn::constant(weights))); }

std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) { return lo + uniform_index(rng, hi - lo + 1); }

GradientReport check(std::string layer, const std::function<Var()>& f, std::vector<nn::GradCheckInput> inputs) {
    return {std::move(layer), nn::check_gradients(f, inputs)};
}

CascadeRecord toy_record(const std::string& id, UserInterner& users, const std::string& paths) {
    return parse_cascade_line(id + "\ta\t0\t9\t" + paths, users);
}

}  // namespace

std::vector<GradientReport> run_gradient_suite(std::uint64_t seed) {
    Rng rng(splitmix64(seed));
    std::vector<GradientReport> out;

    const std::size_t n = dim(rng, 2, 4), k = dim(rng, 2, 4), m = dim(rng, 1, 3);
    auto a = nn::variable(random_tensor(n, k, rng));
    auto b = nn::variable(random_tensor(k, m, rng));
    auto c = nn::variable(random_tensor(n, k, rng));
    auto wnk = random_tensor(n, k, rng);
    auto wnm = random_tensor(n, m, rng);

    out.push_back(check("matmul", [&] { return project(nn::matmul(a, b), wnm); }, {{"a", a}, {"b", b}}));
    out.push_back(check("add", [&] { return project(nn::add(a, c), wnk); }, {{"a", a}, {"c", c}}));
    out.push_back(check("multiply", [&] { return project(nn::mul(a, c), wnk); }, {{"a", a}, {"c", c}}));
    {
        auto wcat = random_tensor(n, 2 * k, rng);
        out.push_back(check("concat", [&] { return project(nn::concat_cols({a, c}), wcat); }, {{"a", a}, {"c", c}}));
    }
    {
        auto ws = random_tensor(n, 1, rng);
        out.push_back(check("slice", [&] { return project(nn::slice_cols(a, k - 1, 1), ws); }, {{"a", a}}));
    }
    out.push_back(check("softmax", [&] { return project(nn::softmax_rows(a), wnk); }, {{"a", a}}));
    out.push_back(check("sigmoid", [&] { return project(nn::sigmoid(a), wnk); }, {{"a", a}}));
    out.push_back(check("tanh", [&] { return project(nn::tanh(a), wnk); }, {{"a", a}}));
    out.push_back(check("relu", [&] { return project(nn::relu(a), wnk); }, {{"a", a}}));
    {
        auto wm = random_tensor(1, k, rng);
        out.push_back(check("mean", [&] { return project(nn::mean_rows(a), wm); }, {{"a", a}}));
    }
    {
        auto gain = nn::variable(random_tensor(1, k, rng));
        out.push_back(check("layer_norm",
                            [&] { return project(nn::mul_row(nn::normalize_rows(a), gain), wnk); },
                            {{"a", a}, {"gain", gain}}));
    }
    {
        auto table = nn::variable(random_tensor(5, 3, rng));
        const std::vector<std::size_t> idx{0, 3, 3, 4};
        auto w = random_tensor(4, 3, rng);
        out.push_back(check("embedding", [&] { return project(nn::gather_rows(table, idx), w); }, {{"table", table}}));
    }

    {
        auto table = nn::variable(random_tensor(5, 3, rng));
        auto w = random_tensor(1, 3, rng);
        out.push_back(check("weighted_row_sum",
                            [&] { return project(nn::weighted_row_sum(table, {1, 4, 1}, {0.2, 0.5, 0.3}), w); },
                            {{"table", table}}));
    }
    {
        auto sparse = nn::SparseMatrix::from_dense(random_tensor(3, n, rng));
        auto w = random_tensor(3, k, rng);
        out.push_back(check("spmm", [&] { return project(nn::spmm(sparse, a), w); }, {{"a", a}}));
    }
    {
        auto wt = random_tensor(k, n, rng);
        auto col = nn::variable(random_tensor(n, 1, rng));
        out.push_back(check("transpose", [&] { return project(nn::transpose(a), wt); }, {{"a", a}}));
        out.push_back(check("mul_col", [&] { return project(nn::mul_col(a, col), wnk); }, {{"a", a}, {"col", col}}));
    }
    {
        const std::size_t in = dim(rng, 2, 3), hidden = dim(rng, 2, 3), steps = 3, batch = 2;
        nn::ParameterStore store;
        auto lstm = nn::BiLstm::create(store, "lstm", in, hidden, rng);
        std::vector<Var> xs;
        std::vector<Tensor> masks;
        for (std::size_t t = 0; t < steps; ++t) {
            xs.push_back(nn::constant(random_tensor(batch, in, rng)));
            Tensor mk(batch, 1, 1.0);
            if (t == steps - 1) mk[1] = 0.0;  // second row pads its last step
            masks.push_back(mk);
        }
        auto w = random_tensor(batch, 2 * hidden, rng);
        std::vector<nn::GradCheckInput> params;
        for (auto* p : store.all()) params.push_back({p->name, p->var});
        out.push_back(check("bilstm", [&] { return project(lstm(xs, masks).final_concat(), w); }, params));
    }
    {
        const std::size_t nodes = dim(rng, 2, 5), f = dim(rng, 2, 3), g = dim(rng, 2, 3);
        Tensor adj(nodes, nodes);
        for (std::size_t i = 1; i < nodes; ++i) adj(uniform_index(rng, i), i) = 1.0;
        auto h = nn::variable(random_tensor(nodes, f, rng));
        auto w1 = nn::variable(random_tensor(f, g, rng));
        auto w2 = nn::variable(random_tensor(g, g, rng));
        auto wout = random_tensor(nodes, g, rng);
        out.push_back(check("gcn",
                            [&] {
                                auto h1 = nn::gcn_layer(adj, h, w1, nn::Activation::Relu);
                                return project(nn::gcn_layer(adj, h1, w2, nn::Activation::Linear), wout);
                            },
                            {{"features", h}, {"w1", w1}, {"w2", w2}}));
    }
    {
        const std::size_t tokens = 4, d = 8, heads = 2;
        nn::ParameterStore store;
        auto layer = nn::TransformerEncoderLayer::create(store, "attn", d, heads, 2 * d, rng);
        auto x = nn::variable(random_tensor(tokens, d, rng));
        auto w = random_tensor(tokens, d, rng);
        std::vector<nn::GradCheckInput> params{{"tokens", x}};
        for (auto* p : store.all()) params.push_back({p->name, p->var});
        out.push_back(check("attention", [&] { return project(layer(x), w); }, params));
    }
    {
        UserInterner users;
        std::vector<CascadeRecord> records{
            toy_record("t1", users, "a:0 a/b:10 a/c:20 a/b/d:30"),
            toy_record("t2", users, "a:0 a/e:5 a/e/b:15"),
            toy_record("t3", users, "a:0 a/c:40 a/c/f:50 a/c/g:55 a/c/f/h:70"),
        };
        const auto global = build_global_graph(records);
        FeatureConfig fc;
        fc.walks = 2;
        fc.walk_length = 3;
        fc.m_max = 3;
        fc.social_max_pairs = 3;
        fc.encoding = {4, 8};
        ModelConfig mc;
        mc.embed_dim = 3;
        mc.d_model = 4;
        mc.lstm_hidden = 2;
        mc.gcn_hidden = 3;
        mc.heads = 2;
        mc.ff_dim = 4;
        mc.mlp_sizes = {4, 3};
        mc.embed_init_std = 0.5;
        const EmbeddingVocab vocab{users.size()};
        HienetModel model(mc, fc, vocab, seed);
        // Zero-initialised biases would leave some relu inputs exactly on the kink.
        for (auto* p : model.parameters().all())
            if (p->name.size() >= 4 && p->name.compare(p->name.size() - 4, 4, "bias") == 0)
                for (auto& v : p->mutable_value().data()) v = uniform(rng, -0.5, 0.5);
        std::vector<CascadeFeatures> feats;
        for (const auto& r : records) feats.push_back(extract_features(r, 100, global, vocab, fc, seed));
        auto loss = [&] {
            std::vector<Var> preds;
            std::vector<std::int64_t> sizes;
            for (const auto& f : feats) {
                preds.push_back(model.forward(f));
                sizes.push_back(f.label);
            }
            return msle_loss(preds, sizes);
        };
        std::vector<nn::GradCheckInput> params;
        for (auto* p : model.parameters().all()) params.push_back({p->name, p->var});
        out.push_back(check("end_to_end", loss, params));
    }
    return out;
}

}  // namespace hienet
