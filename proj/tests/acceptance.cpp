#include "hienet/config.hpp"
#include "hienet/gradient_suite.hpp"
#include "hienet/rng.hpp"
#include "hienet/social_path.hpp"
#include "hienet/synthetic.hpp"
#include "hienet/trainer.hpp"
#include "hienet/walk_sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

using namespace hienet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

template <class F>
void criterion(int id, const char* title, double budget_seconds, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget_seconds > 0 && secs >= budget_seconds) {
        o.pass = false;
        o.detail += "; over the " + std::to_string(static_cast<int>(budget_seconds)) + " s budget";
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s (%s) [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// Oracle for degree-smoothed sampling: (deg + beta) normalised, from an edge list.
std::map<UserIndex, double> smoothed(const std::vector<UserIndex>& candidates,
                                     const std::vector<std::pair<UserIndex, UserIndex>>& edges, double beta) {
    std::map<UserIndex, double> p;
    double total = 0.0;
    for (UserIndex c : candidates) {
        double deg = 0.0;
        for (auto [s, t] : edges) deg += (s == c);
        p[c] = deg + beta;
        total += deg + beta;
    }
    for (auto& [k, v] : p) v /= total;
    return p;
}

double tv_distance(const std::map<UserIndex, double>& a, const std::map<UserIndex, double>& b) {
    double tv = 0.0;
    for (const auto& [k, v] : a) tv += 0.5 * std::abs(v - (b.count(k) ? b.at(k) : 0.0));
    for (const auto& [k, v] : b)
        if (!a.count(k)) tv += 0.5 * v;
    return tv;
}

Outcome gradient_suite() {
    double worst = 0.0;
    std::string where;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
        for (const auto& r : run_gradient_suite(seed))
            if (r.result.max_rel_error > worst) {
                worst = r.result.max_rel_error;
                where = r.layer + " seed " + std::to_string(seed);
            }
    return {worst < kGradientTolerance, fmt("max rel err %.2e", worst) + " at " + where + ", 10 seeds"};
}

Outcome sampler_statistics() {
    // Users 0..4 in activation order; edge k targets a node activated no later than k + 1.
    const std::vector<std::pair<UserIndex, UserIndex>> edges{{0, 1}, {0, 2}, {1, 2}, {2, 3}, {1, 4}};
    CascadeGraph g(0, 100);
    for (UserIndex u = 1; u <= 4; ++u) g.add_node(u, u);
    for (auto [s, t] : edges) g.add_edge(s, t, t);
    const double beta = 0.8;
    const std::size_t draws = 100000;

    const std::vector<UserIndex> all{0, 1, 2, 3, 4};
    const auto start_oracle = smoothed(all, edges, beta);
    const auto walks = sample_walks(g, draws, 3, beta, 2024);
    std::map<UserIndex, double> start_freq;
    std::map<UserIndex, std::map<UserIndex, double>> trans_count;
    for (const auto& w : walks.walks) {
        start_freq[w[0]] += 1.0 / static_cast<double>(draws);
        for (std::size_t i = 1; i < w.size() && w[i] != kPad; ++i) trans_count[w[i - 1]][w[i]] += 1.0;
    }
    double worst = tv_distance(start_freq, start_oracle);
    std::size_t transition_draws = 0;
    for (auto& [v, counts] : trans_count) {
        std::vector<UserIndex> nbrs;
        for (auto [s, t] : edges)
            if (s == v) nbrs.push_back(t);
        double n = 0.0;
        for (auto& [k, c] : counts) n += c;
        for (auto& [k, c] : counts) c /= n;
        transition_draws += static_cast<std::size_t>(n);
        worst = std::max(worst, tv_distance(counts, smoothed(nbrs, edges, beta)));
    }

    // The three-node hand example A->B, A->C, B->C.
    const std::vector<std::pair<UserIndex, UserIndex>> tri{{0, 1}, {0, 2}, {1, 2}};
    const auto s3 = smoothed({0, 1, 2}, tri, beta);
    const auto t3 = smoothed({1, 2}, tri, beta);
    const bool hand = std::abs(s3.at(0) - 0.5185) < 1e-4 && std::abs(s3.at(1) - 0.3333) < 1e-4 &&
                      std::abs(s3.at(2) - 0.1481) < 1e-4 && std::abs(t3.at(1) - 0.6923) < 1e-4 &&
                      std::abs(t3.at(2) - 0.3077) < 1e-4;
    CascadeGraph g3(0, 100);
    g3.add_node(1, 1);
    g3.add_node(2, 2);
    for (auto [s, t] : tri) g3.add_edge(s, t, t);
    auto sd = start_distribution(g3, beta);
    auto td = transition_distribution(g3, 0, beta);
    const bool library = std::abs(sd[0] - s3.at(0)) < 1e-12 && std::abs(sd[2] - s3.at(2)) < 1e-12 &&
                         std::abs(td[0] - t3.at(1)) < 1e-12;

    return {worst < 0.01 && hand && library,
            fmt("max TV %.4f over %.0f start and %.0f transition draws", worst, static_cast<double>(draws), static_cast<double>(transition_draws)) +
                (hand ? ", hand values ok" : ", hand values WRONG") + (library ? "" : ", library mismatch")};
}

Outcome path_identities() {
    double worst_sum = 0.0;
    for (std::size_t n = 0; n <= 10; ++n)
        for (double a : {0.1, 0.5, 0.9}) {
            const auto w = path_weights(n, a);
            worst_sum = std::max(worst_sum, std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0));
        }
    Rng rng(3);
    nn::Tensor table(6, 5);
    for (auto& v : table.data()) v = uniform(rng, -2.0, 2.0);
    bool identity = true;
    for (UserIndex u = 0; u < 6; ++u)
        for (double a : {0.1, 0.5, 0.9}) {
            const auto e = path_aware_representation({{u}}, table, a);
            for (std::size_t j = 0; j < 5; ++j) identity = identity && e[j] == table(u, j);
        }
    const nn::Tensor unit = nn::Tensor::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    const auto e = path_aware_representation({{0, 1}}, unit, 0.9);
    const double err = std::max(std::abs(e[0] - 0.52632), std::abs(e[1] - 0.47368));
    return {worst_sum <= 1e-12 && identity && err < 1e-5,
            fmt("max |sum - 1| %.1e, worked example err %.1e", worst_sum, err) +
                (identity ? ", n=0 identity exact" : ", n=0 identity BROKEN")};
}

Outcome bfs_oracle() {
    Rng rng(99);
    std::size_t pairs = 0, agree = 0;
    for (int graph = 0; graph < 200; ++graph) {
        const std::size_t n = 2 + uniform_index(rng, 7);
        const double density = uniform(rng, 0.1, 0.7);
        std::vector<std::pair<UserIndex, UserIndex>> edges;
        const double inf = std::numeric_limits<double>::infinity();
        std::vector<std::vector<double>> dist(n, std::vector<double>(n, inf));
        for (std::size_t i = 0; i < n; ++i) dist[i][i] = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (uniform01(rng) < density) {
                    edges.push_back({static_cast<UserIndex>(i), static_cast<UserIndex>(j)});
                    dist[i][j] = dist[j][i] = 1.0;
                }
        std::vector<UserIndex> nodes(n);
        std::iota(nodes.begin(), nodes.end(), 0u);
        const auto g = GlobalSocialGraph::from_edges(edges, nodes);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
        for (UserIndex u = 0; u < n; ++u)
            for (UserIndex v = 0; v < n; ++v) {
                ++pairs;
                const auto p = shortest_correlation_path(g, u, v);
                bool ok;
                if (std::isinf(dist[u][v])) {
                    ok = !p.has_value();
                } else {
                    ok = p && p->users.front() == u && p->users.back() == v &&
                         static_cast<double>(p->hops()) == dist[u][v];
                    for (std::size_t i = 1; ok && i < p->users.size(); ++i)
                        ok = g.has_edge(p->users[i - 1], p->users[i]);
                }
                agree += ok;
            }
    }
    return {agree == pairs, std::to_string(agree) + "/" + std::to_string(pairs) + " pairs agree over 200 graphs"};
}

Outcome structural(const Dataset& corpus) {
    std::string notes;
    bool ok = true;

    std::size_t checked = 0;
    bool nested = true;
    for (const auto& r : corpus.records) {
        const auto g = build_cascade_graph(r, 3600);
        const auto seq = build_snapshots(g, {16, 512}, 8);
        const auto& last = seq.snapshots.back();
        nested = nested && last.nodes == g.nodes() && last.edges.size() == g.edge_count();
        for (std::size_t j = 1; j < seq.snapshots.size(); ++j) {
            const auto& a = seq.snapshots[j - 1];
            const auto& b = seq.snapshots[j];
            nested = nested && a.nodes.size() < b.nodes.size() &&
                     std::equal(a.nodes.begin(), a.nodes.end(), b.nodes.begin()) &&
                     std::equal(a.edges.begin(), a.edges.end(), b.edges.begin());
        }
        ++checked;
    }
    ok = ok && nested;
    notes += std::string("nesting ") + (nested ? "ok" : "BROKEN") + " on " + std::to_string(checked) + " cascades";

    const TemporalEncoding enc{16, 512};
    std::vector<nn::Tensor> pes;
    double unit_err = 0.0;
    for (std::size_t t = 0; t < enc.bins; ++t) {
        pes.push_back(temporal_positional_encoding(t, enc));
        for (std::size_t d = 0; d < 8; ++d)
            unit_err = std::max(unit_err, std::abs(pes[t][2 * d] * pes[t][2 * d] +
                                                   pes[t][2 * d + 1] * pes[t][2 * d + 1] - 1.0));
    }
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < pes.size(); ++a)
        for (std::size_t b = a + 1; b < pes.size(); ++b) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < 16; ++k) d2 += (pes[a][k] - pes[b][k]) * (pes[a][k] - pes[b][k]);
            min_gap = std::min(min_gap, std::sqrt(d2));
        }
    ok = ok && unit_err < 1e-12 && min_gap > 1e-6;
    notes += fmt(", PE unit err %.1e, min PE gap %.2e", unit_err, min_gap);

    const nn::Tensor a = nn::Tensor::from_rows({{0.0, 1.0}, {1.0, 0.0}});
    const auto y = nn::gcn_layer(a, nn::constant(nn::Tensor::identity(2)), nn::constant(nn::Tensor::identity(2)),
                                 nn::Activation::Linear);
    double gcn_err = 0.0;
    for (double v : y.value().data()) gcn_err = std::max(gcn_err, std::abs(v - 0.5));
    ok = ok && gcn_err < 1e-12;
    notes += fmt(", GCN err %.1e", gcn_err);

    const TrainConfig cfg = desk_config();
    HienetModel model(cfg.model, cfg.features, EmbeddingVocab{10}, 5);
    Rng rng(6);
    std::vector<nn::Var> tokens;
    for (int i = 0; i < 3; ++i) {
        nn::Tensor t(1, cfg.model.d_model);
        for (auto& v : t.data()) v = normal(rng, 0.0, 1.0);
        tokens.push_back(nn::constant(t));
    }
    const auto ref = model.fuse_tokens(tokens).value();
    std::vector<int> perm{0, 1, 2};
    double fuse_err = 0.0;
    while (std::next_permutation(perm.begin(), perm.end())) {
        const auto out = model.fuse_tokens({tokens[perm[0]], tokens[perm[1]], tokens[perm[2]]}).value();
        for (std::size_t j = 0; j < out.size(); ++j) fuse_err = std::max(fuse_err, std::abs(out[j] - ref[j]));
    }
    ok = ok && fuse_err < 1e-9;
    notes += fmt(", fusion permutation err %.1e", fuse_err);
    return {ok, notes};
}

Outcome learning(const Dataset& corpus) {
    Dataset ten;
    ten.manifest = corpus.manifest;
    ten.users = corpus.users;
    ten.records.assign(corpus.records.begin(), corpus.records.begin() + 10);
    TrainConfig overfit = desk_config();
    overfit.split = SplitMode::All;
    overfit.epochs = 500;
    const auto small = train(overfit, prepare_corpus(ten, overfit));
    double best_train = std::numeric_limits<double>::infinity();
    std::size_t reached = 0;
    for (const auto& h : small.history)
        if (h.train_msle < best_train) {
            best_train = h.train_msle;
            if (best_train < 0.05 && reached == 0) reached = h.epoch;
        }
    const bool a = best_train < 0.05;

    const TrainConfig cfg = desk_config();
    const auto full = train(cfg, prepare_corpus(corpus, cfg));
    const double epoch0 = full.history.front().validation_msle;
    const double best = full.best_validation_msle;
    const double baseline = full.baseline_validation.msle;
    const bool b = best <= 0.5 * epoch0 && best < baseline;

    return {a && b, fmt("(a) 10-cascade train MSLE %.4f", best_train) +
                        (a ? " first < 0.05 at epoch " + std::to_string(reached) : std::string(" never < 0.05")) +
                        fmt("; (b) best val %.4f vs epoch-0 %.4f, mean predictor %.4f", best, epoch0, baseline)};
}

Outcome ablation(const Dataset& corpus) {
    const auto rows = run_ablation(corpus, desk_config());
    const double full = rows.at(0).validation_msle;
    double best_other = std::numeric_limits<double>::infinity();
    std::string table;
    bool ok = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        best_other = std::min(best_other, rows[i].validation_msle);
        ok = ok && full <= 1.05 * rows[i].validation_msle;
    }
    for (const auto& r : rows) table += (table.empty() ? "" : ", ") + r.name + fmt(" %.4f", r.validation_msle);
    return {ok, table + fmt("; full / best other = %.3f (tolerance 1.05)", full / best_other)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome reproducibility(const Dataset& corpus) {
    Dataset part;
    part.manifest = corpus.manifest;
    part.users = corpus.users;
    part.records.assign(corpus.records.begin(), corpus.records.begin() + 60);
    TrainConfig cfg = desk_config();
    cfg.epochs = 5;
    const auto a = train(cfg, prepare_corpus(part, cfg));
    const auto b = train(cfg, prepare_corpus(part, cfg));
    const bool same_metrics = metrics_json(cfg, a).dump(2) == metrics_json(cfg, b).dump(2);

    const auto dir = fs::temp_directory_path() / "hienet_acceptance_ckpt";
    fs::remove_all(dir);
    save_checkpoint(dir / "first", *a.model, cfg, part.users, part.manifest);
    const auto loaded = load_checkpoint(dir / "first");
    save_checkpoint(dir / "second", *loaded.model, loaded.config, loaded.users, part.manifest);
    bool same_files = true;
    for (const char* f : {"tensors.json", "tensors.bin", "model.json"})
        same_files = same_files && slurp(dir / "first" / f) == slurp(dir / "second" / f);
    const bool same_predictions =
        evaluate(*loaded.model, prepare_corpus(part, cfg).validation).predictions ==
        evaluate(*a.model, prepare_corpus(part, cfg).validation).predictions;
    fs::remove_all(dir);
    return {same_metrics && same_files && same_predictions,
            std::string("metrics.json ") + (same_metrics ? "identical" : "DIFFERENT") + ", checkpoint files " +
                (same_files ? "byte-identical" : "DIFFERENT") + ", reloaded predictions " +
                (same_predictions ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
    const Dataset corpus = generate_synthetic(SyntheticSpec{});
    std::printf("synthetic corpus: %zu cascades, final size median %s, max %s\n", corpus.records.size(),
                corpus.manifest.extra["final_size"]["median"].dump().c_str(),
                corpus.manifest.extra["final_size"]["max"].dump().c_str());

    criterion(1, "gradient suite", 60, gradient_suite);
    criterion(2, "sampler statistics", 10, sampler_statistics);
    criterion(3, "path weight identities", 0, path_identities);
    criterion(4, "BFS vs Floyd-Warshall", 0, bfs_oracle);
    criterion(5, "structural invariants", 0, [&] { return structural(corpus); });
    criterion(6, "learning sanity", 600, [&] { return learning(corpus); });
    criterion(7, "ablation direction", 0, [&] { return ablation(corpus); });
    criterion(8, "reproducibility", 0, [&] { return reproducibility(corpus); });
    return failures == 0 ? 0 : 1;
}
