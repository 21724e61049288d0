#include "hienet/model.hpp"

#include "hienet/errors.hpp"
#include "hienet/rng.hpp"

#include <algorithm>
#include <cmath>

namespace hienet {

std::string to_string(FusionMode mode) { return mode == FusionMode::Transformer ? "transformer" : "concat"; }

FusionMode fusion_mode_from_string(const std::string& s) {
    if (s == "transformer") return FusionMode::Transformer;
    if (s == "concat") return FusionMode::Concat;
    throw ConfigError("fusion must be 'transformer' or 'concat', got '" + s + "'");
}

std::string to_string(Branch b) {
    switch (b) {
        case Branch::CascadeSequence: return "cs";
        case Branch::SocialGraph: return "sg";
        case Branch::SubCascade: return "cg";
    }
    return "?";
}

Branch branch_from_string(const std::string& s) {
    if (s == "cs") return Branch::CascadeSequence;
    if (s == "sg") return Branch::SocialGraph;
    if (s == "cg") return Branch::SubCascade;
    throw ConfigError("branch must be one of cs, sg, cg; got '" + s + "'");
}

void FeatureConfig::validate() const {
    if (walks == 0 || walk_length == 0) throw ConfigError("walk.k and walk.n must be at least 1");
    if (!(beta > 0.0)) throw ConfigError("walk.beta must be positive");
    if (!(social_alpha > 0.0 && social_alpha < 1.0)) throw ConfigError("social.alpha must lie in (0, 1)");
    if (social_max_pairs == 0) throw ConfigError("social.max_pairs must be at least 1");
    if (m_max == 0) throw ConfigError("snapshot.m_max must be at least 1");
    encoding.validate();
}

bool ModelConfig::uses(Branch b) const {
    switch (b) {
        case Branch::CascadeSequence: return use_cs;
        case Branch::SocialGraph: return use_sg;
        case Branch::SubCascade: return use_cg;
    }
    return false;
}

void ModelConfig::set_branch(Branch b, bool enabled) {
    switch (b) {
        case Branch::CascadeSequence: use_cs = enabled; break;
        case Branch::SocialGraph: use_sg = enabled; break;
        case Branch::SubCascade: use_cg = enabled; break;
    }
}

void ModelConfig::validate() const {
    if (!use_cs && !use_sg && !use_cg) throw ConfigError("at least one branch (cs, sg, cg) must be enabled");
    if (mlp_sizes.empty()) throw ConfigError("model.mlp_sizes must not be empty");
    if (embed_dim == 0 || d_model == 0 || lstm_hidden == 0 || gcn_hidden == 0 || ff_dim == 0)
        throw ConfigError("model widths must be positive");
    if (gcn_layers == 0) throw ConfigError("model.gcn_layers must be at least 1");
    if (fusion == FusionMode::Transformer && (heads == 0 || d_model % heads != 0))
        throw ConfigError("model.d_model (" + std::to_string(d_model) + ") must be divisible by model.heads (" +
                          std::to_string(heads) + ")");
}

CascadeFeatures extract_features(const CascadeRecord& record, Seconds window, const GlobalSocialGraph& global,
                                 const EmbeddingVocab& vocab, const FeatureConfig& config, std::uint64_t seed) {
    config.validate();
    const CascadeGraph graph = build_cascade_graph(record, window);

    CascadeFeatures f;
    f.message_id = record.message_id;
    f.label = compute_label(record, window);
    f.observed = graph.node_count() - 1;

    const WalkBatch walks =
        sample_walks(graph, config.walks, config.walk_length, config.beta, mix_seed(seed, record.message_id));
    f.walk_rows.reserve(walks.walks.size());
    for (const auto& walk : walks.walks) {
        std::vector<std::size_t> rows(walk.size());
        std::transform(walk.begin(), walk.end(), rows.begin(), [&](UserIndex u) {
            return u == kPad ? EmbeddingVocab::kPadRow : vocab.row_of(u);
        });
        f.walk_rows.push_back(std::move(rows));
    }

    const SocialPooling pooling = social_pooling(graph, global, config.social_alpha, config.social_max_pairs);
    for (auto u : pooling.users) f.social_rows.push_back(vocab.row_of(u));
    f.social_weights = pooling.weights;
    f.social_pairs = pooling.pair_count;

    const SnapshotSequence seq = build_snapshots(graph, config.encoding, config.m_max);
    const Snapshot& last = seq.snapshots.back();
    f.node_features = snapshot_feature_matrix(last, config.encoding).features;
    for (const auto& s : seq.snapshots) f.propagation.push_back(nn::gcn_propagation(s.nodes.size(), s.edges));
    return f;
}

HienetModel::HienetModel(ModelConfig config, FeatureConfig features, EmbeddingVocab vocab, std::uint64_t seed)
    : config_(std::move(config)), features_(std::move(features)), vocab_(vocab) {
    config_.validate();
    features_.validate();
    Rng rng(splitmix64(seed));
    const std::size_t E = config_.embed_dim, H = config_.lstm_hidden, d = config_.d_model;

    embedding_ = &store_.add_normal("embedding.users", vocab_.rows(), E, config_.embed_init_std, rng);

    inner_lstm_ = nn::BiLstm::create(store_, "cs.inner", E, H, rng);
    if (config_.cs_hierarchical) outer_lstm_ = nn::BiLstm::create(store_, "cs.outer", 2 * H, H, rng);
    cs_projection_ = nn::Linear::create(store_, "cs.projection", 2 * H, d, rng);

    sg_projection_ = nn::Linear::create(store_, "sg.projection", E, d, rng);

    std::size_t width = features_.encoding.dim;
    for (std::size_t l = 0; l < config_.gcn_layers; ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(width + config_.gcn_hidden));
        gcn_weights_.push_back(
            &store_.add_uniform("cg.gcn." + std::to_string(l), width, config_.gcn_hidden, bound, rng));
        width = config_.gcn_hidden;
    }
    cg_projection_ = nn::Linear::create(store_, "cg.projection", config_.gcn_hidden, d, rng);

    for (Branch b : {Branch::CascadeSequence, Branch::SocialGraph, Branch::SubCascade})
        null_tokens_[static_cast<int>(b)] = &store_.add_normal("fusion.null." + to_string(b), 1, d, 0.1, rng);

    if (config_.fusion == FusionMode::Transformer) {
        cas_token_ = &store_.add_normal("fusion.cas", 1, d, 0.1, rng);
        encoder_ = nn::TransformerEncoderLayer::create(store_, "fusion.encoder", d, config_.heads, config_.ff_dim, rng);
    } else {
        const std::size_t enabled = static_cast<std::size_t>(config_.use_cs) + config_.use_sg + config_.use_cg;
        concat_projection_ = nn::Linear::create(store_, "fusion.concat", enabled * d, d, rng);
    }

    mlp_ = nn::Mlp::create(store_, "mlp", d, config_.mlp_sizes, 1, rng);
}

std::vector<nn::Parameter*> HienetModel::branch_parameters(Branch b) {
    const std::string prefix = to_string(b) + ".";
    std::vector<nn::Parameter*> out;
    for (auto* p : store_.all())
        if (p->name.rfind(prefix, 0) == 0) out.push_back(p);
    return out;
}

nn::Var HienetModel::encode_cascade_sequence(const std::vector<std::vector<std::size_t>>& walk_rows) const {
    if (walk_rows.empty() || walk_rows[0].empty()) throw ShapeError("cascade sequence: no walks");
    const std::size_t K = walk_rows.size();
    const std::size_t N = walk_rows[0].size();

    std::vector<nn::Var> steps;
    std::vector<nn::Tensor> masks;
    steps.reserve(N);
    masks.reserve(N);
    std::vector<std::size_t> rows(K);
    for (std::size_t t = 0; t < N; ++t) {
        nn::Tensor mask(K, 1);
        for (std::size_t k = 0; k < K; ++k) {
            if (walk_rows[k].size() != N) throw ShapeError("cascade sequence: walks of unequal length");
            rows[k] = walk_rows[k][t];
            mask[k] = rows[k] == EmbeddingVocab::kPadRow ? 0.0 : 1.0;
        }
        steps.push_back(nn::gather_rows(embedding_->var, rows));
        masks.push_back(std::move(mask));
    }
    const nn::Var per_walk = inner_lstm_(steps, masks).final_concat();  // K x 2H

    if (!config_.cs_hierarchical) return cs_projection_(nn::mean_rows(per_walk));

    std::vector<nn::Var> walk_tokens;
    walk_tokens.reserve(K);
    for (std::size_t k = 0; k < K; ++k) walk_tokens.push_back(nn::slice_rows(per_walk, k, 1));
    return cs_projection_(outer_lstm_(walk_tokens).final_concat());
}

nn::Var HienetModel::encode_social(const CascadeFeatures& f) const {
    return sg_projection_(nn::weighted_row_sum(embedding_->var, f.social_rows, f.social_weights));
}

nn::Var HienetModel::encode_subcascade(const nn::Tensor& node_features,
                                       const std::vector<nn::SparseMatrix>& snapshots) const {
    if (snapshots.empty()) throw ShapeError("sub-cascade: no snapshots");
    // The first layer's feature transform is shared by every snapshot, since
    // each snapshot is a prefix of the same node ordering.
    const nn::Var projected = nn::matmul(nn::constant(node_features), gcn_weights_[0]->var);
    std::vector<nn::Var> pooled;
    pooled.reserve(snapshots.size());
    for (const auto& p : snapshots) {
        nn::Var h = nn::spmm(p, nn::slice_rows(projected, 0, p.rows));
        for (std::size_t l = 1; l < gcn_weights_.size(); ++l)
            h = nn::gcn_propagate(p, nn::relu(h), gcn_weights_[l]->var, nn::Activation::Linear);
        pooled.push_back(nn::mean_rows(h));
    }
    return cg_projection_(nn::mean_rows(nn::concat_rows(pooled)));
}

nn::Var HienetModel::null_token(Branch b) const { return null_tokens_[static_cast<int>(b)]->var; }

nn::Var HienetModel::fuse_tokens(const std::vector<nn::Var>& tokens) const {
    if (config_.fusion != FusionMode::Transformer) throw ConfigError("fuse_tokens requires transformer fusion");
    std::vector<nn::Var> all = tokens;
    all.push_back(cas_token_->var);
    const nn::Var out = encoder_(nn::concat_rows(all));
    return nn::slice_rows(out, all.size() - 1, 1);
}

nn::Var HienetModel::fuse(const nn::Var& cs, const nn::Var& sg, const nn::Var& cg) const {
    const std::pair<Branch, const nn::Var*> branches[] = {
        {Branch::CascadeSequence, &cs}, {Branch::SocialGraph, &sg}, {Branch::SubCascade, &cg}};
    if (config_.fusion == FusionMode::Transformer) {
        std::vector<nn::Var> tokens;
        for (auto [b, v] : branches) tokens.push_back(config_.uses(b) ? *v : null_token(b));
        return fuse_tokens(tokens);
    }
    std::vector<nn::Var> parts;
    for (auto [b, v] : branches)
        if (config_.uses(b)) parts.push_back(*v);
    return concat_projection_(parts.size() == 1 ? parts[0] : nn::concat_cols(parts));
}

nn::Var HienetModel::predict_raw(const nn::Var& cas_state) const { return mlp_(cas_state); }

nn::Var HienetModel::forward(const CascadeFeatures& f) const {
    nn::Var cs, sg, cg;
    if (config_.use_cs) cs = encode_cascade_sequence(f.walk_rows);
    if (config_.use_sg) sg = encode_social(f);
    if (config_.use_cg) cg = encode_subcascade(f.node_features, f.propagation);
    return predict_raw(fuse(cs, sg, cg));
}

double HienetModel::predict_log(const CascadeFeatures& f) const { return std::max(0.0, forward(f).item()); }

nn::Var msle_loss(const std::vector<nn::Var>& pred_logs, const std::vector<std::int64_t>& true_sizes) {
    if (pred_logs.size() != true_sizes.size())
        throw ShapeError("msle_loss: " + std::to_string(pred_logs.size()) + " predictions for " +
                         std::to_string(true_sizes.size()) + " targets");
    if (pred_logs.empty()) throw ShapeError("msle_loss: empty batch");
    nn::Tensor targets(true_sizes.size(), 1);
    for (std::size_t i = 0; i < true_sizes.size(); ++i) targets[i] = log_popularity(true_sizes[i]);
    return nn::mean_all(nn::square(nn::sub(nn::concat_rows(pred_logs), nn::constant(std::move(targets)))));
}

Metrics compute_metrics(const std::vector<double>& pred_logs, const std::vector<std::int64_t>& true_sizes) {
    if (pred_logs.size() != true_sizes.size()) throw ShapeError("metrics: prediction/target length mismatch");
    if (pred_logs.empty()) throw DataError("metrics: no examples");
    std::vector<double> err(pred_logs.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        const double d = pred_logs[i] - log_popularity(true_sizes[i]);
        err[i] = d * d;
        sum += err[i];
    }
    std::sort(err.begin(), err.end());
    return {sum / static_cast<double>(err.size()), err[(err.size() - 1) / 2]};
}

}  // namespace hienet
