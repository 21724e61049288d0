#pragma once

#include "hienet/cascade.hpp"
#include "hienet/nn/autodiff.hpp"
#include "hienet/nn/layers.hpp"
#include "hienet/nn/parameter.hpp"
#include "hienet/snapshot.hpp"
#include "hienet/social_path.hpp"
#include "hienet/walk_sampler.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace hienet {

enum class FusionMode { Transformer, Concat };
enum class Branch { CascadeSequence, SocialGraph, SubCascade };

std::string to_string(FusionMode mode);
FusionMode fusion_mode_from_string(const std::string& s);
std::string to_string(Branch b);  // "cs" | "sg" | "cg"
Branch branch_from_string(const std::string& s);

// Settings that shape the extracted inputs.
struct FeatureConfig {
    std::size_t walks = 100;        // K
    std::size_t walk_length = 20;   // N
    double beta = 0.8;
    double social_alpha = 0.9;
    std::size_t social_max_pairs = 16;
    std::size_t m_max = 32;
    TemporalEncoding encoding{16, 512};

    void validate() const;
};

struct ModelConfig {
    std::size_t embed_dim = 64;
    std::size_t d_model = 64;
    std::size_t lstm_hidden = 256;
    std::size_t gcn_hidden = 64;
    std::size_t gcn_layers = 2;
    std::size_t heads = 4;
    std::size_t ff_dim = 128;
    std::vector<std::size_t> mlp_sizes{128, 32};
    bool use_cs = true;
    bool use_sg = true;
    bool use_cg = true;
    FusionMode fusion = FusionMode::Transformer;
    bool cs_hierarchical = true;
    double embed_init_std = 0.1;

    bool uses(Branch b) const;
    void set_branch(Branch b, bool enabled);
    void validate() const;
};

// Embedding-table layout: row 0 is PAD, row 1 is shared by users unseen at
// training time, known user u lives at row u + 2.
struct EmbeddingVocab {
    static constexpr std::size_t kPadRow = 0;
    static constexpr std::size_t kUnknownRow = 1;
    std::size_t users = 0;

    std::size_t rows() const { return users + 2; }
    std::size_t row_of(UserIndex u) const { return u < users ? static_cast<std::size_t>(u) + 2 : kUnknownRow; }
};

inline double log_popularity(std::int64_t size) { return std::log2(static_cast<double>(size) + 1.0); }
inline double popularity_from_log(double log_value) { return std::exp2(log_value) - 1.0; }

// Everything the model reads for one cascade; built once, independent of
// model parameters.
struct CascadeFeatures {
    std::string message_id;
    std::int64_t label = 0;  // incremental popularity
    std::size_t observed = 0;
    std::vector<std::vector<std::size_t>> walk_rows;  // K x N embedding rows
    std::vector<std::size_t> social_rows;
    std::vector<double> social_weights;
    std::size_t social_pairs = 0;
    nn::Tensor node_features;                      // all observed nodes x pe_dim
    std::vector<nn::SparseMatrix> propagation;     // one per kept snapshot, over a node prefix

    double target() const { return log_popularity(label); }
};

CascadeFeatures extract_features(const CascadeRecord& record, Seconds window, const GlobalSocialGraph& global,
                                 const EmbeddingVocab& vocab, const FeatureConfig& config, std::uint64_t seed);

class HienetModel {
public:
    HienetModel(ModelConfig config, FeatureConfig features, EmbeddingVocab vocab, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    const FeatureConfig& feature_config() const { return features_; }
    const EmbeddingVocab& vocab() const { return vocab_; }
    nn::ParameterStore& parameters() { return store_; }
    const nn::ParameterStore& parameters() const { return store_; }
    const nn::Var& embeddings() const { return embedding_->var; }

    // Parameters owned by one branch encoder (the shared embedding table is
    // not included).
    std::vector<nn::Parameter*> branch_parameters(Branch b);

    nn::Var encode_cascade_sequence(const std::vector<std::vector<std::size_t>>& walk_rows) const;
    nn::Var encode_social(const CascadeFeatures& f) const;
    nn::Var encode_subcascade(const nn::Tensor& node_features, const std::vector<nn::SparseMatrix>& snapshots) const;

    // Transformer mode: [tokens..., p_CAS] through the encoder layer; returns
    // the CAS row. tokens may be given in any order.
    nn::Var fuse_tokens(const std::vector<nn::Var>& tokens) const;
    // Disabled branches are passed as undefined Vars.
    nn::Var fuse(const nn::Var& cs, const nn::Var& sg, const nn::Var& cg) const;
    nn::Var predict_raw(const nn::Var& cas_state) const;

    nn::Var forward(const CascadeFeatures& f) const;
    // Inference: log2 popularity clamped at 0.
    double predict_log(const CascadeFeatures& f) const;

private:
    nn::Var null_token(Branch b) const;

    ModelConfig config_;
    FeatureConfig features_;
    EmbeddingVocab vocab_;
    nn::ParameterStore store_;
    nn::Parameter* embedding_ = nullptr;
    nn::BiLstm inner_lstm_;
    nn::BiLstm outer_lstm_;
    nn::Linear cs_projection_;
    nn::Linear sg_projection_;
    std::vector<nn::Parameter*> gcn_weights_;
    nn::Linear cg_projection_;
    nn::Parameter* null_tokens_[3] = {};
    nn::Parameter* cas_token_ = nullptr;
    nn::TransformerEncoderLayer encoder_;
    nn::Linear concat_projection_;
    nn::Mlp mlp_;
};

// (1/N) sum (pred_i - log2(size_i + 1))^2, differentiable in the predictions.
nn::Var msle_loss(const std::vector<nn::Var>& pred_logs, const std::vector<std::int64_t>& true_sizes);

struct Metrics {
    double msle = 0.0;
    double msle_median = 0.0;
};

// Squared log2 errors: mean and lower median. pred_logs are used as given.
Metrics compute_metrics(const std::vector<double>& pred_logs, const std::vector<std::int64_t>& true_sizes);

}  // namespace hienet
