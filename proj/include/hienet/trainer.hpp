#pragma once

#include "hienet/config.hpp"
#include "hienet/dataset.hpp"
#include "hienet/model.hpp"
#include "hienet/nn/archive.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace hienet {

enum class SplitPart { Train, Validation, Test };

// 80/10/10 on a stable hash of the message id.
SplitPart split_of(const std::string& message_id);

struct PreparedCorpus {
    EmbeddingVocab vocab;
    GlobalSocialGraph global;
    std::vector<CascadeFeatures> train;
    std::vector<CascadeFeatures> validation;
    std::vector<CascadeFeatures> test;
};

// Builds the social graph from the observed (windowed) part of every record
// and extracts features in parallel. vocab_users fixes the embedding vocabulary
// (users with a larger id share the unknown row); by default every user in
// data.users is known.
PreparedCorpus prepare_corpus(const Dataset& data, const TrainConfig& config,
                              std::optional<std::size_t> vocab_users = std::nullopt);

std::vector<CascadeFeatures> extract_all(const std::vector<const CascadeRecord*>& records, Seconds window,
                                         const GlobalSocialGraph& global, const EmbeddingVocab& vocab,
                                         const FeatureConfig& features, std::uint64_t seed, std::size_t threads);

struct Evaluation {
    std::vector<double> predictions;  // clamped log2 popularity
    Metrics metrics;
};

// Frozen-weight inference; predictions run on up to threads workers.
Evaluation evaluate(const HienetModel& model, const std::vector<CascadeFeatures>& data, std::size_t threads = 1);

// Constant predictor at mean_log.
Metrics constant_baseline(double mean_log, const std::vector<CascadeFeatures>& data);
double mean_target(const std::vector<CascadeFeatures>& data);

struct EpochLog {
    std::size_t epoch = 0;  // 0 is before any update
    double train_msle = 0.0;
    double validation_msle = 0.0;
    double validation_msle_median = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> history;
    std::size_t best_epoch = 0;
    double best_validation_msle = 0.0;
    Metrics validation;  // best checkpoint
    Metrics test;        // best checkpoint
    double baseline_mean_log = 0.0;
    Metrics baseline_validation;
    Metrics baseline_test;
    std::unique_ptr<HienetModel> model;  // restored to the best epoch
};

struct TrainOptions {
    const nn::TensorArchive* resume = nullptr;
    std::function<void(const EpochLog&)> on_epoch;
};

TrainResult train(const TrainConfig& config, const PreparedCorpus& corpus, const TrainOptions& options = {});

nlohmann::json metrics_json(const TrainConfig& config, const TrainResult& result);

// Checkpoint directory: tensors.json + tensors.bin (parameter archive) and
// model.json (config echo, user interning table, dataset time unit).
void save_checkpoint(const std::filesystem::path& dir, const HienetModel& model, const TrainConfig& config,
                     const UserInterner& users, const DatasetManifest& manifest);

struct LoadedCheckpoint {
    TrainConfig config;
    UserInterner users;
    std::size_t vocab_users = 0;
    std::string time_unit;
    std::int64_t label_horizon = 0;
    nn::TensorArchive tensors;
    std::unique_ptr<HienetModel> model;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

// Per-cascade output rows: message_id,true,predicted (popularity counts).
void write_predictions_csv(const std::filesystem::path& path, const std::vector<CascadeFeatures>& data,
                           const std::vector<double>& predictions);

struct AblationRow {
    std::string name;
    TrainConfig config;
    double validation_msle = 0.0;
    double validation_msle_median = 0.0;
    double test_msle = 0.0;
    double test_msle_median = 0.0;
};

// Full model, each branch disabled in turn, and concat fusion.
std::vector<AblationRow> run_ablation(const Dataset& data, const TrainConfig& base,
                                      const std::function<void(const AblationRow&)>& on_row = {});
std::string ablation_markdown(const std::vector<AblationRow>& rows);

}  // namespace hienet
