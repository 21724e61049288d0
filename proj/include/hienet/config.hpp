#pragma once

#include "hienet/cascade.hpp"
#include "hienet/dataset.hpp"
#include "hienet/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace hienet {

enum class SplitMode { Hash, All };

struct TrainConfig {
    FeatureConfig features;
    ModelConfig model;
    Seconds window = 3600;
    std::size_t epochs = 200;
    std::size_t batch_size = 16;
    double lr = 1e-4;
    std::uint64_t seed = 1;
    // Hash: 80/10/10 by message id. All: every split is the whole corpus.
    SplitMode split = SplitMode::Hash;
    std::size_t threads = 0;  // feature extraction / evaluation workers; 0 = hardware

    void validate() const;
    void validate_against(const DatasetManifest& manifest) const;
};

// Hyperparameters as published for the full-scale setting.
TrainConfig paper_config();
// Reduced widths and sampling so a 200-cascade run trains in minutes on one core.
TrainConfig desk_config();
TrainConfig preset_config(const std::string& name);

// Nested layout: {"train": {...}, "walk": {"k", "n", "beta"}, "social":
// {"alpha", "max_pairs"}, "snapshot": {"m_max", "time_bins", "pe_dim"},
// "model": {...}, "cs": {"hierarchical"}}. Keys absent from j keep the value
// in base; unknown keys are rejected.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base);
nlohmann::json to_json(const TrainConfig& c);

TrainConfig load_config_file(const std::filesystem::path& path, TrainConfig base);

std::string to_string(SplitMode m);

}  // namespace hienet
