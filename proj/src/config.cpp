#include "hienet/config.hpp"

#include <fstream>

namespace hienet {

std::string to_string(SplitMode m) { return m == SplitMode::Hash ? "hash" : "all"; }

void TrainConfig::validate() const {
    features.validate();
    model.validate();
    if (window <= 0) throw ConfigError("train.window must be positive");
    if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
    if (!(lr >= 0.0)) throw ConfigError("train.lr must be non-negative");
}

void TrainConfig::validate_against(const DatasetManifest& manifest) const {
    if (window >= manifest.label_horizon)
        throw ConfigError("observation window " + std::to_string(window) + " must be shorter than the label horizon " +
                          std::to_string(manifest.label_horizon));
}

TrainConfig paper_config() { return TrainConfig{}; }

TrainConfig desk_config() {
    TrainConfig c;
    c.features.walks = 8;
    c.features.walk_length = 8;
    c.features.m_max = 8;
    c.features.encoding = {16, 64};
    c.model.embed_dim = 16;
    c.model.d_model = 16;
    c.model.lstm_hidden = 16;
    c.model.gcn_hidden = 16;
    c.model.heads = 4;
    c.model.ff_dim = 32;
    c.batch_size = 16;
    c.lr = 3e-4;
    c.epochs = 200;
    return c;
}

TrainConfig preset_config(const std::string& name) {
    if (name == "paper") return paper_config();
    if (name == "desk") return desk_config();
    throw ConfigError("unknown preset '" + name + "' (expected paper or desk)");
}

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& section, std::initializer_list<const char*> known) {
    if (!obj.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("unknown config key '" + section + "." + key + "'");
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& section) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + section + "." + key + "' has the wrong type");
    }
}

}  // namespace

TrainConfig config_from_json(const json& j, TrainConfig c) {
    reject_unknown(j, "", {"train", "walk", "social", "snapshot", "model", "cs"});
    if (j.contains("train")) {
        const auto& t = j["train"];
        reject_unknown(t, "train", {"window", "epochs", "batch_size", "lr", "seed", "split", "threads"});
        read(t, "window", c.window, "train");
        read(t, "epochs", c.epochs, "train");
        read(t, "batch_size", c.batch_size, "train");
        read(t, "lr", c.lr, "train");
        read(t, "seed", c.seed, "train");
        read(t, "threads", c.threads, "train");
        if (t.contains("split")) {
            std::string s;
            read(t, "split", s, "train");
            if (s == "hash") c.split = SplitMode::Hash;
            else if (s == "all") c.split = SplitMode::All;
            else throw ConfigError("train.split must be 'hash' or 'all'");
        }
    }
    if (j.contains("walk")) {
        const auto& w = j["walk"];
        reject_unknown(w, "walk", {"k", "n", "beta"});
        read(w, "k", c.features.walks, "walk");
        read(w, "n", c.features.walk_length, "walk");
        read(w, "beta", c.features.beta, "walk");
    }
    if (j.contains("social")) {
        const auto& s = j["social"];
        reject_unknown(s, "social", {"alpha", "max_pairs"});
        read(s, "alpha", c.features.social_alpha, "social");
        read(s, "max_pairs", c.features.social_max_pairs, "social");
    }
    if (j.contains("snapshot")) {
        const auto& s = j["snapshot"];
        reject_unknown(s, "snapshot", {"m_max", "time_bins", "pe_dim"});
        read(s, "m_max", c.features.m_max, "snapshot");
        read(s, "time_bins", c.features.encoding.bins, "snapshot");
        read(s, "pe_dim", c.features.encoding.dim, "snapshot");
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        reject_unknown(m, "model",
                       {"embed_dim", "d_model", "lstm_hidden", "gcn_hidden", "gcn_layers", "heads", "ff_dim",
                        "mlp_sizes", "use_cs", "use_sg", "use_cg", "fusion", "embed_init_std"});
        read(m, "embed_dim", c.model.embed_dim, "model");
        read(m, "d_model", c.model.d_model, "model");
        read(m, "lstm_hidden", c.model.lstm_hidden, "model");
        read(m, "gcn_hidden", c.model.gcn_hidden, "model");
        read(m, "gcn_layers", c.model.gcn_layers, "model");
        read(m, "heads", c.model.heads, "model");
        read(m, "ff_dim", c.model.ff_dim, "model");
        read(m, "mlp_sizes", c.model.mlp_sizes, "model");
        read(m, "use_cs", c.model.use_cs, "model");
        read(m, "use_sg", c.model.use_sg, "model");
        read(m, "use_cg", c.model.use_cg, "model");
        read(m, "embed_init_std", c.model.embed_init_std, "model");
        if (m.contains("fusion")) {
            std::string f;
            read(m, "fusion", f, "model");
            c.model.fusion = fusion_mode_from_string(f);
        }
    }
    if (j.contains("cs")) {
        const auto& s = j["cs"];
        reject_unknown(s, "cs", {"hierarchical"});
        read(s, "hierarchical", c.model.cs_hierarchical, "cs");
    }
    return c;
}

json to_json(const TrainConfig& c) {
    return {
        {"train",
         {{"window", c.window},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"seed", c.seed},
          {"split", to_string(c.split)},
          {"threads", c.threads}}},
        {"walk", {{"k", c.features.walks}, {"n", c.features.walk_length}, {"beta", c.features.beta}}},
        {"social", {{"alpha", c.features.social_alpha}, {"max_pairs", c.features.social_max_pairs}}},
        {"snapshot",
         {{"m_max", c.features.m_max}, {"time_bins", c.features.encoding.bins}, {"pe_dim", c.features.encoding.dim}}},
        {"model",
         {{"embed_dim", c.model.embed_dim},
          {"d_model", c.model.d_model},
          {"lstm_hidden", c.model.lstm_hidden},
          {"gcn_hidden", c.model.gcn_hidden},
          {"gcn_layers", c.model.gcn_layers},
          {"heads", c.model.heads},
          {"ff_dim", c.model.ff_dim},
          {"mlp_sizes", c.model.mlp_sizes},
          {"use_cs", c.model.use_cs},
          {"use_sg", c.model.use_sg},
          {"use_cg", c.model.use_cg},
          {"fusion", to_string(c.model.fusion)},
          {"embed_init_std", c.model.embed_init_std}}},
        {"cs", {{"hierarchical", c.model.cs_hierarchical}}},
    };
}

TrainConfig load_config_file(const std::filesystem::path& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(j, std::move(base));
}

}  // namespace hienet
