#pragma once

#include "hienet/cascade.hpp"
#include "hienet/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace hienet {

// manifest.json next to the cascade file.
struct DatasetManifest {
    std::string time_unit = "seconds";  // "seconds" | "years"
    std::int64_t label_horizon = 86400;
    nlohmann::json extra = nlohmann::json::object();  // generator statistics etc.

    nlohmann::json to_json() const;
    static DatasetManifest from_json(const nlohmann::json& j);
};

struct Dataset {
    DatasetManifest manifest;
    UserInterner users;
    std::vector<CascadeRecord> records;
};

struct LoadReport {
    std::size_t lines = 0;
    std::vector<ParseError> errors;
};

// Reads every line; malformed lines are skipped and reported.
std::vector<CascadeRecord> read_cascades(std::istream& in, UserInterner& users, LoadReport& report);

// path is either a directory holding cascades.txt + manifest.json, or a
// cascade file (a manifest.json beside it is optional). Throws DataError on
// the first malformed line unless report is supplied.
Dataset load_dataset(const std::filesystem::path& path, LoadReport* report = nullptr);
// Parses into an existing interning table (e.g. one restored from a checkpoint).
Dataset load_dataset(const std::filesystem::path& path, UserInterner users, LoadReport* report = nullptr);

void write_dataset(const Dataset& data, const std::filesystem::path& dir);

std::filesystem::path cascade_file_path(const std::filesystem::path& path);

}  // namespace hienet
