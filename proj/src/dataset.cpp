#include "hienet/dataset.hpp"

#include <fstream>

namespace hienet {

nlohmann::json DatasetManifest::to_json() const {
    nlohmann::json j = extra;
    j["time_unit"] = time_unit;
    j["label_horizon"] = label_horizon;
    return j;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
    DatasetManifest m;
    try {
        m.time_unit = j.value("time_unit", std::string("seconds"));
        m.label_horizon = j.at("label_horizon").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("manifest: ") + e.what());
    }
    if (m.time_unit != "seconds" && m.time_unit != "years")
        throw DataError("manifest: time_unit must be \"seconds\" or \"years\", got \"" + m.time_unit + "\"");
    if (m.label_horizon <= 0) throw DataError("manifest: label_horizon must be positive");
    m.extra = j;
    m.extra.erase("time_unit");
    m.extra.erase("label_horizon");
    return m;
}

std::vector<CascadeRecord> read_cascades(std::istream& in, UserInterner& users, LoadReport& report) {
    std::vector<CascadeRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        ++report.lines;
        if (line.empty() || line == "\r") continue;
        try {
            out.push_back(parse_cascade_line(line, users, report.lines));
        } catch (const ParseError& e) {
            report.errors.push_back(e);
        }
    }
    return out;
}

std::filesystem::path cascade_file_path(const std::filesystem::path& path) {
    return std::filesystem::is_directory(path) ? path / "cascades.txt" : path;
}

Dataset load_dataset(const std::filesystem::path& path, LoadReport* report) {
    return load_dataset(path, UserInterner{}, report);
}

Dataset load_dataset(const std::filesystem::path& path, UserInterner users, LoadReport* report) {
    const auto file = cascade_file_path(path);
    std::ifstream in(file);
    if (!in) throw DataError("cannot open cascade file " + file.string());

    Dataset d;
    d.users = std::move(users);
    LoadReport local;
    LoadReport& r = report ? *report : local;
    d.records = read_cascades(in, d.users, r);
    if (!report && !r.errors.empty()) throw r.errors.front();

    const auto manifest_path = file.parent_path() / "manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        std::ifstream m(manifest_path);
        try {
            d.manifest = DatasetManifest::from_json(nlohmann::json::parse(m));
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(manifest_path.string() + ": " + e.what());
        }
    }
    return d;
}

void write_dataset(const Dataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "cascades.txt", std::ios::binary);
    for (const auto& r : data.records) out << serialize_cascade(r, data.users) << '\n';
    std::ofstream m(dir / "manifest.json", std::ios::binary);
    m << data.manifest.to_json().dump(2) << '\n';
    if (!out || !m) throw DataError("failed to write dataset to " + dir.string());
}

}  // namespace hienet
