#pragma once

#include "hienet/nn/parameter.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace hienet::nn {

// Parameter serialisation: a JSON manifest [{name, shape, dtype: "f64", offset}]
// plus one blob of little-endian doubles. offset is in bytes.
struct TensorArchive {
    nlohmann::json manifest = nlohmann::json::array();
    std::string blob;
};

TensorArchive pack(const ParameterStore& store);
// Names and shapes must match the store exactly.
void unpack(ParameterStore& store, const TensorArchive& archive);

void write_archive(const TensorArchive& archive, const std::filesystem::path& manifest_path,
                   const std::filesystem::path& blob_path);
TensorArchive read_archive(const std::filesystem::path& manifest_path, const std::filesystem::path& blob_path);

}  // namespace hienet::nn
