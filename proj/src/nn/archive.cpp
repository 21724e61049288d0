#include "hienet/nn/archive.hpp"

#include "hienet/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hienet::nn {

namespace {

void append_f64(std::string& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.append(buf, 8);
}

double read_f64(const std::string& blob, std::size_t offset) {
    std::uint64_t bits;
    std::memcpy(&bits, blob.data() + offset, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    return std::bit_cast<double>(bits);
}

}  // namespace

TensorArchive pack(const ParameterStore& store) {
    TensorArchive a;
    for (const Parameter* p : store.all()) {
        a.manifest.push_back({{"name", p->name},
                              {"shape", p->value().shape()},
                              {"dtype", "f64"},
                              {"offset", a.blob.size()}});
        for (double v : p->value().data()) append_f64(a.blob, v);
    }
    return a;
}

void unpack(ParameterStore& store, const TensorArchive& archive) {
    if (archive.manifest.size() != store.size())
        throw DataError("checkpoint has " + std::to_string(archive.manifest.size()) + " tensors, model expects " +
                        std::to_string(store.size()));
    for (const auto& entry : archive.manifest) {
        const auto name = entry.at("name").get<std::string>();
        Parameter* p = store.find(name);
        if (!p) throw DataError("checkpoint tensor '" + name + "' is not a model parameter");
        if (entry.at("dtype").get<std::string>() != "f64") throw DataError("checkpoint tensor '" + name + "': dtype");
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        if (shape != p->value().shape())
            throw DataError("checkpoint tensor '" + name + "' has shape " + shape_str(shape) + ", model expects " +
                            p->value().shape_str());
        const auto offset = entry.at("offset").get<std::size_t>();
        Tensor& t = p->mutable_value();
        if (offset + 8 * t.size() > archive.blob.size())
            throw DataError("checkpoint tensor '" + name + "' extends past end of blob");
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = read_f64(archive.blob, offset + 8 * i);
    }
}

void write_archive(const TensorArchive& archive, const std::filesystem::path& manifest_path,
                   const std::filesystem::path& blob_path) {
    std::ofstream m(manifest_path, std::ios::binary);
    m << archive.manifest.dump(2) << '\n';
    std::ofstream b(blob_path, std::ios::binary);
    b.write(archive.blob.data(), static_cast<std::streamsize>(archive.blob.size()));
    if (!m || !b) throw DataError("failed to write checkpoint to " + manifest_path.parent_path().string());
}

TensorArchive read_archive(const std::filesystem::path& manifest_path, const std::filesystem::path& blob_path) {
    std::ifstream m(manifest_path);
    if (!m) throw DataError("cannot open " + manifest_path.string());
    TensorArchive a;
    try {
        a.manifest = nlohmann::json::parse(m);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(manifest_path.string() + ": " + e.what());
    }
    std::ifstream b(blob_path, std::ios::binary);
    if (!b) throw DataError("cannot open " + blob_path.string());
    std::ostringstream ss;
    ss << b.rdbuf();
    a.blob = ss.str();
    return a;
}

}  // namespace hienet::nn
