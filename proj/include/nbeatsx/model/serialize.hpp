#pragma once

// Binary model container:
//   "NBXMODEL" | u32 version | u64 header length | JSON header
//   u64 tensor count | per tensor: u32 name length, name, u32 rank, u64 dims..., f64 data...
// All integers and doubles are little-endian. Parameters come first, then buffers.

#include "nbeatsx/model/network.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace nbeatsx {

inline constexpr char kModelMagic[8] = {'N', 'B', 'X', 'M', 'O', 'D', 'E', 'L'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ModelArtifact {
    Model model;
    nlohmann::json metadata;
};

namespace detail {

template <class U>
void put_le(std::ostream& os, U v) {
    unsigned char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <class U>
U get_le(std::istream& is) {
    unsigned char bytes[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw DataError("model file: truncated");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
    return v;
}

inline std::string get_bytes(std::istream& is, std::uint64_t n) {
    if (n > (std::uint64_t{1} << 32)) throw DataError("model file: implausible length field");
    std::string s(static_cast<std::size_t>(n), '\0');
    if (n > 0 && !is.read(s.data(), static_cast<std::streamsize>(n))) throw DataError("model file: truncated");
    return s;
}

inline void put_tensors(std::ostream& os, const ParameterSet& set) {
    for (std::size_t i = 0; i < set.size(); ++i) {
        const std::string& name = set.name(i);
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const Tensor& t = set[i];
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) put_le<std::uint64_t>(os, d);
        for (double v : t.data()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
    }
}

inline std::pair<std::string, Tensor> get_tensor(std::istream& is) {
    std::string name = get_bytes(is, get_le<std::uint32_t>(is));
    const std::uint32_t rank = get_le<std::uint32_t>(is);
    if (rank == 0 || rank > 8) throw DataError("model file: tensor '" + name + "' has invalid rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get_le<std::uint64_t>(is));
    Tensor t(shape);
    for (double& v : t.data()) v = std::bit_cast<double>(get_le<std::uint64_t>(is));
    return {std::move(name), std::move(t)};
}

}  // namespace detail

inline void save_model(std::ostream& os, const Model& model, const nlohmann::json& metadata = nlohmann::json::object()) {
    nlohmann::json header{{"format_version", kModelFormatVersion},
                          {"model_config", to_json(model.config())},
                          {"n_parameters", model.parameters().size()},
                          {"n_buffers", model.buffers().size()},
                          {"metadata", metadata}};
    const std::string text = header.dump();
    os.write(kModelMagic, sizeof kModelMagic);
    detail::put_le<std::uint32_t>(os, kModelFormatVersion);
    detail::put_le<std::uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    detail::put_le<std::uint64_t>(os, model.parameters().size() + model.buffers().size());
    detail::put_tensors(os, model.parameters());
    detail::put_tensors(os, model.buffers());
    if (!os) throw Error("save_model: write failed");
}

inline void save_model(const std::filesystem::path& path, const Model& model,
                       const nlohmann::json& metadata = nlohmann::json::object()) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("save_model: cannot open " + path.string());
    save_model(os, model, metadata);
}

inline ModelArtifact load_model(std::istream& is) {
    char magic[8];
    if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kModelMagic)) {
        throw DataError("model file: bad magic");
    }
    const std::uint32_t version = detail::get_le<std::uint32_t>(is);
    if (version != kModelFormatVersion) throw DataError("model file: unsupported version " + std::to_string(version));
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(detail::get_bytes(is, detail::get_le<std::uint64_t>(is)));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model file: bad header: ") + e.what());
    }
    const ModelConfig cfg = model_config_from_json(header.at("model_config"));
    const std::size_t n_params = header.at("n_parameters").get<std::size_t>();
    const std::size_t n_buffers = header.at("n_buffers").get<std::size_t>();
    const std::uint64_t n = detail::get_le<std::uint64_t>(is);
    if (n != n_params + n_buffers) throw DataError("model file: tensor count disagrees with header");
    ParameterSet params, buffers;
    for (std::uint64_t i = 0; i < n; ++i) {
        auto [name, t] = detail::get_tensor(is);
        (i < n_params ? params : buffers).add(std::move(name), std::move(t));
    }
    return {Model(cfg, std::move(params), std::move(buffers)), header.value("metadata", nlohmann::json::object())};
}

inline ModelArtifact load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("load_model: cannot open " + path.string());
    return load_model(is);
}

}  // namespace nbeatsx
