#ifndef TOXSPAN_CRF_IO_HPP
#define TOXSPAN_CRF_IO_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "toxspan/crf.hpp"
#include "toxspan/error.hpp"

namespace toxspan::crf {

/// Binary model container, all integers and doubles little-endian:
///
///   magic        8 bytes  "TXSPCRF\0"
///   version      u32      kModelFormatVersion
///   endianness   u32      0x01020304 written little-endian ("LE" marker)
///   labels       u32      L
///   sparse_dim   u64      hashed feature space (F_sparse)
///   dense_dim    u64      embedding width (D_emb)
///   hidden_width u64      H
///   layers       u32      hidden layer count
///   hash_bits    u32
///   window       u32
///   count        u64      number of doubles that follow
///   values       f64[count], row-major in the Layout order
inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::array<char, 8> kModelMagic = {'T', 'X', 'S', 'P', 'C', 'R', 'F', '\0'};
inline constexpr std::uint32_t kEndianMarker = 0x01020304;

namespace detail {

template <typename T>
void put_le(std::ostream& out, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::istream& in) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof()) throw DataError("truncated model file");
        bits |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return std::bit_cast<T>(bits);
}

} // namespace detail

inline void write_model(std::ostream& out, const CrfModel& model) {
    const auto& shape = model.params.shape();
    out.write(kModelMagic.data(), kModelMagic.size());
    detail::put_le<std::uint32_t>(out, kModelFormatVersion);
    detail::put_le<std::uint32_t>(out, kEndianMarker);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(L));
    detail::put_le<std::uint64_t>(out, shape.sparse_dim);
    detail::put_le<std::uint64_t>(out, shape.dense_dim);
    detail::put_le<std::uint64_t>(out, shape.hidden_width);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.hidden_layers));
    detail::put_le<std::uint32_t>(out, model.features.hash_bits);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.features.window));
    detail::put_le<std::uint64_t>(out, model.params.values.size());
    for (double v : model.params.values) detail::put_le<double>(out, v);
    if (!out) throw DataError("failed writing model");
}

inline CrfModel read_model(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kModelMagic) throw DataError("not a CRF model file");
    const auto version = detail::get_le<std::uint32_t>(in);
    if (version != kModelFormatVersion) throw DataError("unsupported model format version " + std::to_string(version));
    if (detail::get_le<std::uint32_t>(in) != kEndianMarker) throw DataError("bad endianness marker");
    if (detail::get_le<std::uint32_t>(in) != L) throw DataError("model label count is not 3");
    ModelShape shape;
    shape.sparse_dim = detail::get_le<std::uint64_t>(in);
    shape.dense_dim = detail::get_le<std::uint64_t>(in);
    shape.hidden_width = detail::get_le<std::uint64_t>(in);
    shape.hidden_layers = detail::get_le<std::uint32_t>(in);
    FeatureConfig features;
    features.hash_bits = detail::get_le<std::uint32_t>(in);
    features.window = detail::get_le<std::uint32_t>(in);
    if (features.hash_bits > 31 || features.hash_space() != shape.sparse_dim) {
        throw DataError("hash space does not match sparse dimension");
    }
    CrfModel model{CrfParams(shape), features};
    const auto count = detail::get_le<std::uint64_t>(in);
    if (count != model.params.values.size()) throw DataError("parameter count does not match header");
    for (auto& v : model.params.values) {
        v = detail::get_le<double>(in);
        if (!std::isfinite(v)) throw DataError("non-finite parameter in model file");
    }
    return model;
}

inline void save_model(const std::filesystem::path& path, const CrfModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_model(out, model);
}

inline CrfModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return read_model(in);
}

/// Sidecar `key = value` text manifest next to a model file.
inline std::filesystem::path manifest_path(const std::filesystem::path& model_path) {
    auto p = model_path;
    p += ".manifest";
    return p;
}

inline void write_manifest(const std::filesystem::path& path, const std::map<std::string, std::string>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "# toxspan CRF training manifest\n";
    for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
}

inline std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        out[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return out;
}

} // namespace toxspan::crf

#endif // TOXSPAN_CRF_IO_HPP
