#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gliomkit/common.hpp"
#include "gliomkit/tensor.hpp"

namespace gliomkit {

// Binary model container: 8-byte magic, u32 JSON length + JSON document
// (architecture / metadata), u32 tensor count, then each tensor as
// u32 ndim, u32 dims[ndim], float32 payload. All integers and floats are
// little-endian.
namespace checkpoint {

constexpr std::size_t magic_size = 8;

namespace detail {

inline void put_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t get_u32(std::ifstream& in, const std::string& what) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw format_error(concat("truncated checkpoint while reading ", what));
    return v;
}

} // namespace detail

template <typename T>
void save(const std::string& path, const char magic[magic_size], const nlohmann::json& meta,
          const std::vector<const Tensor<T>*>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(concat("cannot write checkpoint: ", path));
    out.write(magic, magic_size);
    const std::string js = meta.dump();
    detail::put_u32(out, static_cast<std::uint32_t>(js.size()));
    out.write(js.data(), static_cast<std::streamsize>(js.size()));
    detail::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const Tensor<T>* t : tensors) {
        detail::put_u32(out, static_cast<std::uint32_t>(t->shape.size()));
        for (auto d : t->shape) detail::put_u32(out, static_cast<std::uint32_t>(d));
        std::vector<float> buf(t->v.size());
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(t->v[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    out.close();
    if (!out) throw io_error(concat("failed writing checkpoint: ", path));
}

struct Loaded {
    nlohmann::json meta;
    std::vector<Tensor<float>> tensors;
};

inline Loaded load(const std::string& path, const char magic[magic_size]) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(concat("cannot open checkpoint: ", path));
    char got[magic_size];
    in.read(got, magic_size);
    if (!in || std::memcmp(got, magic, magic_size) != 0)
        throw format_error(concat(path, ": bad checkpoint magic"));
    const std::uint32_t jlen = detail::get_u32(in, "JSON length");
    std::string js(jlen, '\0');
    in.read(js.data(), jlen);
    if (!in) throw format_error("truncated checkpoint while reading JSON spec");
    Loaded result;
    result.meta = nlohmann::json::parse(js);
    const std::uint32_t n = detail::get_u32(in, "tensor count");
    result.tensors.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t ndim = detail::get_u32(in, "tensor rank");
        std::vector<std::int64_t> shape(ndim);
        for (auto& d : shape) d = detail::get_u32(in, "tensor dim");
        Tensor<float> t(shape);
        in.read(reinterpret_cast<char*>(t.v.data()),
                static_cast<std::streamsize>(t.v.size() * sizeof(float)));
        if (!in) throw format_error(concat("truncated checkpoint while reading tensor ", i));
        result.tensors.push_back(std::move(t));
    }
    return result;
}

} // namespace checkpoint
} // namespace gliomkit
