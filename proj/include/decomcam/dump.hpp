#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "decomcam/error.hpp"
#include "decomcam/tensor.hpp"

// DCAM tensor dump, all integers little-endian:
//   "DCAMTNSR" | u32 version=1 | u32 entry_count | entries...
//   entry: u16 name_len | name (UTF-8) | u8 ndim | u32 dims[ndim] | payload
// Tensor payloads are f32 row-major; ndim 0 is a scalar (one f32). Entries
// named "meta.*" are strings: ndim 0, then u32 byte length, then UTF-8 bytes.

namespace decomcam {

namespace bytes {

inline void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(std::uint8_t(v));
    out.push_back(std::uint8_t(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void put_str(std::vector<std::uint8_t>& out, std::string_view s) {
    out.insert(out.end(), s.begin(), s.end());
}

/// Bounds-checked little-endian cursor; every overrun is a format_error that
/// names the offset.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n)
            throw format_error(std::string("truncated ") + what + ": need " + std::to_string(n) +
                                   " bytes, " + std::to_string(remaining()) + " left",
                               pos_);
    }

    std::uint8_t u8(const char* what) {
        need(1, what);
        return data_[pos_++];
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = std::uint16_t(data_[pos_] | (data_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(data_[pos_ + std::size_t(i)]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

} // namespace bytes

inline constexpr std::string_view dcam_magic = "DCAMTNSR";
inline constexpr std::uint32_t dcam_version = 1;

struct TensorDump {
    Image image;
    Stack3 activations;
    Stack3 gradients;
    float score = 0.0f;
    std::string concept_id;
    std::string layer;
    std::string model;
    std::map<std::string, std::string> extra_meta; // other "meta.*" entries, key without prefix

    friend bool operator==(const TensorDump&, const TensorDump&) = default;
};

namespace detail {

inline void put_entry_header(std::vector<std::uint8_t>& out, std::string_view name,
                             std::initializer_list<std::uint32_t> dims) {
    bytes::put_u16(out, std::uint16_t(name.size()));
    bytes::put_str(out, name);
    bytes::put_u8(out, std::uint8_t(dims.size()));
    for (auto d : dims) bytes::put_u32(out, d);
}

inline void put_meta(std::vector<std::uint8_t>& out, std::string_view key, std::string_view value) {
    put_entry_header(out, std::string("meta.") + std::string(key), {});
    bytes::put_u32(out, std::uint32_t(value.size()));
    bytes::put_str(out, value);
}

inline void put_stack(std::vector<std::uint8_t>& out, std::string_view name, const Stack3& s) {
    put_entry_header(out, name,
                     {std::uint32_t(s.count()), std::uint32_t(s.height()), std::uint32_t(s.width())});
    for (const auto& m : s)
        for (float v : m.values()) bytes::put_f32(out, v);
}

inline Stack3 to_stack(const std::vector<std::uint32_t>& dims, const std::vector<float>& v) {
    std::vector<Map2> maps;
    const std::size_t plane = std::size_t(dims[1]) * dims[2];
    for (std::size_t k = 0; k < dims[0]; ++k)
        maps.emplace_back(dims[1], dims[2],
                          std::vector<float>(v.begin() + long(k * plane), v.begin() + long((k + 1) * plane)));
    return Stack3(std::move(maps));
}

} // namespace detail

/// Serializes in a fixed entry order so equal dumps give identical bytes.
inline std::vector<std::uint8_t> serialize_tensor_dump(const TensorDump& d) {
    std::vector<std::uint8_t> out;
    bytes::put_str(out, dcam_magic);
    bytes::put_u32(out, dcam_version);
    bytes::put_u32(out, std::uint32_t(7 + d.extra_meta.size()));

    detail::put_entry_header(out, "image",
                             {3u, std::uint32_t(d.image.height()), std::uint32_t(d.image.width())});
    for (float v : d.image.values()) bytes::put_f32(out, v);
    detail::put_stack(out, "activations", d.activations);
    detail::put_stack(out, "gradients", d.gradients);
    detail::put_entry_header(out, "score", {});
    bytes::put_f32(out, d.score);
    detail::put_meta(out, "concept", d.concept_id);
    detail::put_meta(out, "layer", d.layer);
    detail::put_meta(out, "model", d.model);
    for (const auto& [k, v] : d.extra_meta) detail::put_meta(out, k, v);
    return out;
}

inline TensorDump parse_tensor_dump(std::span<const std::uint8_t> data) {
    bytes::Reader rd(data);
    const std::string magic = rd.str(dcam_magic.size(), "magic");
    if (magic != dcam_magic) throw format_error("bad magic, expected DCAMTNSR", 0);
    const std::size_t version_at = rd.offset();
    const auto version = rd.u32("version");
    if (version != dcam_version)
        throw format_error("unsupported DCAM version " + std::to_string(version), version_at);
    const auto count = rd.u32("entry count");

    struct Tensor { std::vector<std::uint32_t> dims; std::vector<float> values; };
    std::map<std::string, Tensor> tensors;
    std::map<std::string, std::string> meta;
    std::set<std::string> seen;

    for (std::uint32_t e = 0; e < count; ++e) {
        const std::size_t entry_at = rd.offset();
        const auto name_len = rd.u16("entry name length");
        std::string name = rd.str(name_len, "entry name");
        if (!seen.insert(name).second) throw schema_error("duplicate DCAM entry '" + name + "'");
        const auto ndim = rd.u8("ndim");
        if (name.starts_with("meta.")) {
            if (ndim != 0)
                throw format_error("metadata entry '" + name + "' must have ndim 0", entry_at);
            const auto len = rd.u32("metadata length");
            meta[name.substr(5)] = rd.str(len, "metadata payload");
            continue;
        }
        Tensor t;
        std::uint64_t n = 1;
        for (std::uint8_t i = 0; i < ndim; ++i) {
            t.dims.push_back(rd.u32("dimension"));
            n *= t.dims.back();
            if (n > rd.remaining()) n = rd.remaining() + 1; // saturate; rejected below
        }
        if (n > rd.remaining() / 4)
            throw format_error("payload of '" + name + "' declares " + std::to_string(n) +
                                   " floats but only " + std::to_string(rd.remaining()) +
                                   " bytes remain",
                               rd.offset());
        t.values.resize(std::size_t(n));
        for (auto& v : t.values) v = rd.f32("payload");
        tensors.emplace(std::move(name), std::move(t));
    }
    if (rd.remaining() != 0)
        throw format_error(std::to_string(rd.remaining()) + " trailing bytes after last entry",
                           rd.offset());

    for (const char* req : {"image", "activations", "gradients", "score"})
        if (!tensors.contains(req)) throw schema_error(std::string("missing required tensor '") + req + "'");
    for (const char* req : {"concept", "layer", "model"})
        if (!meta.contains(req)) throw schema_error(std::string("missing required entry 'meta.") + req + "'");

    TensorDump d;
    const auto& img = tensors["image"];
    if (img.dims.size() != 3 || img.dims[0] != 3)
        throw schema_error("'image' must be 3 x H x W");
    d.image = Image(img.dims[1], img.dims[2], img.values);
    for (const char* name : {"activations", "gradients"}) {
        const auto& t = tensors[name];
        if (t.dims.size() != 3 || t.dims[0] == 0)
            throw schema_error(std::string("'") + name + "' must be K x M x N with K >= 1");
    }
    if (tensors["activations"].dims != tensors["gradients"].dims)
        throw schema_error("'activations' and 'gradients' shapes differ");
    d.activations = detail::to_stack(tensors["activations"].dims, tensors["activations"].values);
    d.gradients = detail::to_stack(tensors["gradients"].dims, tensors["gradients"].values);
    const auto& sc = tensors["score"];
    if (sc.values.size() != 1) throw schema_error("'score' must be a scalar");
    d.score = sc.values[0];
    d.concept_id = meta["concept"];
    d.layer = meta["layer"];
    d.model = meta["model"];
    meta.erase("concept"), meta.erase("layer"), meta.erase("model");
    d.extra_meta = std::move(meta);
    return d;
}

inline void write_tensor_dump(const std::string& path, const TensorDump& d) {
    const auto buf = serialize_tensor_dump(d);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open '" + path + "' for writing");
    os.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
    if (!os) throw io_error("failed writing '" + path + "'");
}

inline TensorDump load_tensor_dump(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open dump '" + path + "'");
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_tensor_dump(buf);
}

} // namespace decomcam
