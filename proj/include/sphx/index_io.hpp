#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "sphx/error.hpp"
#include "sphx/index.hpp"

namespace sphx {

// Index file layout, all integers little-endian:
//
//   "SPHX" '1'
//   u32 m | f64 r | f64 h_index | f64 h_query | u8 kind | u32 d | u64 seed | u64 n
//   n x (varint len, id bytes)             ids ascending
//   m x (varint count, varint deltas...)   first delta is from 0
//   u64 FNV-1a of every preceding byte

namespace detail {

inline constexpr char index_magic[4] = {'S', 'P', 'H', 'X'};
inline constexpr char index_version = '1';

constexpr std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) noexcept
{
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        hash ^= b;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

class ByteWriter {
public:
    void raw(const void* p, std::size_t n)
    {
        auto b = static_cast<const std::uint8_t*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    template <class T>
    void fixed(T value)
    {
        std::uint64_t bits = 0;
        if constexpr (std::is_floating_point_v<T>) {
            bits = std::bit_cast<std::uint64_t>(static_cast<double>(value));
        } else {
            bits = static_cast<std::uint64_t>(value);
        }
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
    }
    void varint(std::uint64_t v)
    {
        while (v >= 0x80) {
            bytes_.push_back(static_cast<std::uint8_t>(v | 0x80));
            v >>= 7;
        }
        bytes_.push_back(static_cast<std::uint8_t>(v));
    }
    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void need(std::size_t n) const
    {
        if (bytes_.size() - pos_ < n) {
            fail(Errc::CorruptStream, "index stream truncated");
        }
    }
    template <class T>
    T fixed()
    {
        need(sizeof(T));
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += sizeof(T);
        if constexpr (std::is_floating_point_v<T>) {
            return std::bit_cast<double>(bits);
        } else {
            return static_cast<T>(bits);
        }
    }
    std::uint64_t varint()
    {
        std::uint64_t v = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            need(1);
            const auto b = bytes_[pos_++];
            v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            if (!(b & 0x80)) {
                return v;
            }
        }
        fail(Errc::CorruptStream, "varint longer than 64 bits");
    }
    std::string string(std::size_t n)
    {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    [[nodiscard]] std::size_t position() const { return pos_; }
    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> save_index(const InvertedIndex& index)
{
    detail::ByteWriter w;
    const auto& c = index.config();
    w.raw(detail::index_magic, 4);
    w.raw(&detail::index_version, 1);
    w.fixed<std::uint32_t>(c.m);
    w.fixed<double>(c.r);
    w.fixed<double>(c.h_index);
    w.fixed<double>(c.h_query);
    w.fixed<std::uint8_t>(static_cast<std::uint8_t>(c.kind));
    w.fixed<std::uint32_t>(c.d);
    w.fixed<std::uint64_t>(c.seed);
    w.fixed<std::uint64_t>(index.size());
    for (const auto& id : index.doc_ids()) {
        w.varint(id.size());
        w.raw(id.data(), id.size());
    }
    for (std::uint32_t dim = 0; dim < c.m; ++dim) {
        const auto list = index.postings(dim);
        w.varint(list.size());
        std::uint32_t prev = 0;
        for (auto doc : list) {
            w.varint(doc - prev);
            prev = doc;
        }
    }
    const auto sum = detail::fnv1a(w.bytes());
    w.fixed<std::uint64_t>(sum);
    return std::move(w.bytes());
}

inline InvertedIndex load_index(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 5 || std::memcmp(bytes.data(), detail::index_magic, 4) != 0) {
        fail(Errc::CorruptStream, "not an index stream (bad magic)");
    }
    if (bytes[4] != static_cast<std::uint8_t>(detail::index_version)) {
        fail(Errc::VersionMismatch, std::string("unsupported index version '") + static_cast<char>(bytes[4]) + "'");
    }
    if (bytes.size() < 13) {
        fail(Errc::CorruptStream, "index stream truncated");
    }
    const auto body = bytes.first(bytes.size() - 8);
    detail::ByteReader tail(bytes.last(8));
    if (tail.fixed<std::uint64_t>() != detail::fnv1a(body)) {
        fail(Errc::CorruptStream, "index checksum mismatch");
    }

    detail::ByteReader rd(body);
    rd.string(5);
    IndexConfig c;
    c.m = rd.fixed<std::uint32_t>();
    c.r = rd.fixed<double>();
    c.h_index = rd.fixed<double>();
    c.h_query = rd.fixed<double>();
    const auto kind = rd.fixed<std::uint8_t>();
    if (kind > static_cast<std::uint8_t>(TransformKind::BiasedStructured)) {
        fail(Errc::CorruptStream, "unknown transform kind in index header");
    }
    c.kind = static_cast<TransformKind>(kind);
    c.d = rd.fixed<std::uint32_t>();
    c.seed = rd.fixed<std::uint64_t>();
    const auto n = rd.fixed<std::uint64_t>();
    if (n > rd.remaining()) {
        fail(Errc::CorruptStream, "document count exceeds stream size");
    }
    if (c.m > rd.remaining()) {
        fail(Errc::CorruptStream, "posting list count exceeds stream size");
    }

    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        ids.push_back(rd.string(rd.varint()));
    }
    std::vector<std::vector<std::uint32_t>> postings(c.m);
    for (std::uint32_t dim = 0; dim < c.m; ++dim) {
        const auto count = rd.varint();
        if (count > n) {
            fail(Errc::CorruptStream, "posting list longer than n");
        }
        auto& list = postings[dim];
        list.reserve(count);
        std::uint64_t doc = 0;
        for (std::uint64_t j = 0; j < count; ++j) {
            doc += rd.varint();
            if (doc >= n) {
                fail(Errc::CorruptStream, "posting refers to a document >= n");
            }
            list.push_back(static_cast<std::uint32_t>(doc));
        }
    }
    if (rd.remaining() != 0) {
        fail(Errc::CorruptStream, "trailing bytes after posting lists");
    }
    return InvertedIndex::from_parts(c, std::move(ids), std::move(postings));
}

inline void save_index_file(const InvertedIndex& index, const std::string& path)
{
    const auto bytes = save_index(index);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(Errc::Io, "cannot open '" + path + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(Errc::Io, "write to '" + path + "' failed");
    }
}

inline InvertedIndex load_index_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(Errc::Io, "cannot open index '" + path + "'");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_index(bytes);
}

}  // namespace sphx
