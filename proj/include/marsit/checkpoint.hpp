// Copyright (c) 2026, the Marsit authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "marsit/dense_vector.hpp"
#include "marsit/errors.hpp"

namespace marsit {

// Model checkpoint layout, all little-endian:
//   bytes  0-11  magic "marsit-ckpt\0"
//   bytes 12-15  format version (u32)
//   bytes 16-23  parameter count D (u64)
//   then         D doubles
namespace detail {

inline constexpr std::array<char, 12> kCheckpointMagic = {'m', 'a', 'r', 's', 'i', 't',
                                                          '-', 'c', 'k', 'p', 't', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void put_le(std::string& out, T value) {
    std::uint64_t bits;
    if constexpr (sizeof(T) == 8) {
        bits = std::bit_cast<std::uint64_t>(value);
    } else {
        bits = static_cast<std::uint64_t>(value);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
}

inline std::uint64_t get_le(const char* data, std::size_t bytes) {
    std::uint64_t out = 0;
    for (std::size_t i = 0; i < bytes; ++i) {
        out |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[i])) << (8 * i);
    }
    return out;
}

} // namespace detail

inline void write_checkpoint(const std::string& path, const DenseVector& params) {
    std::string blob;
    blob.append(detail::kCheckpointMagic.data(), detail::kCheckpointMagic.size());
    detail::put_le(blob, detail::kCheckpointVersion);
    detail::put_le(blob, static_cast<std::uint64_t>(params.size()));
    for (std::size_t j = 0; j < params.size(); ++j) detail::put_le(blob, params[j]);

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file || !file.write(blob.data(), static_cast<std::streamsize>(blob.size()))) {
        throw parse_error("write_checkpoint: cannot write " + path);
    }
}

inline DenseVector read_checkpoint(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw parse_error("read_checkpoint: cannot open " + path);
    }
    std::string blob((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    if (blob.size() < 24) {
        throw parse_error("read_checkpoint: truncated header");
    }
    if (std::memcmp(blob.data(), detail::kCheckpointMagic.data(),
                    detail::kCheckpointMagic.size()) != 0) {
        throw parse_error("read_checkpoint: bad magic");
    }
    const auto version = static_cast<std::uint32_t>(detail::get_le(blob.data() + 12, 4));
    if (version != detail::kCheckpointVersion) {
        throw parse_error("read_checkpoint: unsupported version");
    }
    const std::uint64_t dim = detail::get_le(blob.data() + 16, 8);
    if (blob.size() != 24 + dim * 8) {
        throw parse_error("read_checkpoint: size mismatch");
    }
    std::vector<double> values(dim);
    for (std::uint64_t j = 0; j < dim; ++j) {
        values[j] = std::bit_cast<double>(detail::get_le(blob.data() + 24 + j * 8, 8));
    }
    return DenseVector(std::move(values));
}

} // namespace marsit
