/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: src/binary_io.hpp
 *
 * Copyright 2026 The frbench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "frbench/error.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace frbench::detail {

/// Little-endian byte sink for the binary containers.
class ByteWriter
{
public:
    void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }

    template <typename T>
    void put(T value)
    {
        static_assert(std::is_arithmetic_v<T>);
        char buf[sizeof(T)];
        std::memcpy(buf, &value, sizeof(T));
        if constexpr (std::endian::native == std::endian::big)
            std::reverse(buf, buf + sizeof(T));
        bytes_.insert(bytes_.end(), buf, buf + sizeof(T));
    }

    template <typename Range>
    void put_doubles(const Range& values)
    {
        for (auto v : values)
            put<double>(static_cast<double>(v));
    }

    std::vector<char> take() { return std::move(bytes_); }

private:
    std::vector<char> bytes_;
};

class ByteReader
{
public:
    ByteReader(const std::vector<char>& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

    void expect_magic(std::string_view m)
    {
        need(m.size());
        if (std::string_view(bytes_.data() + pos_, m.size()) != m)
            throw Error(ErrorCode::Parse, what_ + ": bad magic, not a " + std::string(m) + " container");
        pos_ += m.size();
    }

    template <typename T>
    T get()
    {
        need(sizeof(T));
        char buf[sizeof(T)];
        std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big)
            std::reverse(buf, buf + sizeof(T));
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, buf, sizeof(T));
        return value;
    }

    /// Reads a count and checks that `count * element_size` more bytes exist.
    std::uint64_t get_count(std::size_t element_size)
    {
        const auto n = get<std::uint64_t>();
        if (element_size > 0 && n > (bytes_.size() - pos_) / element_size)
            throw Error(ErrorCode::Parse, what_ + ": declared size exceeds file length at offset " + std::to_string(pos_));
        return n;
    }

    void expect_end() const
    {
        if (pos_ != bytes_.size())
            throw Error(ErrorCode::Parse, what_ + ": trailing bytes at offset " + std::to_string(pos_));
    }

    std::size_t offset() const { return pos_; }

private:
    void need(std::size_t n) const
    {
        if (bytes_.size() - pos_ < n)
            throw Error(ErrorCode::Parse, what_ + ": truncated at offset " + std::to_string(pos_));
    }

    const std::vector<char>& bytes_;
    std::string what_;
    std::size_t pos_ = 0;
};

} // namespace frbench::detail
