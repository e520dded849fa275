/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: src/text_io.cpp
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

#include "frbench/text_io.hpp"

#include "frbench/error.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace frbench {

const char* to_string(ErrorCode code) noexcept
{
    switch (code)
    {
    case ErrorCode::Io: return "io error";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::IndexOutOfRange: return "index out of range";
    case ErrorCode::UnsupportedFormat: return "unsupported format";
    case ErrorCode::InvalidLandmarks: return "invalid landmarks";
    case ErrorCode::AlignmentDegenerate: return "alignment degenerate";
    case ErrorCode::DegenerateTriangle: return "degenerate triangle";
    case ErrorCode::NoSurface: return "no surface";
    case ErrorCode::EmptyRegion: return "empty region";
    case ErrorCode::DegenerateLandmarks: return "degenerate landmarks";
    case ErrorCode::EmptyInput: return "empty input";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::SingularSystem: return "singular system";
    case ErrorCode::DegenerateCamera: return "degenerate camera configuration";
    case ErrorCode::Capacity: return "capacity exceeded";
    case ErrorCode::CascadeStage: return "cascade stage failure";
    case ErrorCode::Config: return "config error";
    }
    return "error";
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<char> read_binary_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {
std::ofstream open_for_writing(const std::filesystem::path& path)
{
    if (path.has_parent_path())
    {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec)
        {
            throw Error(ErrorCode::Io, "cannot create directory '" + path.parent_path().string() +
                                           "': " + ec.message());
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
    {
        throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    }
    return out;
}
} // namespace

void write_text_file(const std::filesystem::path& path, std::string_view content)
{
    auto out = open_for_writing(path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
    {
        throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
    }
}

void write_binary_file(const std::filesystem::path& path, const std::vector<char>& bytes)
{
    write_text_file(path, std::string_view(bytes.data(), bytes.size()));
}

std::string format_double(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string format_fixed(double value, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
    return buf;
}

bool parse_double(std::string_view token, double& value)
{
    if (!token.empty() && token.front() == '+')
    {
        token.remove_prefix(1);
    }
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    return res.ec == std::errc() && res.ptr == token.data() + token.size() && std::isfinite(value);
}

std::vector<std::string_view> split_whitespace(std::string_view line)
{
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size())
    {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
        if (i > start)
            tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

} // namespace frbench
