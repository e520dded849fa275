/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: include/frbench/text_io.hpp
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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace frbench {

/// Reads a whole file; throws Error(Io) naming the path on failure.
std::string read_text_file(const std::filesystem::path& path);
std::vector<char> read_binary_file(const std::filesystem::path& path);

/// Writes (truncating) a file, creating parent directories as needed.
void write_text_file(const std::filesystem::path& path, std::string_view content);
void write_binary_file(const std::filesystem::path& path, const std::vector<char>& bytes);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

/// printf-style "%.<digits>f".
std::string format_fixed(double value, int digits);

/// Parses a full token as a double; returns false on trailing garbage or non-finite input.
bool parse_double(std::string_view token, double& value);

/// Whitespace tokenizer.
std::vector<std::string_view> split_whitespace(std::string_view line);

std::string_view trim(std::string_view s);

} // namespace frbench
