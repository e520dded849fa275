/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: include/frbench/cli.hpp
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

#include "frbench/protocol.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace frbench {

/// Comma-separated rows without quoting; fields are trimmed. Blank lines are skipped.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

struct ManifestEntry
{
    std::string image_id;
    std::string subject_id;
    Subset subset = Subset::HQ;
    std::filesystem::path pred_mesh;
    std::filesystem::path pred_landmarks;
    std::filesystem::path gt_mesh;
    std::filesystem::path gt_landmarks;
};

struct Manifest
{
    std::vector<ManifestEntry> entries;
};

/**
 * CSV with header image_id,subject_id,subset,pred_mesh,pred_landmarks,gt_mesh,gt_landmarks
 * (any column order). Relative paths resolve against base_dir; backslashes are
 * read as separators. Throws Parse with the line number, or InvalidArgument for
 * duplicate image ids.
 */
Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
Manifest load_manifest(const std::filesystem::path& path);

/// Throws Io naming the first entry whose file is missing.
void check_manifest_files(const Manifest& manifest);

struct ObservationEntry
{
    std::string image_id;
    std::string subject_id;
    Subset subset = Subset::HQ;
    bool test = false;
    std::filesystem::path landmarks;
};

/// observations.csv of a synthetic dataset: image_id,subject_id,subset,split,landmarks.
std::vector<ObservationEntry> load_observations(const std::filesystem::path& path);

/// Runs the frbench command line. Returns the process exit code:
/// 0 success, 1 image failures under --strict, 2 usage or fatal errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace frbench
