/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: src/manifest.cpp
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

#include "frbench/cli.hpp"
#include "frbench/text_io.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace frbench {

std::vector<std::vector<std::string>> parse_csv(std::string_view text)
{
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos <= text.size())
    {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        const auto line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        std::vector<std::string> row;
        if (!line.empty())
        {
            std::size_t start = 0;
            while (true)
            {
                const auto comma = line.find(',', start);
                row.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
                if (comma == std::string_view::npos)
                    break;
                start = comma + 1;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, std::string value)
{
    std::replace(value.begin(), value.end(), '\\', '/');
    std::filesystem::path p(value);
    return p.is_absolute() ? p : base / p;
}

/// Column index for each required name, in the order given.
template <std::size_t N>
std::array<std::size_t, N> header_columns(const std::vector<std::string>& header, const std::array<const char*, N>& names,
                                          const char* what)
{
    std::array<std::size_t, N> out{};
    for (std::size_t i = 0; i < N; ++i)
    {
        const auto it = std::find(header.begin(), header.end(), names[i]);
        if (it == header.end())
            throw Error(ErrorCode::Parse, std::string(what) + " header lacks column '" + names[i] + "'");
        out[i] = static_cast<std::size_t>(it - header.begin());
    }
    return out;
}

} // namespace

Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir)
{
    static constexpr std::array<const char*, 7> kColumns = {"image_id", "subject_id", "subset",      "pred_mesh",
                                                            "pred_landmarks", "gt_mesh", "gt_landmarks"};
    const auto rows = parse_csv(text);
    std::size_t first = 0;
    while (first < rows.size() && rows[first].empty())
        ++first;
    if (first == rows.size())
        throw Error(ErrorCode::Parse, "manifest is empty");
    const auto col = header_columns(rows[first], kColumns, "manifest");

    Manifest manifest;
    std::set<std::string> seen;
    for (std::size_t r = first + 1; r < rows.size(); ++r)
    {
        const auto& row = rows[r];
        if (row.empty())
            continue;
        const std::string where = "manifest line " + std::to_string(r + 1);
        if (row.size() != rows[first].size())
            throw Error(ErrorCode::Parse, where + ": expected " + std::to_string(rows[first].size()) + " fields, got " +
                                              std::to_string(row.size()));
        ManifestEntry e;
        e.image_id = row[col[0]];
        e.subject_id = row[col[1]];
        if (e.image_id.empty())
            throw Error(ErrorCode::Parse, where + ": empty image_id");
        try
        {
            e.subset = parse_subset(row[col[2]]);
        } catch (const Error& err)
        {
            throw Error(ErrorCode::Parse, where + ": " + err.detail());
        }
        e.pred_mesh = resolve(base_dir, row[col[3]]);
        e.pred_landmarks = resolve(base_dir, row[col[4]]);
        e.gt_mesh = resolve(base_dir, row[col[5]]);
        e.gt_landmarks = resolve(base_dir, row[col[6]]);
        if (!seen.insert(e.image_id).second)
            throw Error(ErrorCode::InvalidArgument, where + ": duplicate image_id '" + e.image_id + "'");
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

Manifest load_manifest(const std::filesystem::path& path)
{
    try
    {
        return parse_manifest(read_text_file(path), path.parent_path());
    } catch (const Error& e)
    {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

void check_manifest_files(const Manifest& manifest)
{
    for (const auto& e : manifest.entries)
    {
        const std::array<std::pair<const char*, const std::filesystem::path*>, 4> files = {
            {{"prediction mesh", &e.pred_mesh},
             {"prediction landmarks", &e.pred_landmarks},
             {"ground-truth mesh", &e.gt_mesh},
             {"ground-truth landmarks", &e.gt_landmarks}}};
        for (const auto& [what, path] : files)
        {
            std::error_code ec;
            if (!std::filesystem::is_regular_file(*path, ec))
                throw Error(ErrorCode::Io, "entry '" + e.image_id + "': missing " + what + " " + path->string());
        }
    }
}

std::vector<ObservationEntry> load_observations(const std::filesystem::path& path)
{
    static constexpr std::array<const char*, 5> kColumns = {"image_id", "subject_id", "subset", "split", "landmarks"};
    try
    {
        const auto rows = parse_csv(read_text_file(path));
        std::size_t first = 0;
        while (first < rows.size() && rows[first].empty())
            ++first;
        if (first == rows.size())
            throw Error(ErrorCode::Parse, "observation table is empty");
        const auto col = header_columns(rows[first], kColumns, "observation table");
        std::vector<ObservationEntry> out;
        for (std::size_t r = first + 1; r < rows.size(); ++r)
        {
            const auto& row = rows[r];
            if (row.empty())
                continue;
            const std::string where = "line " + std::to_string(r + 1);
            if (row.size() != rows[first].size())
                throw Error(ErrorCode::Parse, where + ": wrong field count");
            ObservationEntry e;
            e.image_id = row[col[0]];
            e.subject_id = row[col[1]];
            e.subset = parse_subset(row[col[2]]);
            if (row[col[3]] != "train" && row[col[3]] != "test")
                throw Error(ErrorCode::Parse, where + ": split must be train or test");
            e.test = row[col[3]] == "test";
            e.landmarks = resolve(path.parent_path(), row[col[4]]);
            out.push_back(std::move(e));
        }
        return out;
    } catch (const Error& e)
    {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

} // namespace frbench
