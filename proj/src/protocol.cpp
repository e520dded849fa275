/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: src/protocol.cpp
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

#include "frbench/protocol.hpp"
#include "frbench/spatial.hpp"
#include "frbench/text_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace frbench {

Vec3 nose_bridge(const LandmarkSet7& lm, NoseBridge mode)
{
    if (mode == NoseBridge::InnerCorners)
        return 0.5 * (lm[Landmark::RightEyeInner] + lm[Landmark::LeftEyeInner]);
    const Vec3 right_eye = 0.5 * (lm[Landmark::RightEyeOuter] + lm[Landmark::RightEyeInner]);
    const Vec3 left_eye = 0.5 * (lm[Landmark::LeftEyeOuter] + lm[Landmark::LeftEyeInner]);
    return 0.5 * (right_eye + left_eye);
}

Vec3 face_centre(const LandmarkSet7& gt_landmarks, NoseBridge mode)
{
    const Vec3& nose_bottom = gt_landmarks[Landmark::NoseBottom];
    return nose_bottom + 0.3 * (nose_bridge(gt_landmarks, mode) - nose_bottom);
}

double region_radius(const LandmarkSet7& gt_landmarks, NoseBridge mode)
{
    const double outer_eye_dist = (gt_landmarks[Landmark::RightEyeOuter] - gt_landmarks[Landmark::LeftEyeOuter]).norm();
    const double nose_dist = (nose_bridge(gt_landmarks, mode) - gt_landmarks[Landmark::NoseBottom]).norm();
    const double radius = 1.2 * (outer_eye_dist + nose_dist) / 2.0;
    if (!(radius > 0))
        throw Error(ErrorCode::DegenerateLandmarks, "landmarks give a zero face radius");
    return radius;
}

RegionSpec select_region(const TriMesh& gt_mesh, const Vec3& centre, double radius)
{
    if (!(radius > 0))
        throw Error(ErrorCode::InvalidArgument, "region radius must be positive");
    RegionSpec region{centre, radius, {}};
    for (std::size_t v = 0; v < gt_mesh.vertices.size(); ++v)
    {
        if ((gt_mesh.vertices[v] - centre).norm() <= radius)
            region.vertex_ids.push_back(static_cast<int>(v));
    }
    if (region.vertex_ids.empty())
    {
        throw Error(ErrorCode::EmptyRegion, "no ground-truth vertex within " + format_double(radius) +
                                                " of the face centre (check landmarks and units)");
    }
    return region;
}

std::vector<double> ErrorReport::sorted_distances() const
{
    auto sorted = distances;
    std::sort(sorted.begin(), sorted.end());
    return sorted;
}

ErrorReport evaluate_pair(const TriMesh& pred_mesh, const LandmarkSet7& pred_landmarks, const TriMesh& gt_mesh,
                          const LandmarkSet7& gt_landmarks, const ProtocolOptions& options)
{
    ErrorReport report;
    report.transform = align_similarity(pred_landmarks, gt_landmarks);
    const TriMesh aligned = apply_transform(report.transform, pred_mesh);
    const SurfaceIndex index(aligned, options.leaf_size);

    report.region = select_region(gt_mesh, face_centre(gt_landmarks, options.nose_bridge),
                                  region_radius(gt_landmarks, options.nose_bridge));
    report.distances.reserve(report.region.vertex_ids.size());
    for (int v : report.region.vertex_ids)
        report.distances.push_back(index.query_closest(gt_mesh.vertices[v]).distance);
    report.rmse = rmse(report.distances);
    return report;
}

double rmse(std::span<const double> distances)
{
    if (distances.empty())
        throw Error(ErrorCode::EmptyInput, "RMSE of an empty distance list");
    double sum_sq = 0.0;
    for (double d : distances)
        sum_sq += d * d;
    return std::sqrt(sum_sq / static_cast<double>(distances.size()));
}

CedCurve ced_curve(std::span<const double> values, std::span<const double> thresholds)
{
    if (values.empty())
        throw Error(ErrorCode::EmptyInput, "CED curve of an empty list");
    for (std::size_t i = 1; i < thresholds.size(); ++i)
    {
        if (!(thresholds[i] > thresholds[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "CED thresholds must be strictly increasing");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    CedCurve curve;
    curve.thresholds.assign(thresholds.begin(), thresholds.end());
    curve.fractions.reserve(thresholds.size());
    for (double t : thresholds)
    {
        const auto below = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
        curve.fractions.push_back(static_cast<double>(below) / static_cast<double>(sorted.size()));
    }
    return curve;
}

std::vector<double> linear_thresholds(double max_threshold, std::size_t count)
{
    if (count < 2 || !(max_threshold > 0))
        throw Error(ErrorCode::InvalidArgument, "need at least 2 thresholds and a positive maximum");
    std::vector<double> t(count);
    for (std::size_t i = 0; i < count; ++i)
        t[i] = max_threshold * static_cast<double>(i) / static_cast<double>(count - 1);
    return t;
}

std::string ced_csv(const CedCurve& curve)
{
    std::string out = "threshold_mm,fraction\n";
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
        out += format_double(curve.thresholds[i]) + ',' + format_double(curve.fractions[i]) + '\n';
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Subset subset)
{
    return subset == Subset::HQ ? "HQ" : "LQ";
}

Subset parse_subset(std::string_view text)
{
    std::string upper(trim(text));
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "HQ")
        return Subset::HQ;
    if (upper == "LQ")
        return Subset::LQ;
    throw Error(ErrorCode::InvalidArgument, "subset tag must be HQ or LQ, got '" + std::string(text) + "'");
}

std::string format_mean_sd(double mean, double stddev)
{
    return format_fixed(mean, 2) + "±" + format_fixed(stddev, 2);
}

std::string SummaryRow::formatted() const
{
    return format_mean_sd(mean, stddev);
}

namespace {
SummaryRow make_row(std::string name, const std::vector<double>& values)
{
    SummaryRow row;
    row.name = std::move(name);
    row.count = values.size();
    double sum = 0.0;
    for (double v : values)
        sum += v;
    row.mean = sum / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values)
        var += (v - row.mean) * (v - row.mean);
    row.stddev = std::sqrt(var / static_cast<double>(values.size()));
    return row;
}
} // namespace

Summary summarize(std::span<const ImageResult> results, std::size_t failures)
{
    std::vector<double> hq, lq, full;
    for (const auto& r : results)
    {
        (r.subset == Subset::HQ ? hq : lq).push_back(r.rmse);
        full.push_back(r.rmse);
    }
    Summary summary;
    summary.failures = failures;
    for (auto [name, values] : {std::pair{"HQ", &hq}, std::pair{"LQ", &lq}, std::pair{"Full", &full}})
    {
        if (values->empty())
        {
            summary.warnings.push_back(std::string("subset ") + name + " has no evaluated images; row omitted");
            continue;
        }
        summary.rows.push_back(make_row(name, *values));
    }
    return summary;
}

std::string summary_csv(const Summary& summary)
{
    std::string out = "subset,count,mean_mm,std_mm,formatted\n";
    for (const auto& row : summary.rows)
    {
        out += row.name + ',' + std::to_string(row.count) + ',' + format_fixed(row.mean, 6) + ',' +
               format_fixed(row.stddev, 6) + ',' + row.formatted() + '\n';
    }
    return out;
}

std::string summary_table(const Summary& summary)
{
    std::string out;
    char line[128];
    std::snprintf(line, sizeof(line), "%-6s %7s  %s\n", "Subset", "Images", "3D-RMSE (mm)");
    out += line;
    for (const auto& row : summary.rows)
    {
        std::snprintf(line, sizeof(line), "%-6s %7zu  %s\n", row.name.c_str(), row.count, row.formatted().c_str());
        out += line;
    }
    for (const auto& w : summary.warnings)
        out += "# warning: " + w + '\n';
    out += "# failed images excluded: " + std::to_string(summary.failures) + '\n';
    return out;
}

std::string distance_file(std::string_view image_id, const ErrorReport& report)
{
    std::string out = "# " + std::string(image_id) + ", " + std::to_string(report.distances.size()) + ", " +
                      format_double(report.rmse) + ", " + format_double(report.region.radius) + '\n';
    for (double d : report.distances)
        out += format_double(d) + '\n';
    return out;
}

} // namespace frbench
