/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: include/frbench/protocol.hpp
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

#include "frbench/geometry.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace frbench {

/// Which eye landmarks define the nose bridge.
enum class NoseBridge {
    EyeCentres,   ///< midpoint of the two per-eye midpoints (centroid of all four corners)
    InnerCorners, ///< midpoint of the two inner corners
};

struct ProtocolOptions
{
    NoseBridge nose_bridge = NoseBridge::EyeCentres;
    std::size_t leaf_size = 4;
};

Vec3 nose_bridge(const LandmarkSet7& landmarks, NoseBridge mode = NoseBridge::EyeCentres);

/// nose_bottom + 0.3 * (nose_bridge - nose_bottom)
Vec3 face_centre(const LandmarkSet7& gt_landmarks, NoseBridge mode = NoseBridge::EyeCentres);

/**
 * 1.2 * (outer_eye_dist + nose_dist) / 2, where outer_eye_dist is the distance
 * between the outer eye corners and nose_dist the distance from nose bridge to
 * nose bottom. Around 80 mm on real scans.
 */
double region_radius(const LandmarkSet7& gt_landmarks, NoseBridge mode = NoseBridge::EyeCentres);

/// Ground-truth vertices inside the closed ball (centre, radius), ascending.
struct RegionSpec
{
    Vec3 centre = Vec3::Zero();
    double radius = 0.0;
    std::vector<int> vertex_ids;
};

/// Throws InvalidArgument for radius <= 0, EmptyRegion if no vertex qualifies.
RegionSpec select_region(const TriMesh& gt_mesh, const Vec3& centre, double radius);

struct ErrorReport
{
    /// One point-to-surface distance per region vertex, in ground-truth vertex order.
    std::vector<double> distances;
    double rmse = 0.0;
    RegionSpec region;
    /// Maps the prediction into the ground-truth frame.
    SimilarityTransform transform;

    std::vector<double> sorted_distances() const;
};

/**
 * The full two-step metric: align the prediction to the ground truth with the
 * seven-landmark similarity transform, then measure, for every ground-truth
 * vertex inside the face region, the distance to the closest point on the
 * aligned predicted surface.
 */
ErrorReport evaluate_pair(const TriMesh& pred_mesh, const LandmarkSet7& pred_landmarks, const TriMesh& gt_mesh,
                          const LandmarkSet7& gt_landmarks, const ProtocolOptions& options = {});

/// sqrt(mean(d^2)); throws EmptyInput on an empty list.
double rmse(std::span<const double> distances);

struct CedCurve
{
    std::vector<double> thresholds;
    std::vector<double> fractions;
};

/// Fraction of values <= each threshold. Thresholds must be strictly increasing.
CedCurve ced_curve(std::span<const double> values, std::span<const double> thresholds);

/// `count` evenly spaced thresholds from 0 to max_threshold inclusive.
std::vector<double> linear_thresholds(double max_threshold, std::size_t count);

std::string ced_csv(const CedCurve& curve);

// ---------------------------------------------------------------------------
// Aggregation over a dataset.

enum class Subset { HQ, LQ };

std::string_view to_string(Subset subset);
/// Accepts "HQ"/"LQ" (case-insensitive); throws InvalidArgument otherwise.
Subset parse_subset(std::string_view text);

struct ImageResult
{
    std::string image_id;
    Subset subset = Subset::HQ;
    double rmse = 0.0;
};

struct SummaryRow
{
    std::string name; ///< HQ, LQ or Full
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0; ///< population standard deviation

    std::string formatted() const;
};

struct Summary
{
    std::vector<SummaryRow> rows;
    std::vector<std::string> warnings;
    std::size_t failures = 0; ///< images excluded from the aggregates
};

/// Mean and population std of per-image RMSE for HQ, LQ and Full (their union).
/// Empty subsets are omitted with a warning.
Summary summarize(std::span<const ImageResult> results, std::size_t failures = 0);

/// "m.mm±s.ss"
std::string format_mean_sd(double mean, double stddev);

std::string summary_csv(const Summary& summary);
std::string summary_table(const Summary& summary);

/// Per-image distance file: one comment header line followed by one distance per line.
std::string distance_file(std::string_view image_id, const ErrorReport& report);

} // namespace frbench
