/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: include/frbench/geometry.hpp
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

#include "Eigen/Core"

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace frbench {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/**
 * Triangle mesh: vertex positions plus vertex-index triples.
 *
 * Ground-truth scans are in millimetres, predictions may use any unit. A mesh
 * without triangles is a valid landmark-only payload, but every operation that
 * needs a surface rejects it.
 */
struct TriMesh
{
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    /// Throws Error(IndexOutOfRange / InvalidArgument) if an index is out of range,
    /// a triangle repeats a vertex, or a coordinate is not finite.
    void validate() const;
};

enum class MeshFormat { Obj, Ply };

/// Guess the format from the file extension (.obj / .ply, case-insensitive).
MeshFormat mesh_format_from_path(const std::filesystem::path& path);

/**
 * Loads an OBJ or PLY mesh. Only positions and connectivity are kept; normals,
 * texture coordinates and colours are ignored. Polygons with more than three
 * corners are fan-triangulated and reported through \p warnings when given.
 */
TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format,
                  std::vector<std::string>* warnings = nullptr);
TriMesh load_mesh(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

TriMesh read_obj(std::istream& in, std::vector<std::string>* warnings = nullptr);
TriMesh read_ply(std::istream& in, std::vector<std::string>* warnings = nullptr);

void write_obj(std::ostream& out, const TriMesh& mesh);
void write_ply(std::ostream& out, const TriMesh& mesh, bool binary = false);
void save_mesh(const std::filesystem::path& path, const TriMesh& mesh, MeshFormat format, bool binary_ply = false);
void save_mesh(const std::filesystem::path& path, const TriMesh& mesh);

/// Area-weighted vertex normals (unit length, zero for isolated vertices).
std::vector<Vec3> vertex_normals(const TriMesh& mesh);

/// True when the triangle has (numerically) zero area.
bool is_degenerate_triangle(const Vec3& a, const Vec3& b, const Vec3& c);

// ---------------------------------------------------------------------------
// Seven-point landmark scheme used for rigid alignment and region definition.

enum class Landmark : int {
    RightEyeOuter = 0,
    RightEyeInner = 1,
    LeftEyeInner = 2,
    LeftEyeOuter = 3,
    NoseBottom = 4,
    RightMouth = 5,
    LeftMouth = 6,
};

inline constexpr std::size_t kNumLandmarks = 7;

inline constexpr std::array<std::string_view, kNumLandmarks> kLandmarkNames = {
    "right_eye_outer", "right_eye_inner", "left_eye_inner", "left_eye_outer",
    "nose_bottom",     "right_mouth",     "left_mouth",
};

/**
 * Seven named points in canonical order. Two-dimensional sets keep z = 0.
 * Construction validates: all coordinates finite, four eye corners pairwise
 * distinct.
 */
class LandmarkSet7
{
public:
    LandmarkSet7(const std::array<Vec3, kNumLandmarks>& points, int dimension = 3);

    const Vec3& operator[](Landmark which) const { return points_[static_cast<std::size_t>(which)]; }
    const Vec3& at(std::size_t i) const { return points_.at(i); }
    const std::array<Vec3, kNumLandmarks>& points() const { return points_; }
    int dimension() const { return dimension_; }

    bool operator==(const LandmarkSet7& other) const = default;

private:
    std::array<Vec3, kNumLandmarks> points_;
    int dimension_;
};

/// Parses the named-row text format (`name x y [z]`) or the JSON variant
/// (object with the seven names as keys).
LandmarkSet7 parse_landmarks(std::string_view text);
LandmarkSet7 load_landmarks(const std::filesystem::path& path);
void save_landmarks(const std::filesystem::path& path, const LandmarkSet7& landmarks);
std::string format_landmarks(const LandmarkSet7& landmarks);

/**
 * 2D point lists (e.g. 68-point image landmarks). Reads the iBUG `.pts` layout
 * (`version:` / `n_points:` / `{ ... }`) or plain `x y` rows; writes `.pts`.
 */
std::vector<Vec2> parse_points2d(std::string_view text);
std::vector<Vec2> load_points2d(const std::filesystem::path& path);
void save_points2d(const std::filesystem::path& path, const std::vector<Vec2>& points);

// ---------------------------------------------------------------------------

/// x -> scale * rotation * x + translation, with a proper rotation.
struct SimilarityTransform
{
    double scale = 1.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static SimilarityTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
    SimilarityTransform inverse() const;
    /// (*this) after \p first, i.e. x -> this(first(x)).
    SimilarityTransform compose(const SimilarityTransform& first) const;

    /// Throws InvalidArgument if scale <= 0 or rotation is not proper orthonormal (1e-9).
    void validate() const;
};

/**
 * Least-squares similarity transform T minimising sum_i |T(source_i) - target_i|^2
 * (closed form via SVD of the cross-covariance, with the reflection fix so the
 * rotation is proper). Throws AlignmentDegenerate when the source points are
 * collinear or coincident.
 */
SimilarityTransform align_similarity(const LandmarkSet7& source, const LandmarkSet7& target);

/// Same estimator for arbitrary corresponding point lists (n >= 3).
SimilarityTransform align_similarity(const std::vector<Vec3>& source, const std::vector<Vec3>& target);

TriMesh apply_transform(const SimilarityTransform& t, const TriMesh& mesh);
LandmarkSet7 apply_transform(const SimilarityTransform& t, const LandmarkSet7& landmarks);

} // namespace frbench
