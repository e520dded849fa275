/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: src/geometry.cpp
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

#include "frbench/geometry.hpp"
#include "frbench/text_io.hpp"

#include "Eigen/Dense"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace frbench {

bool is_degenerate_triangle(const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 ab = b - a, ac = c - a, bc = c - b;
    const double longest = std::max({ab.squaredNorm(), ac.squaredNorm(), bc.squaredNorm()});
    const double twice_area = ab.cross(ac).norm();
    return !(twice_area > 1e-12 * longest) || !std::isfinite(twice_area);
}

std::vector<Vec3> vertex_normals(const TriMesh& mesh)
{
    std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
    for (const auto& t : mesh.triangles)
    {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        const Vec3 n = (b - a).cross(c - a); // length = 2 * area
        for (int idx : t)
            normals[idx] += n;
    }
    for (auto& n : normals)
    {
        const double len = n.norm();
        if (len > 0)
            n /= len;
    }
    return normals;
}

// ---------------------------------------------------------------------------

LandmarkSet7::LandmarkSet7(const std::array<Vec3, kNumLandmarks>& points, int dimension)
    : points_(points), dimension_(dimension)
{
    if (dimension != 2 && dimension != 3)
        throw Error(ErrorCode::InvalidLandmarks, "dimension must be 2 or 3");
    for (std::size_t i = 0; i < kNumLandmarks; ++i)
    {
        if (!points_[i].allFinite())
            throw Error(ErrorCode::InvalidLandmarks, std::string(kLandmarkNames[i]) + " is not finite");
        if (dimension == 2)
            points_[i].z() = 0.0;
    }
    for (std::size_t i = 0; i < 4; ++i)
    {
        for (std::size_t j = i + 1; j < 4; ++j)
        {
            if (points_[i] == points_[j])
            {
                throw Error(ErrorCode::InvalidLandmarks, std::string(kLandmarkNames[i]) + " and " +
                                                             std::string(kLandmarkNames[j]) + " coincide");
            }
        }
    }
}

namespace {

std::optional<std::size_t> landmark_index(std::string_view name)
{
    for (std::size_t i = 0; i < kNumLandmarks; ++i)
    {
        if (kLandmarkNames[i] == name)
            return i;
    }
    return std::nullopt;
}

LandmarkSet7 parse_landmarks_json(std::string_view text)
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e)
    {
        throw Error(ErrorCode::Parse, std::string("landmark JSON: ") + e.what());
    }
    if (!j.is_object())
        throw Error(ErrorCode::Parse, "landmark JSON must be an object");
    if (j.size() != kNumLandmarks)
    {
        throw Error(ErrorCode::InvalidLandmarks, "expected 7 landmarks, found " + std::to_string(j.size()));
    }
    std::array<Vec3, kNumLandmarks> pts;
    int dim = -1;
    for (auto it = j.begin(); it != j.end(); ++it)
    {
        const auto idx = landmark_index(it.key());
        if (!idx)
            throw Error(ErrorCode::InvalidLandmarks, "unknown landmark name '" + it.key() + "'");
        const auto& arr = it.value();
        if (!arr.is_array() || (arr.size() != 2 && arr.size() != 3))
            throw Error(ErrorCode::Parse, "landmark '" + it.key() + "' must be an array of 2 or 3 numbers");
        const int this_dim = static_cast<int>(arr.size());
        if (dim >= 0 && dim != this_dim)
            throw Error(ErrorCode::InvalidLandmarks, "mixed 2D/3D landmark rows");
        dim = this_dim;
        Vec3 p = Vec3::Zero();
        for (int k = 0; k < this_dim; ++k)
        {
            if (!arr[k].is_number())
                throw Error(ErrorCode::Parse, "non-numeric coordinate for '" + it.key() + "'");
            p[k] = arr[k].get<double>();
        }
        pts[*idx] = p;
    }
    return LandmarkSet7(pts, dim);
}

} // namespace

LandmarkSet7 parse_landmarks(std::string_view text)
{
    const auto body = trim(text);
    if (!body.empty() && body.front() == '{')
        return parse_landmarks_json(body);

    std::array<Vec3, kNumLandmarks> pts;
    std::array<bool, kNumLandmarks> seen{};
    std::size_t rows = 0;
    int dim = -1;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line))
    {
        ++line_no;
        const auto tokens = split_whitespace(line);
        if (tokens.empty() || tokens[0].front() == '#')
            continue;
        const auto where = " (line " + std::to_string(line_no) + ")";
        if (tokens.size() != 3 && tokens.size() != 4)
            throw Error(ErrorCode::Parse, "expected 'name x y [z]'" + where);
        const auto idx = landmark_index(tokens[0]);
        if (!idx)
            throw Error(ErrorCode::InvalidLandmarks, "unknown landmark name '" + std::string(tokens[0]) + "'" + where);
        if (seen[*idx])
            throw Error(ErrorCode::InvalidLandmarks, "duplicate landmark '" + std::string(tokens[0]) + "'" + where);
        const int this_dim = static_cast<int>(tokens.size()) - 1;
        if (dim >= 0 && dim != this_dim)
            throw Error(ErrorCode::InvalidLandmarks, "mixed 2D/3D landmark rows" + where);
        dim = this_dim;
        Vec3 p = Vec3::Zero();
        for (int k = 0; k < this_dim; ++k)
        {
            if (!parse_double(tokens[k + 1], p[k]))
                throw Error(ErrorCode::Parse, "non-numeric coordinate '" + std::string(tokens[k + 1]) + "'" + where);
        }
        pts[*idx] = p;
        seen[*idx] = true;
        ++rows;
    }
    if (rows != kNumLandmarks)
        throw Error(ErrorCode::InvalidLandmarks, "expected 7 landmarks, found " + std::to_string(rows));
    return LandmarkSet7(pts, dim);
}

LandmarkSet7 load_landmarks(const std::filesystem::path& path)
{
    const auto text = read_text_file(path);
    try
    {
        return parse_landmarks(text);
    } catch (const Error& e)
    {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

std::string format_landmarks(const LandmarkSet7& landmarks)
{
    std::string out;
    for (std::size_t i = 0; i < kNumLandmarks; ++i)
    {
        const Vec3& p = landmarks.at(i);
        out += std::string(kLandmarkNames[i]) + ' ' + format_double(p.x()) + ' ' + format_double(p.y());
        if (landmarks.dimension() == 3)
            out += ' ' + format_double(p.z());
        out += '\n';
    }
    return out;
}

void save_landmarks(const std::filesystem::path& path, const LandmarkSet7& landmarks)
{
    write_text_file(path, format_landmarks(landmarks));
}

std::vector<Vec2> parse_points2d(std::string_view text)
{
    std::vector<Vec2> points;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> declared;
    while (std::getline(in, line))
    {
        ++line_no;
        const auto tokens = split_whitespace(line);
        if (tokens.empty() || tokens[0].front() == '#' || tokens[0] == "{" || tokens[0] == "}")
            continue;
        if (tokens[0] == "version:")
            continue;
        if (tokens[0] == "n_points:")
        {
            double n = 0;
            if (tokens.size() != 2 || !parse_double(tokens[1], n) || n < 0 || n != std::floor(n))
                throw Error(ErrorCode::Parse, "bad n_points line (line " + std::to_string(line_no) + ")");
            declared = static_cast<std::size_t>(n);
            continue;
        }
        if (tokens.size() != 2)
            throw Error(ErrorCode::Parse, "expected 'x y' (line " + std::to_string(line_no) + ")");
        Vec2 p;
        if (!parse_double(tokens[0], p.x()) || !parse_double(tokens[1], p.y()))
            throw Error(ErrorCode::Parse, "non-numeric coordinate (line " + std::to_string(line_no) + ")");
        points.push_back(p);
    }
    if (declared && *declared != points.size())
    {
        throw Error(ErrorCode::Parse, "n_points declares " + std::to_string(*declared) + " but file has " +
                                          std::to_string(points.size()));
    }
    return points;
}

std::vector<Vec2> load_points2d(const std::filesystem::path& path)
{
    const auto text = read_text_file(path);
    try
    {
        return parse_points2d(text);
    } catch (const Error& e)
    {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

void save_points2d(const std::filesystem::path& path, const std::vector<Vec2>& points)
{
    std::string out = "version: 1\nn_points: " + std::to_string(points.size()) + "\n{\n";
    for (const auto& p : points)
        out += format_double(p.x()) + ' ' + format_double(p.y()) + '\n';
    out += "}\n";
    write_text_file(path, out);
}

// ---------------------------------------------------------------------------

SimilarityTransform SimilarityTransform::inverse() const
{
    SimilarityTransform inv;
    inv.scale = 1.0 / scale;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.scale * (inv.rotation * translation));
    return inv;
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& first) const
{
    SimilarityTransform out;
    out.scale = scale * first.scale;
    out.rotation = rotation * first.rotation;
    out.translation = scale * (rotation * first.translation) + translation;
    return out;
}

void SimilarityTransform::validate() const
{
    if (!(scale > 0) || !std::isfinite(scale))
        throw Error(ErrorCode::InvalidArgument, "similarity scale must be positive");
    if ((rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
        std::abs(rotation.determinant() - 1.0) > 1e-9)
    {
        throw Error(ErrorCode::InvalidArgument, "rotation is not a proper orthonormal matrix");
    }
    if (!translation.allFinite())
        throw Error(ErrorCode::InvalidArgument, "translation is not finite");
}

SimilarityTransform align_similarity(const std::vector<Vec3>& source, const std::vector<Vec3>& target)
{
    if (source.size() != target.size())
        throw Error(ErrorCode::DimensionMismatch, "source and target point counts differ");
    const auto n = static_cast<Eigen::Index>(source.size());
    if (n < 3)
        throw Error(ErrorCode::AlignmentDegenerate, "need at least 3 point pairs");

    Eigen::Matrix3Xd src(3, n), dst(3, n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        src.col(i) = source[i];
        dst.col(i) = target[i];
    }
    const Vec3 src_mean = src.rowwise().mean();
    const Vec3 dst_mean = dst.rowwise().mean();
    src.colwise() -= src_mean;
    dst.colwise() -= dst_mean;

    // A rank-deficient centred source leaves the rotation about its line free.
    const Eigen::JacobiSVD<Eigen::Matrix3Xd> src_svd(src);
    const Vec3 sv = src_svd.singularValues();
    if (!(sv[0] > 0) || sv[1] <= 1e-10 * sv[0])
        throw Error(ErrorCode::AlignmentDegenerate, "source landmarks are collinear or coincident");

    // Identical point sets: return the exact identity rather than an SVD round-off.
    if (source == target)
        return SimilarityTransform{};

    const double src_var = src.squaredNorm() / static_cast<double>(n);
    const Mat3 cov = dst * src.transpose() / static_cast<double>(n);
    const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec3 signs = Vec3::Ones();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0)
        signs[2] = -1.0;

    SimilarityTransform t;
    t.rotation = svd.matrixU() * signs.asDiagonal() * svd.matrixV().transpose();
    t.scale = svd.singularValues().dot(signs) / src_var;
    if (!(t.scale > 0))
        throw Error(ErrorCode::AlignmentDegenerate, "target landmarks collapse to a point");
    t.translation = dst_mean - t.scale * (t.rotation * src_mean);
    return t;
}

SimilarityTransform align_similarity(const LandmarkSet7& source, const LandmarkSet7& target)
{
    if (source.dimension() != 3 || target.dimension() != 3)
        throw Error(ErrorCode::InvalidArgument, "similarity alignment needs 3D landmarks");
    const std::vector<Vec3> src(source.points().begin(), source.points().end());
    const std::vector<Vec3> dst(target.points().begin(), target.points().end());
    return align_similarity(src, dst);
}

TriMesh apply_transform(const SimilarityTransform& t, const TriMesh& mesh)
{
    TriMesh out;
    out.triangles = mesh.triangles;
    out.vertices.reserve(mesh.vertices.size());
    for (const auto& v : mesh.vertices)
        out.vertices.push_back(t.apply(v));
    return out;
}

LandmarkSet7 apply_transform(const SimilarityTransform& t, const LandmarkSet7& landmarks)
{
    std::array<Vec3, kNumLandmarks> pts;
    for (std::size_t i = 0; i < kNumLandmarks; ++i)
        pts[i] = t.apply(landmarks.at(i));
    return LandmarkSet7(pts, 3);
}

} // namespace frbench
