/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: src/model.cpp
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

#include "frbench/fitting.hpp"
#include "frbench/text_io.hpp"

#include "binary_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <set>

namespace frbench {

namespace {
constexpr std::string_view kModelMagic = "FRBMODEL";
constexpr std::uint32_t kModelVersion = 1;
} // namespace

void MorphableModel::validate() const
{
    const auto n = mean.size();
    if (n == 0 || n % 3 != 0)
        throw Error(ErrorCode::DimensionMismatch, "mean shape length must be a positive multiple of 3");
    if (shape_basis.rows() != n)
        throw Error(ErrorCode::DimensionMismatch, "shape basis has " + std::to_string(shape_basis.rows()) +
                                                      " rows, expected " + std::to_string(n));
    if (eigenvalues.size() != shape_basis.cols())
        throw Error(ErrorCode::DimensionMismatch, "one eigenvalue per shape mode required");
    if (blendshapes.cols() > 0 && blendshapes.rows() != n)
        throw Error(ErrorCode::DimensionMismatch, "blendshape rows must match the mean shape");
    if (!mean.allFinite() || !shape_basis.allFinite() || !eigenvalues.allFinite() || !blendshapes.allFinite())
        throw Error(ErrorCode::InvalidArgument, "model contains non-finite values");
    if (shape_basis.cols() > 0)
    {
        const Matrix gram = shape_basis.transpose() * shape_basis;
        if ((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > 1e-8)
            throw Error(ErrorCode::InvalidArgument, "shape basis columns are not orthonormal");
    }
    for (Eigen::Index j = 0; j < eigenvalues.size(); ++j)
    {
        if (!(eigenvalues[j] > 0))
            throw Error(ErrorCode::InvalidArgument, "eigenvalues must be positive");
        if (j > 0 && eigenvalues[j] > eigenvalues[j - 1])
            throw Error(ErrorCode::InvalidArgument, "eigenvalues must be non-increasing");
    }
    const int q = vertex_count();
    std::set<int> seen;
    for (int idx : landmark_map)
    {
        if (idx < 0 || idx >= q)
            throw Error(ErrorCode::IndexOutOfRange, "landmark map index " + std::to_string(idx) + " >= " + std::to_string(q));
        if (!seen.insert(idx).second)
            throw Error(ErrorCode::InvalidArgument, "landmark map repeats vertex " + std::to_string(idx));
    }
    TriMesh connectivity;
    connectivity.vertices.assign(q, Vec3::Zero());
    connectivity.triangles = triangles;
    connectivity.validate();
}

Vector MorphableModel::shape(const Vector& alpha, const Vector& beta) const
{
    Vector s = mean;
    if (alpha.size() > 0)
    {
        if (alpha.size() != shape_basis.cols())
            throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(shape_basis.cols()) +
                                                          " shape coefficients, got " + std::to_string(alpha.size()));
        s += shape_basis * alpha;
    }
    if (beta.size() > 0)
    {
        if (beta.size() != blendshapes.cols())
            throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(blendshapes.cols()) +
                                                          " expression coefficients, got " + std::to_string(beta.size()));
        s += blendshapes * beta;
    }
    return s;
}

Points3 MorphableModel::landmarks(const Vector& shape) const
{
    if (shape.size() != mean.size())
        throw Error(ErrorCode::DimensionMismatch, "shape vector length does not match the model");
    Points3 out(3, static_cast<Eigen::Index>(landmark_map.size()));
    for (std::size_t i = 0; i < landmark_map.size(); ++i)
        out.col(static_cast<Eigen::Index>(i)) = shape.segment<3>(3 * landmark_map[i]);
    return out;
}

TriMesh MorphableModel::mesh(const Vector& shape) const
{
    if (shape.size() != mean.size())
        throw Error(ErrorCode::DimensionMismatch, "shape vector length does not match the model");
    TriMesh m;
    m.vertices = unflatten(shape);
    m.triangles = triangles;
    return m;
}

LandmarkSet7 MorphableModel::protocol_landmarks(const Vector& shape) const
{
    if (num_landmarks() != kNumImageLandmarks)
        throw Error(ErrorCode::DimensionMismatch, "protocol landmarks need the 68-point landmark map");
    std::array<Vec3, kNumLandmarks> pts;
    for (std::size_t i = 0; i < kNumLandmarks; ++i)
        pts[i] = shape.segment<3>(3 * landmark_map[kProtocolLandmarksIn68[i]]);
    return LandmarkSet7(pts, 3);
}

Vector flatten(const std::vector<Vec3>& vertices)
{
    Vector s(3 * static_cast<Eigen::Index>(vertices.size()));
    for (std::size_t v = 0; v < vertices.size(); ++v)
        s.segment<3>(3 * static_cast<Eigen::Index>(v)) = vertices[v];
    return s;
}

std::vector<Vec3> unflatten(const Vector& shape)
{
    if (shape.size() % 3 != 0)
        throw Error(ErrorCode::DimensionMismatch, "shape vector length must be a multiple of 3");
    std::vector<Vec3> v(static_cast<std::size_t>(shape.size() / 3));
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = shape.segment<3>(3 * static_cast<Eigen::Index>(i));
    return v;
}

// ---------------------------------------------------------------------------
// Binary layout (all little-endian):
//   "FRBMODEL" u32 version u32 reserved
//   u64 q, m, e, l, t
//   f64 mean[3q], basis[3q*m] (column-major), eigenvalues[m], blendshapes[3q*e] (column-major)
//   u32 landmark_map[l], u32 triangles[3t]

std::vector<char> model_to_binary(const MorphableModel& model)
{
    model.validate();
    detail::ByteWriter w;
    w.magic(kModelMagic);
    w.put<std::uint32_t>(kModelVersion);
    w.put<std::uint32_t>(0);
    w.put<std::uint64_t>(static_cast<std::uint64_t>(model.vertex_count()));
    w.put<std::uint64_t>(static_cast<std::uint64_t>(model.num_modes()));
    w.put<std::uint64_t>(static_cast<std::uint64_t>(model.num_expressions()));
    w.put<std::uint64_t>(model.landmark_map.size());
    w.put<std::uint64_t>(model.triangles.size());
    w.put_doubles(model.mean.reshaped());
    w.put_doubles(model.shape_basis.reshaped());
    w.put_doubles(model.eigenvalues.reshaped());
    w.put_doubles(model.blendshapes.reshaped());
    for (int idx : model.landmark_map)
        w.put<std::uint32_t>(static_cast<std::uint32_t>(idx));
    for (const auto& t : model.triangles)
        for (int idx : t)
            w.put<std::uint32_t>(static_cast<std::uint32_t>(idx));
    return w.take();
}

MorphableModel model_from_binary(const std::vector<char>& bytes)
{
    detail::ByteReader r(bytes, "model");
    r.expect_magic(kModelMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kModelVersion)
        throw Error(ErrorCode::UnsupportedFormat, "model container version " + std::to_string(version));
    r.get<std::uint32_t>();
    const auto q = static_cast<Eigen::Index>(r.get_count(24));
    const auto m = static_cast<Eigen::Index>(r.get_count(8));
    const auto e = static_cast<Eigen::Index>(r.get_count(8));
    const auto l = r.get_count(4);
    const auto t = r.get_count(12);
    auto read_matrix = [&r](Eigen::Index rows, Eigen::Index cols) {
        Matrix mat(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index i = 0; i < rows; ++i)
                mat(i, c) = r.get<double>();
        return mat;
    };
    MorphableModel model;
    model.mean = read_matrix(3 * q, 1);
    model.shape_basis = read_matrix(3 * q, m);
    model.eigenvalues = read_matrix(m, 1);
    model.blendshapes = read_matrix(3 * q, e);
    model.landmark_map.resize(l);
    for (auto& idx : model.landmark_map)
        idx = static_cast<int>(r.get<std::uint32_t>());
    model.triangles.resize(t);
    for (auto& tri : model.triangles)
        for (auto& idx : tri)
            idx = static_cast<int>(r.get<std::uint32_t>());
    r.expect_end();
    model.validate();
    return model;
}

std::string model_to_json(const MorphableModel& model)
{
    model.validate();
    using nlohmann::json;
    auto columns = [](const Matrix& m) {
        json cols = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            cols.push_back(std::vector<double>(m.col(c).begin(), m.col(c).end()));
        return cols;
    };
    json j;
    j["format"] = "frbench-morphable-model";
    j["version"] = kModelVersion;
    j["vertex_count"] = model.vertex_count();
    j["mean"] = std::vector<double>(model.mean.begin(), model.mean.end());
    j["shape_basis"] = columns(model.shape_basis);
    j["eigenvalues"] = std::vector<double>(model.eigenvalues.begin(), model.eigenvalues.end());
    j["blendshapes"] = columns(model.blendshapes);
    j["landmark_map"] = model.landmark_map;
    j["triangles"] = model.triangles;
    return j.dump() + '\n';
}

MorphableModel model_from_json(const std::string& text)
{
    using nlohmann::json;
    MorphableModel model;
    try
    {
        const json j = json::parse(text);
        if (j.value("format", "") != "frbench-morphable-model")
            throw Error(ErrorCode::Parse, "not a frbench morphable model JSON document");
        const auto q = j.at("vertex_count").get<Eigen::Index>();
        auto vec = [](const json& a) {
            const auto v = a.get<std::vector<double>>();
            return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
        };
        auto columns = [q](const json& a) {
            Matrix m(3 * q, static_cast<Eigen::Index>(a.size()));
            for (std::size_t c = 0; c < a.size(); ++c)
            {
                const auto v = a[c].get<std::vector<double>>();
                if (static_cast<Eigen::Index>(v.size()) != 3 * q)
                    throw Error(ErrorCode::DimensionMismatch, "basis column length mismatch");
                m.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Vector>(v.data(), 3 * q);
            }
            return m;
        };
        model.mean = vec(j.at("mean"));
        model.shape_basis = columns(j.at("shape_basis"));
        model.eigenvalues = vec(j.at("eigenvalues"));
        model.blendshapes = columns(j.at("blendshapes"));
        model.landmark_map = j.at("landmark_map").get<std::vector<int>>();
        model.triangles = j.at("triangles").get<std::vector<std::array<int, 3>>>();
    } catch (const json::exception& e)
    {
        throw Error(ErrorCode::Parse, std::string("model JSON: ") + e.what());
    }
    model.validate();
    return model;
}

void save_model(const std::filesystem::path& path, const MorphableModel& model)
{
    if (path.extension() == ".json")
        write_text_file(path, model_to_json(model));
    else
        write_binary_file(path, model_to_binary(model));
}

MorphableModel load_model(const std::filesystem::path& path)
{
    try
    {
        if (path.extension() == ".json")
            return model_from_json(read_text_file(path));
        return model_from_binary(read_binary_file(path));
    } catch (const Error& e)
    {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

} // namespace frbench
