/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: src/cascade.cpp
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

#include "Eigen/Dense"
#include "Eigen/SVD"

#include <cmath>

namespace frbench {

NormalizedLandmarks normalize_landmarks(const Points2& landmarks, const LandmarkNormalization& norm)
{
    if (landmarks.cols() == 0)
        throw Error(ErrorCode::EmptyInput, "no landmarks to normalise");
    if (!landmarks.allFinite())
        throw Error(ErrorCode::InvalidArgument, "non-finite image landmarks");
    NormalizedLandmarks out;
    out.centroid = landmarks.rowwise().mean();
    const Points2 centred = landmarks.colwise() - out.centroid;
    if (norm.scale == LandmarkNormalization::Scale::RmsRadius)
    {
        out.scale = std::sqrt(centred.colwise().squaredNorm().mean());
    }
    else
    {
        if (norm.eye_a < 0 || norm.eye_b < 0 || norm.eye_a >= landmarks.cols() || norm.eye_b >= landmarks.cols())
            throw Error(ErrorCode::IndexOutOfRange, "normalisation landmark index out of range");
        out.scale = (landmarks.col(norm.eye_a) - landmarks.col(norm.eye_b)).norm();
    }
    if (!(out.scale > 0))
        throw Error(ErrorCode::DegenerateLandmarks, "landmark normalisation scale is zero");
    out.points = centred / out.scale;
    return out;
}

int LandmarkVector::present_count() const
{
    int n = 0;
    for (bool p : present)
        n += p ? 1 : 0;
    return n;
}

Points2 LandmarkVector::block(int slot) const
{
    const Eigen::Index len = 2 * static_cast<Eigen::Index>(landmarks_per_image);
    return values.segment(slot * len, len).reshaped(2, landmarks_per_image);
}

LandmarkVector assemble_landmark_vector(const std::vector<Points2>& images, int capacity,
                                        const LandmarkNormalization& norm)
{
    if (images.empty())
        throw Error(ErrorCode::EmptyInput, "at least one image is required");
    if (capacity < 1)
        throw Error(ErrorCode::InvalidArgument, "capacity must be at least 1");
    if (static_cast<int>(images.size()) > capacity)
        throw Error(ErrorCode::Capacity, std::to_string(images.size()) + " images exceed the capacity of " +
                                             std::to_string(capacity));
    const auto l = images.front().cols();
    LandmarkVector out;
    out.landmarks_per_image = static_cast<int>(l);
    out.present.assign(static_cast<std::size_t>(capacity), false);
    out.values = Vector::Zero(2 * l * capacity);
    for (std::size_t i = 0; i < images.size(); ++i)
    {
        if (images[i].cols() != l)
            throw Error(ErrorCode::DimensionMismatch, "images have different landmark counts");
        const auto normalized = normalize_landmarks(images[i], norm);
        out.values.segment(static_cast<Eigen::Index>(i) * 2 * l, 2 * l) = normalized.points.reshaped();
        out.present[i] = true;
    }
    return out;
}

void CascadedRegressor::validate() const
{
    if (capacity < 1)
        throw Error(ErrorCode::InvalidArgument, "regressor capacity must be at least 1");
    if (landmarks_per_image < 1)
        throw Error(ErrorCode::InvalidArgument, "regressor needs at least one landmark per image");
    const Eigen::Index cols = 2 * static_cast<Eigen::Index>(landmarks_per_image) * capacity;
    for (const auto& w : stages)
    {
        if (w.rows() != initial_state.size() || w.cols() != cols)
            throw Error(ErrorCode::DimensionMismatch, "stage matrices must be " + std::to_string(initial_state.size()) +
                                                          " x " + std::to_string(cols));
    }
}

Vector current_landmarks(const Points3& shape_landmarks, const LandmarkVector& target)
{
    const Eigen::Index len = 2 * static_cast<Eigen::Index>(target.landmarks_per_image);
    Vector out = Vector::Zero(target.values.size());
    for (int slot = 0; slot < target.capacity(); ++slot)
    {
        if (!target.present[slot])
            continue;
        const Points2 goal = target.block(slot);
        const auto cam = estimate_camera(goal, shape_landmarks).camera;
        out.segment(slot * len, len) = project_weak_perspective(cam, shape_landmarks).reshaped();
    }
    return out;
}

namespace {

void check_compatible(const CascadedRegressor& reg, const MorphableModel& model, const LandmarkVector& lv)
{
    if (lv.landmarks_per_image != reg.landmarks_per_image || lv.capacity() != reg.capacity)
        throw Error(ErrorCode::DimensionMismatch, "landmark vector layout does not match the regressor");
    if (model.num_landmarks() != reg.landmarks_per_image)
        throw Error(ErrorCode::DimensionMismatch, "model landmark map does not match the regressor");
    const Eigen::Index expected_state =
        reg.target == RegressionTarget::Vertices ? model.mean.size() : static_cast<Eigen::Index>(model.num_modes());
    if (reg.initial_state.size() != expected_state)
        throw Error(ErrorCode::DimensionMismatch, "regressor state size does not match the model");
}

Vector state_to_shape(const Vector& state, RegressionTarget target, const MorphableModel& model)
{
    return target == RegressionTarget::Vertices ? state : model.shape(state);
}

} // namespace

Vector cascade_predict(const CascadedRegressor& regressor, const MorphableModel& model, const LandmarkVector& landmarks)
{
    regressor.validate();
    check_compatible(regressor, model, landmarks);
    Vector state = regressor.initial_state;
    for (int k = 0; k < regressor.num_stages(); ++k)
    {
        Vector projected;
        try
        {
            projected = current_landmarks(model.landmarks(state_to_shape(state, regressor.target, model)), landmarks);
        } catch (const Error& e)
        {
            throw Error(ErrorCode::CascadeStage, "stage " + std::to_string(k + 1) + ": " + e.detail());
        }
        state += regressor.stages[k] * (landmarks.values - projected);
    }
    return state_to_shape(state, regressor.target, model);
}

CascadeTrainResult cascade_train(const std::vector<TrainingSample>& samples, const MorphableModel& model,
                                 const CascadeTrainOptions& options)
{
    if (samples.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "cascade training needs at least 2 samples");
    if (options.stages < 0)
        throw Error(ErrorCode::InvalidArgument, "stage count must be non-negative");
    if (!(options.ridge > 0) || !std::isfinite(options.ridge))
        throw Error(ErrorCode::InvalidArgument, "ridge must be positive");

    const auto& first = samples.front().landmarks;
    CascadeTrainResult result;
    CascadedRegressor& reg = result.regressor;
    reg.capacity = first.capacity();
    reg.landmarks_per_image = first.landmarks_per_image;
    reg.target = options.target;
    reg.normalization = options.normalization;
    if (model.num_landmarks() != reg.landmarks_per_image)
        throw Error(ErrorCode::DimensionMismatch, "model landmark map does not match the training landmarks");

    const auto n = static_cast<Eigen::Index>(samples.size());
    const Eigen::Index in_dim = first.values.size();
    const Eigen::Index state_dim =
        options.target == RegressionTarget::Vertices ? model.mean.size() : static_cast<Eigen::Index>(model.num_modes());

    Matrix goals(state_dim, n);
    for (Eigen::Index j = 0; j < n; ++j)
    {
        const auto& s = samples[static_cast<std::size_t>(j)];
        if (s.shape.size() != model.mean.size())
            throw Error(ErrorCode::DimensionMismatch, "sample " + std::to_string(j) + " shape length mismatch");
        if (s.landmarks.values.size() != in_dim || s.landmarks.capacity() != reg.capacity ||
            s.landmarks.landmarks_per_image != reg.landmarks_per_image)
            throw Error(ErrorCode::DimensionMismatch, "sample " + std::to_string(j) + " landmark layout mismatch");
        goals.col(j) = options.target == RegressionTarget::Vertices
                           ? s.shape
                           : Vector(model.shape_basis.transpose() * (s.shape - model.mean));
    }
    reg.initial_state = goals.rowwise().mean();

    Matrix states = reg.initial_state.replicate(1, n);
    result.initial_error = (goals - states).squaredNorm();

    Matrix inputs(in_dim, n);
    for (int k = 0; k < options.stages; ++k)
    {
        for (Eigen::Index j = 0; j < n; ++j)
        {
            const auto& lv = samples[static_cast<std::size_t>(j)].landmarks;
            try
            {
                const Points3 sl = model.landmarks(state_to_shape(states.col(j), reg.target, model));
                inputs.col(j) = lv.values - current_landmarks(sl, lv);
            } catch (const Error& e)
            {
                throw Error(ErrorCode::CascadeStage,
                            "stage " + std::to_string(k + 1) + ", sample " + std::to_string(j) + ": " + e.detail());
            }
        }
        const Matrix residuals = goals - states;

        StageStats stats;
        stats.ridge_applied =
            options.trace_scaled ? options.ridge * inputs.squaredNorm() / static_cast<double>(in_dim) : options.ridge;

        // Ridge solution through the SVD of the inputs: W = Y V diag(s / (s^2 + r)) U^T.
        Matrix w = Matrix::Zero(state_dim, in_dim);
        if (stats.ridge_applied > 0)
        {
            const Eigen::BDCSVD<Matrix> svd(inputs, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const Vector s = svd.singularValues();
            const Vector gain = s.array() / (s.array().square() + stats.ridge_applied);
            w = (residuals * svd.matrixV()) * gain.asDiagonal() * svd.matrixU().transpose();
        }

        const Matrix update = w * inputs;
        stats.data_term = (residuals - update).squaredNorm();
        stats.objective = stats.data_term + stats.ridge_applied * w.squaredNorm();
        states += update;
        reg.stages.push_back(std::move(w));
        result.stages.push_back(stats);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Binary layout (little-endian):
//   "FRBCASCD" u32 version u32 target(0 vertices, 1 coefficients)
//   u32 normalisation(0 rms radius, 1 outer eyes) u32 eye_a u32 eye_b u32 reserved
//   u64 K, N, l, state_dim
//   f64 initial_state[state_dim]
//   K x f64 W[state_dim * 2lN] (column-major)

namespace {
constexpr std::string_view kRegressorMagic = "FRBCASCD";
constexpr std::uint32_t kRegressorVersion = 1;
} // namespace

std::vector<char> regressor_to_binary(const CascadedRegressor& regressor)
{
    regressor.validate();
    detail::ByteWriter w;
    w.magic(kRegressorMagic);
    w.put<std::uint32_t>(kRegressorVersion);
    w.put<std::uint32_t>(regressor.target == RegressionTarget::Vertices ? 0u : 1u);
    w.put<std::uint32_t>(regressor.normalization.scale == LandmarkNormalization::Scale::RmsRadius ? 0u : 1u);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(regressor.normalization.eye_a));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(regressor.normalization.eye_b));
    w.put<std::uint32_t>(0);
    w.put<std::uint64_t>(regressor.stages.size());
    w.put<std::uint64_t>(static_cast<std::uint64_t>(regressor.capacity));
    w.put<std::uint64_t>(static_cast<std::uint64_t>(regressor.landmarks_per_image));
    w.put<std::uint64_t>(static_cast<std::uint64_t>(regressor.initial_state.size()));
    w.put_doubles(regressor.initial_state);
    for (const auto& stage : regressor.stages)
        w.put_doubles(stage.reshaped());
    return w.take();
}

CascadedRegressor regressor_from_binary(const std::vector<char>& bytes)
{
    detail::ByteReader r(bytes, "regressor");
    r.expect_magic(kRegressorMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kRegressorVersion)
        throw Error(ErrorCode::UnsupportedFormat, "regressor container version " + std::to_string(version));
    CascadedRegressor reg;
    const auto target = r.get<std::uint32_t>();
    const auto norm = r.get<std::uint32_t>();
    if (target > 1 || norm > 1)
        throw Error(ErrorCode::Parse, "regressor: unknown target or normalisation code");
    reg.target = target == 0 ? RegressionTarget::Vertices : RegressionTarget::Coefficients;
    reg.normalization.scale = norm == 0 ? LandmarkNormalization::Scale::RmsRadius : LandmarkNormalization::Scale::OuterEyes;
    reg.normalization.eye_a = static_cast<int>(r.get<std::uint32_t>());
    reg.normalization.eye_b = static_cast<int>(r.get<std::uint32_t>());
    r.get<std::uint32_t>();
    const auto k = r.get_count(0);
    reg.capacity = static_cast<int>(r.get_count(0));
    reg.landmarks_per_image = static_cast<int>(r.get_count(0));
    const auto state_dim = static_cast<Eigen::Index>(r.get_count(8));
    const Eigen::Index cols = 2 * static_cast<Eigen::Index>(reg.landmarks_per_image) * reg.capacity;
    if (k > 0 && static_cast<std::uint64_t>(state_dim * cols) * k * 8 > bytes.size())
        throw Error(ErrorCode::Parse, "regressor: declared stage sizes exceed file length");
    reg.initial_state.resize(state_dim);
    for (Eigen::Index i = 0; i < state_dim; ++i)
        reg.initial_state[i] = r.get<double>();
    for (std::uint64_t s = 0; s < k; ++s)
    {
        Matrix w(state_dim, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index i = 0; i < state_dim; ++i)
                w(i, c) = r.get<double>();
        reg.stages.push_back(std::move(w));
    }
    r.expect_end();
    reg.validate();
    return reg;
}

void save_regressor(const std::filesystem::path& path, const CascadedRegressor& regressor)
{
    write_binary_file(path, regressor_to_binary(regressor));
}

CascadedRegressor load_regressor(const std::filesystem::path& path)
{
    try
    {
        return regressor_from_binary(read_binary_file(path));
    } catch (const Error& e)
    {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

} // namespace frbench
