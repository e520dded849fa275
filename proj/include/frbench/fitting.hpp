/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: include/frbench/fitting.hpp
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

#include "Eigen/Core"

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace frbench {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Points2 = Eigen::Matrix2Xd;
using Points3 = Eigen::Matrix3Xd;

/// Number of image landmarks in the 68-point (iBUG) scheme.
inline constexpr int kNumImageLandmarks = 68;

/// Where the seven alignment landmarks sit in the 68-point scheme (0-based).
inline constexpr std::array<int, kNumLandmarks> kProtocolLandmarksIn68 = {36, 39, 42, 45, 33, 48, 54};

/**
 * Linear shape model: mean + basis * alpha + blendshapes * beta.
 *
 * Shapes are 3q-vectors with the coordinates of each vertex stored contiguously
 * (x0, y0, z0, x1, ...). The basis has orthonormal columns; eigenvalues are the
 * per-mode variances. The landmark map selects the l model vertices matching
 * the image landmarks, in image-landmark order.
 */
struct MorphableModel
{
    Vector mean;
    Matrix shape_basis;
    Vector eigenvalues;
    Matrix blendshapes;
    std::vector<int> landmark_map;
    std::vector<std::array<int, 3>> triangles;

    int vertex_count() const { return static_cast<int>(mean.size() / 3); }
    int num_modes() const { return static_cast<int>(shape_basis.cols()); }
    int num_expressions() const { return static_cast<int>(blendshapes.cols()); }
    int num_landmarks() const { return static_cast<int>(landmark_map.size()); }

    /// Throws InvalidArgument / DimensionMismatch when an invariant is broken.
    void validate() const;

    /// mean + B * alpha (+ E * beta). Empty vectors mean all-zero.
    Vector shape(const Vector& alpha, const Vector& beta = Vector()) const;
    /// The l landmark vertices of a 3q shape as a 3 x l matrix.
    Points3 landmarks(const Vector& shape) const;
    TriMesh mesh(const Vector& shape) const;
    /// The seven alignment points of a shape, read off the landmark map.
    /// Requires the 68-point scheme.
    LandmarkSet7 protocol_landmarks(const Vector& shape) const;
};

/// Binary container (little-endian) or JSON, chosen by the `.json` extension.
void save_model(const std::filesystem::path& path, const MorphableModel& model);
MorphableModel load_model(const std::filesystem::path& path);
std::vector<char> model_to_binary(const MorphableModel& model);
MorphableModel model_from_binary(const std::vector<char>& bytes);
std::string model_to_json(const MorphableModel& model);
MorphableModel model_from_json(const std::string& text);

/// Row-stacked vertex matrix <-> 3q shape vector.
Vector flatten(const std::vector<Vec3>& vertices);
std::vector<Vec3> unflatten(const Vector& shape);

// ---------------------------------------------------------------------------
// Weak-perspective camera: u = f * P * R * (X + t), P drops the third row.

struct WeakPerspectiveCamera
{
    double f = 1.0;
    Mat3 R = Mat3::Identity();
    Vec3 t = Vec3::Zero();

    void validate() const;
};

Points2 project_weak_perspective(const WeakPerspectiveCamera& cam, const Points3& points);

struct CameraEstimate
{
    WeakPerspectiveCamera camera;
    /// Root-mean-square Euclidean reprojection error.
    double residual = 0.0;
};

/**
 * Least-squares affine camera from 2D-3D correspondences, projected onto the
 * nearest scaled rotation. The depth component of t is unobservable and set so
 * that (R t).z = 0. Needs l >= 4 non-coplanar points; throws DegenerateCamera.
 */
CameraEstimate estimate_camera(const Points2& image_points, const Points3& model_points);

double reprojection_rms(const WeakPerspectiveCamera& cam, const Points3& model_points, const Points2& image_points);

// ---------------------------------------------------------------------------

struct LinearFitOptions
{
    int iterations = 5;
    double lambda = 30.0;
    /// When set, skips camera estimation and uses this camera throughout.
    std::optional<WeakPerspectiveCamera> fixed_camera;
};

struct LinearFitResult
{
    Vector alpha; ///< shape coefficients, in basis units
    Vector beta;  ///< expression coefficients
    WeakPerspectiveCamera camera; ///< camera used for the final solve
    double residual = 0.0;        ///< RMS reprojection error of the final shape
};

/**
 * Alternates camera estimation and a linear ridge solve for the shape and
 * expression coefficients:
 *
 *   min |project(cam, mean_L + B_L alpha + E_L beta) - U|^2 + lambda * sum_j alpha_j^2 / eigenvalue_j
 *
 * Expression coefficients are not regularised.
 */
LinearFitResult fit_shape_linear(const MorphableModel& model, const Points2& landmarks,
                                 const LinearFitOptions& options = {});

/// The linear system solved by one iteration of fit_shape_linear, exposed for checking.
struct RidgeSystem
{
    Matrix design;      ///< 2l x (m + e)
    Vector target;      ///< 2l
    Vector regulariser; ///< m + e diagonal weights (lambda / eigenvalue, 0 for expressions)
};
RidgeSystem linear_fit_system(const MorphableModel& model, const WeakPerspectiveCamera& cam, const Points2& landmarks,
                              double lambda);

// ---------------------------------------------------------------------------
// Cascaded regression in shape space.

/// How each image's landmarks are normalised before regression.
struct LandmarkNormalization
{
    enum class Scale {
        RmsRadius, ///< root-mean-square distance to the centroid
        OuterEyes, ///< distance between two chosen landmarks (outer eye corners)
    };
    Scale scale = Scale::RmsRadius;
    int eye_a = 36;
    int eye_b = 45;
};

struct NormalizedLandmarks
{
    Points2 points;
    Vec2 centroid = Vec2::Zero();
    double scale = 1.0;
};

NormalizedLandmarks normalize_landmarks(const Points2& landmarks, const LandmarkNormalization& norm = {});

/**
 * Concatenation of up to N per-image landmark blocks. Block i occupies entries
 * [2 l i, 2 l (i+1)) as (u0, v0, u1, v1, ...). Absent slots are exactly zero.
 */
struct LandmarkVector
{
    Vector values;
    std::vector<bool> present;
    int landmarks_per_image = 0;

    int capacity() const { return static_cast<int>(present.size()); }
    int present_count() const;
    Points2 block(int slot) const;
};

LandmarkVector assemble_landmark_vector(const std::vector<Points2>& images, int capacity,
                                        const LandmarkNormalization& norm = {});

enum class RegressionTarget {
    Vertices,     ///< W maps landmark residuals to 3q vertex updates
    Coefficients, ///< W maps landmark residuals to m shape-coefficient updates
};

struct CascadedRegressor
{
    std::vector<Matrix> stages; ///< each state_dim x 2lN
    int capacity = 1;           ///< N
    int landmarks_per_image = kNumImageLandmarks;
    RegressionTarget target = RegressionTarget::Vertices;
    LandmarkNormalization normalization;
    Vector initial_state; ///< training mean of the regressed quantity

    int num_stages() const { return static_cast<int>(stages.size()); }
    void validate() const;
};

void save_regressor(const std::filesystem::path& path, const CascadedRegressor& regressor);
CascadedRegressor load_regressor(const std::filesystem::path& path);
std::vector<char> regressor_to_binary(const CascadedRegressor& regressor);
CascadedRegressor regressor_from_binary(const std::vector<char>& bytes);

/// The current landmark estimate U^{k-1}: per present slot, fit a camera from the
/// shape's landmarks to the target block and project; absent slots stay zero.
Vector current_landmarks(const Points3& shape_landmarks, const LandmarkVector& target);

/// Runs the cascade and returns the 3q shape. Throws CascadeStage with the stage number.
Vector cascade_predict(const CascadedRegressor& regressor, const MorphableModel& model, const LandmarkVector& landmarks);

struct TrainingSample
{
    Vector shape; ///< ground-truth 3q shape
    LandmarkVector landmarks;
};

struct CascadeTrainOptions
{
    int stages = 5;
    double ridge = 1e-3;
    /// Scale ridge by trace(X X^T) / rows(X) of each stage's design, making it unit-free.
    bool trace_scaled = true;
    RegressionTarget target = RegressionTarget::Vertices;
    /// Recorded in the regressor; must match how the sample landmarks were assembled.
    LandmarkNormalization normalization;
};

struct StageStats
{
    double objective = 0.0;     ///< data term + ridge term at the solution
    double data_term = 0.0;     ///< sum_j |dS_j - W dU_j|^2
    double ridge_applied = 0.0; ///< effective ridge weight
};

struct CascadeTrainResult
{
    CascadedRegressor regressor;
    std::vector<StageStats> stages;
    double initial_error = 0.0; ///< sum_j |S*_j - S^0|^2 in the regressed space
};

CascadeTrainResult cascade_train(const std::vector<TrainingSample>& samples, const MorphableModel& model,
                                 const CascadeTrainOptions& options = {});

} // namespace frbench
