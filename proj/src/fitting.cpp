/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: src/fitting.cpp
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

#include "Eigen/Dense"

#include <cmath>

namespace frbench {

void WeakPerspectiveCamera::validate() const
{
    if (!(f > 0) || !std::isfinite(f))
        throw Error(ErrorCode::InvalidArgument, "camera scale must be positive");
    if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 || std::abs(R.determinant() - 1.0) > 1e-9)
        throw Error(ErrorCode::InvalidArgument, "camera rotation is not a proper rotation");
    if (!t.allFinite())
        throw Error(ErrorCode::InvalidArgument, "camera translation is not finite");
}

Points2 project_weak_perspective(const WeakPerspectiveCamera& cam, const Points3& points)
{
    const Eigen::Matrix<double, 2, 3> fpr = cam.f * cam.R.topRows<2>();
    return fpr * (points.colwise() + cam.t);
}

double reprojection_rms(const WeakPerspectiveCamera& cam, const Points3& model_points, const Points2& image_points)
{
    if (model_points.cols() == 0)
        return 0.0;
    const Points2 diff = project_weak_perspective(cam, model_points) - image_points;
    return std::sqrt(diff.colwise().squaredNorm().mean());
}

CameraEstimate estimate_camera(const Points2& image_points, const Points3& model_points)
{
    const Eigen::Index l = model_points.cols();
    if (image_points.cols() != l)
        throw Error(ErrorCode::DimensionMismatch, "2D and 3D landmark counts differ");
    if (l < 4)
        throw Error(ErrorCode::DegenerateCamera, "camera estimation needs at least 4 correspondences");
    if (!image_points.allFinite() || !model_points.allFinite())
        throw Error(ErrorCode::InvalidArgument, "non-finite landmark coordinates");

    // Affine camera on centred coordinates: U_c = M S_c, with the offset recovered from the means.
    const Vec3 model_mean = model_points.rowwise().mean();
    const Vec2 image_mean = image_points.rowwise().mean();
    const Points3 sc = model_points.colwise() - model_mean;
    const Points2 uc = image_points.colwise() - image_mean;

    const Mat3 normal = sc * sc.transpose();
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(normal);
    const Vec3 ev = eig.eigenvalues();
    if (!(ev[2] > 0) || ev[0] <= 1e-12 * ev[2])
        throw Error(ErrorCode::DegenerateCamera, "model landmarks are coplanar or coincident");
    const Eigen::Matrix<double, 2, 3> affine = (uc * sc.transpose()) * normal.inverse();

    // Nearest scaled rotation: M = U S V^T  ->  rows of U V^T, scale = mean singular value.
    const Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> svd(affine, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double f = svd.singularValues().mean();
    if (!(f > 0))
        throw Error(ErrorCode::DegenerateCamera, "image landmarks collapse to a point");
    const Eigen::Matrix<double, 2, 3> rows = svd.matrixU() * svd.matrixV().leftCols<2>().transpose();

    WeakPerspectiveCamera cam;
    cam.f = f;
    cam.R.row(0) = rows.row(0);
    cam.R.row(1) = rows.row(1);
    cam.R.row(2) = rows.row(0).cross(rows.row(1));

    // 2D offset o = mean(U) - f P R mean(S); t = R^T (o / f, 0) so that f P R t = o.
    const Vec2 offset = image_mean - f * (cam.R.topRows<2>() * model_mean);
    cam.t = cam.R.transpose() * Vec3(offset.x() / f, offset.y() / f, 0.0);

    return {cam, reprojection_rms(cam, model_points, image_points)};
}

// ---------------------------------------------------------------------------

RidgeSystem linear_fit_system(const MorphableModel& model, const WeakPerspectiveCamera& cam, const Points2& landmarks,
                              double lambda)
{
    const int l = model.num_landmarks();
    const int m = model.num_modes();
    const int e = model.num_expressions();
    if (landmarks.cols() != l)
        throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(l) + " image landmarks, got " +
                                                      std::to_string(landmarks.cols()));
    const Eigen::Matrix<double, 2, 3> fpr = cam.f * cam.R.topRows<2>();

    RidgeSystem sys;
    sys.design.resize(2 * l, m + e);
    sys.target.resize(2 * l);
    for (int i = 0; i < l; ++i)
    {
        const Eigen::Index row = 3 * static_cast<Eigen::Index>(model.landmark_map[i]);
        sys.design.block(2 * i, 0, 2, m) = fpr * model.shape_basis.middleRows(row, 3);
        if (e > 0)
            sys.design.block(2 * i, m, 2, e) = fpr * model.blendshapes.middleRows(row, 3);
        const Vec3 anchor = model.mean.segment<3>(row) + cam.t;
        sys.target.segment<2>(2 * i) = landmarks.col(i) - fpr * anchor;
    }
    sys.regulariser = Vector::Zero(m + e);
    for (int j = 0; j < m; ++j)
        sys.regulariser[j] = lambda / model.eigenvalues[j];
    return sys;
}

LinearFitResult fit_shape_linear(const MorphableModel& model, const Points2& landmarks, const LinearFitOptions& options)
{
    if (options.lambda < 0 || !std::isfinite(options.lambda))
        throw Error(ErrorCode::InvalidArgument, "lambda must be non-negative");
    if (options.iterations < 1)
        throw Error(ErrorCode::InvalidArgument, "at least one iteration is required");
    if (model.landmark_map.empty())
        throw Error(ErrorCode::InvalidArgument, "model has no landmark map");
    if (!landmarks.allFinite())
        throw Error(ErrorCode::InvalidArgument, "non-finite image landmarks");

    const int m = model.num_modes();
    const int e = model.num_expressions();
    LinearFitResult result;
    result.alpha = Vector::Zero(m);
    result.beta = Vector::Zero(e);

    for (int it = 0; it < options.iterations; ++it)
    {
        const Vector current = model.shape(result.alpha, result.beta);
        result.camera = options.fixed_camera ? *options.fixed_camera
                                             : estimate_camera(landmarks, model.landmarks(current)).camera;

        const RidgeSystem sys = linear_fit_system(model, result.camera, landmarks, options.lambda);
        Matrix lhs = sys.design.transpose() * sys.design;
        lhs.diagonal() += sys.regulariser;
        const Vector rhs = sys.design.transpose() * sys.target;
        const Eigen::LDLT<Matrix> ldlt(lhs);
        if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14))
            throw Error(ErrorCode::SingularSystem, "shape fitting normal equations are singular");
        const Vector x = ldlt.solve(rhs);
        result.alpha = x.head(m);
        result.beta = x.tail(e);
    }
    result.residual =
        reprojection_rms(result.camera, model.landmarks(model.shape(result.alpha, result.beta)), landmarks);
    return result;
}

} // namespace frbench
