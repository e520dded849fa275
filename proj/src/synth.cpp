/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: src/synth.cpp
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

#include "frbench/synth.hpp"
#include "frbench/text_io.hpp"

#include "Eigen/Dense"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <set>

namespace frbench {

std::uint64_t SplitMix64::next()
{
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double SplitMix64::uniform()
{
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::normal()
{
    // 1 - u lies in (0, 1], so the logarithm is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
{
    SplitMix64 a(seed);
    SplitMix64 b(a.next() ^ stream);
    SplitMix64 c(b.next() ^ index);
    return c.next();
}

namespace {

enum Stream : std::uint64_t {
    kBasisStream = 1,
    kSubjectStream = 2,
    kObservationStream = 3,
};

/// Column norm of each expression blendshape (mm).
constexpr double kBlendshapeNorm = 30.0;

/// Frontal 68-point template in face units: x to the image right, y up.
/// Scaled by (75, 100) mm and lifted onto the ellipsoid front.
std::array<Vec2, kNumImageLandmarks> landmark_template()
{
    std::array<Vec2, kNumImageLandmarks> p;
    for (int k = 0; k <= 16; ++k)
    {
        const double a = std::numbers::pi * k / 16.0;
        p[k] = {-0.9 * std::cos(a), 0.1 - 1.0 * std::sin(a)};
    }
    const double brow_x[5] = {-0.75, -0.6, -0.45, -0.3, -0.15};
    const double brow_y[5] = {0.5, 0.56, 0.58, 0.56, 0.52};
    for (int k = 0; k < 5; ++k)
    {
        p[17 + k] = {brow_x[k], brow_y[k]};
        p[26 - k] = {-brow_x[k], brow_y[k]};
    }
    for (int k = 0; k < 4; ++k)
        p[27 + k] = {0.0, 0.3 - 0.1 * k};
    const Vec2 nose[5] = {{-0.2, -0.1}, {-0.1, -0.13}, {0.0, -0.15}, {0.1, -0.13}, {0.2, -0.1}};
    for (int k = 0; k < 5; ++k)
        p[31 + k] = nose[k];
    const Vec2 right_eye[6] = {{-0.6, 0.3}, {-0.5, 0.36}, {-0.35, 0.36}, {-0.25, 0.3}, {-0.35, 0.25}, {-0.5, 0.25}};
    const Vec2 left_eye[6] = {{0.25, 0.3}, {0.35, 0.36}, {0.5, 0.36}, {0.6, 0.3}, {0.5, 0.25}, {0.35, 0.25}};
    for (int k = 0; k < 6; ++k)
    {
        p[36 + k] = right_eye[k];
        p[42 + k] = left_eye[k];
    }
    const Vec2 mouth[20] = {{-0.35, -0.45}, {-0.22, -0.38}, {-0.08, -0.35}, {0.0, -0.36}, {0.08, -0.35},
                            {0.22, -0.38},  {0.35, -0.45},  {0.22, -0.53},  {0.08, -0.56}, {0.0, -0.57},
                            {-0.08, -0.56}, {-0.22, -0.53}, {-0.28, -0.45}, {-0.1, -0.42}, {0.0, -0.42},
                            {0.1, -0.42},   {0.28, -0.45},  {0.1, -0.48},   {0.0, -0.48},  {-0.1, -0.48}};
    for (int k = 0; k < 20; ++k)
        p[48 + k] = mouth[k];
    return p;
}

/// Template points on the ellipsoid; the seven protocol points go first so they
/// get their nearest vertices.
std::vector<int> choose_landmark_vertices(const TriMesh& mesh, const Vec3& axes)
{
    const auto tmpl = landmark_template();
    std::vector<int> order(kProtocolLandmarksIn68.begin(), kProtocolLandmarksIn68.end());
    for (int k = 0; k < kNumImageLandmarks; ++k)
        if (std::find(order.begin(), order.end(), k) == order.end())
            order.push_back(k);

    std::vector<int> map(kNumImageLandmarks, -1);
    std::set<int> used;
    for (int k : order)
    {
        const double x = 75.0 * tmpl[k].x();
        const double y = 100.0 * tmpl[k].y();
        const double zz = 1.0 - (x * x) / (axes.x() * axes.x()) - (y * y) / (axes.y() * axes.y());
        const Vec3 target(x, y, axes.z() * std::sqrt(std::max(0.0, zz)));
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int v = 0; v < static_cast<int>(mesh.vertices.size()); ++v)
        {
            if (used.count(v))
                continue;
            const double d = (mesh.vertices[v] - target).squaredNorm();
            if (d < best_d)
            {
                best_d = d;
                best = v;
            }
        }
        map[k] = best;
        used.insert(best);
    }
    return map;
}

Subject subject_from_shape(const MorphableModel& model, Vector alpha, Vector shape)
{
    return Subject{std::move(alpha), shape, model.protocol_landmarks(shape), model.mesh(shape)};
}

} // namespace

// ---------------------------------------------------------------------------

void SynthConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::Config, msg); };
    if (q < kNumImageLandmarks)
        fail("q must be at least " + std::to_string(kNumImageLandmarks));
    sphere_grid(q);
    if (m < 1)
        fail("m must be at least 1");
    if (e < 0)
        fail("e must be non-negative");
    if (m + e >= 3 * q)
        fail("m + e must be smaller than 3q");
    if (!(first_eigenvalue > 0) || !std::isfinite(first_eigenvalue))
        fail("first_eigenvalue must be positive");
    if (!(eigenvalue_decay > 0 && eigenvalue_decay < 1))
        fail("eigenvalue_decay must lie in (0, 1)");
    if (!(landmark_noise_sd >= 0) || !std::isfinite(landmark_noise_sd))
        fail("landmark_noise_sd must be non-negative");
    if (!(lq_noise_factor >= 0) || !std::isfinite(lq_noise_factor))
        fail("lq_noise_factor must be non-negative");
    if (n_subjects < 1)
        fail("n_subjects must be positive");
    if (n_images_per_subject < 1)
        fail("n_images_per_subject must be positive");
    if (n_test_subjects < 0 || n_test_subjects > n_subjects)
        fail("n_test_subjects must lie in [0, n_subjects]");
}

SynthConfig synth_config_from_json(const std::string& text)
{
    using nlohmann::json;
    SynthConfig cfg;
    try
    {
        const json j = json::parse(text);
        if (!j.is_object())
            throw Error(ErrorCode::Config, "synth config must be a JSON object");
        for (const auto& [key, value] : j.items())
        {
            if (key == "seed")
                cfg.seed = value.get<std::uint64_t>();
            else if (key == "q")
                cfg.q = value.get<int>();
            else if (key == "m")
                cfg.m = value.get<int>();
            else if (key == "e")
                cfg.e = value.get<int>();
            else if (key == "first_eigenvalue")
                cfg.first_eigenvalue = value.get<double>();
            else if (key == "eigenvalue_decay")
                cfg.eigenvalue_decay = value.get<double>();
            else if (key == "landmark_noise_sd")
                cfg.landmark_noise_sd = value.get<double>();
            else if (key == "n_subjects")
                cfg.n_subjects = value.get<int>();
            else if (key == "n_images_per_subject")
                cfg.n_images_per_subject = value.get<int>();
            else if (key == "n_test_subjects")
                cfg.n_test_subjects = value.get<int>();
            else if (key == "lq_noise_factor")
                cfg.lq_noise_factor = value.get<double>();
            else
                throw Error(ErrorCode::Config, "unknown synth config key '" + key + "'");
        }
    } catch (const json::exception& e)
    {
        throw Error(ErrorCode::Config, std::string("synth config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string synth_config_to_json(const SynthConfig& cfg)
{
    nlohmann::ordered_json j;
    j["seed"] = cfg.seed;
    j["q"] = cfg.q;
    j["m"] = cfg.m;
    j["e"] = cfg.e;
    j["first_eigenvalue"] = cfg.first_eigenvalue;
    j["eigenvalue_decay"] = cfg.eigenvalue_decay;
    j["landmark_noise_sd"] = cfg.landmark_noise_sd;
    j["n_subjects"] = cfg.n_subjects;
    j["n_images_per_subject"] = cfg.n_images_per_subject;
    j["n_test_subjects"] = cfg.n_test_subjects;
    j["lq_noise_factor"] = cfg.lq_noise_factor;
    return j.dump(2) + '\n';
}

std::pair<int, int> sphere_grid(int q)
{
    const int n = q - 2;
    std::pair<int, int> best{0, 0};
    int best_gap = std::numeric_limits<int>::max();
    for (int r = 3; r * 4 <= n; ++r)
    {
        if (n % r != 0)
            continue;
        const int s = n / r;
        const int gap = std::abs(s - 2 * r);
        if (gap < best_gap)
        {
            best_gap = gap;
            best = {r, s};
        }
    }
    if (best.first == 0)
        throw Error(ErrorCode::Config, "q = " + std::to_string(q) +
                                           " does not give a sphere grid (q - 2 = rings x segments, rings >= 3, "
                                           "segments >= 4)");
    return best;
}

TriMesh make_ellipsoid_mesh(int q, const Vec3& semi_axes)
{
    const auto [rings, segments] = sphere_grid(q);
    TriMesh mesh;
    mesh.vertices.reserve(static_cast<std::size_t>(q));
    mesh.vertices.emplace_back(0.0, semi_axes.y(), 0.0);
    for (int i = 1; i <= rings; ++i)
    {
        const double theta = std::numbers::pi * i / (rings + 1);
        for (int j = 0; j < segments; ++j)
        {
            const double phi = 2.0 * std::numbers::pi * j / segments;
            mesh.vertices.emplace_back(semi_axes.x() * std::sin(theta) * std::sin(phi),
                                       semi_axes.y() * std::cos(theta),
                                       semi_axes.z() * std::sin(theta) * std::cos(phi));
        }
    }
    const int bottom = q - 1;
    mesh.vertices.emplace_back(0.0, -semi_axes.y(), 0.0);

    auto ring = [segments = segments](int i, int j) { return 1 + (i - 1) * segments + (j % segments); };
    for (int j = 0; j < segments; ++j)
    {
        mesh.triangles.push_back({0, ring(1, j), ring(1, j + 1)});
        mesh.triangles.push_back({bottom, ring(rings, j + 1), ring(rings, j)});
    }
    for (int i = 1; i < rings; ++i)
    {
        for (int j = 0; j < segments; ++j)
        {
            mesh.triangles.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
            mesh.triangles.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
        }
    }
    // Centred convex surface: orient every face away from the origin.
    for (auto& t : mesh.triangles)
    {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3 n = (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a);
        if (n.dot(a + mesh.vertices[t[1]] + mesh.vertices[t[2]]) < 0)
            std::swap(t[1], t[2]);
    }
    return mesh;
}

MorphableModel make_model(const SynthConfig& cfg)
{
    cfg.validate();
    const TriMesh head = make_ellipsoid_mesh(cfg.q, kHeadSemiAxes);
    MorphableModel model;
    model.mean = flatten(head.vertices);
    model.triangles = head.triangles;

    const Eigen::Index rows = 3 * static_cast<Eigen::Index>(cfg.q);
    const Eigen::Index cols = cfg.m + cfg.e;
    SplitMix64 rng(derive_seed(cfg.seed, kBasisStream, 0));
    Matrix gauss(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r)
            gauss(r, c) = rng.normal();
    const Eigen::HouseholderQR<Matrix> qr(gauss);
    Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
    // Fix the sign ambiguity: R gets a positive diagonal.
    const Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < cols; ++c)
        if (r(c, c) < 0)
            q.col(c) = -q.col(c);

    model.shape_basis = q.leftCols(cfg.m);
    model.blendshapes = kBlendshapeNorm * q.rightCols(cfg.e);
    model.eigenvalues.resize(cfg.m);
    for (int j = 0; j < cfg.m; ++j)
        model.eigenvalues[j] = cfg.first_eigenvalue * std::pow(cfg.eigenvalue_decay, j);
    model.landmark_map = choose_landmark_vertices(head, kHeadSemiAxes);
    model.validate();
    return model;
}

Subject make_subject(const MorphableModel& model, const SynthConfig& cfg, std::uint64_t subject_id)
{
    SplitMix64 rng(derive_seed(cfg.seed, kSubjectStream, subject_id));
    Vector alpha(model.num_modes());
    for (int j = 0; j < model.num_modes(); ++j)
        alpha[j] = std::sqrt(model.eigenvalues[j]) * rng.normal();
    Vector shape = model.shape(alpha);
    return subject_from_shape(model, std::move(alpha), std::move(shape));
}

Subject make_subject_from_coefficients(const MorphableModel& model, const Vector& alpha)
{
    return subject_from_shape(model, alpha, model.shape(alpha));
}

Mat3 rotation_from_angles(double yaw_deg, double pitch_deg, double roll_deg)
{
    constexpr double deg = std::numbers::pi / 180.0;
    const Mat3 yaw = Eigen::AngleAxisd(yaw_deg * deg, Vec3::UnitY()).toRotationMatrix();
    const Mat3 pitch = Eigen::AngleAxisd(pitch_deg * deg, Vec3::UnitX()).toRotationMatrix();
    const Mat3 roll = Eigen::AngleAxisd(roll_deg * deg, Vec3::UnitZ()).toRotationMatrix();
    return roll * pitch * yaw;
}

Observation make_observation(const MorphableModel& model, const Vector& shape, const SynthConfig& cfg,
                             std::uint64_t image_id, double noise_sd)
{
    if (!(noise_sd >= 0) || !std::isfinite(noise_sd))
        throw Error(ErrorCode::InvalidArgument, "noise sd must be non-negative");
    SplitMix64 rng(derive_seed(cfg.seed, kObservationStream, image_id));
    const double yaw = rng.uniform(-90.0, 90.0);
    const double pitch = rng.uniform(-30.0, 30.0);
    const double roll = rng.uniform(-20.0, 20.0);

    Observation obs;
    obs.camera.f = rng.uniform(0.5, 2.0);
    obs.camera.R = rotation_from_angles(yaw, pitch, roll);
    const Vec2 offset(rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0));
    obs.camera.t = obs.camera.R.transpose() * Vec3(offset.x() / obs.camera.f, offset.y() / obs.camera.f, 0.0);

    obs.clean = project_weak_perspective(obs.camera, model.landmarks(shape));
    const Points2 centred = obs.clean.colwise() - obs.clean.rowwise().mean();
    obs.noise_sd_image = noise_sd * std::sqrt(centred.colwise().squaredNorm().mean());
    obs.landmarks = obs.clean;
    if (noise_sd > 0)
    {
        for (Eigen::Index c = 0; c < obs.landmarks.cols(); ++c)
        {
            obs.landmarks(0, c) += obs.noise_sd_image * rng.normal();
            obs.landmarks(1, c) += obs.noise_sd_image * rng.normal();
        }
    }
    return obs;
}

// ---------------------------------------------------------------------------

namespace {

std::string subject_name(int s)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%04d", s);
    return buf;
}

std::string image_name(int s, int v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%04d_v%02d", s, v);
    return buf;
}

} // namespace

void export_fixtures(const SynthConfig& cfg, const std::filesystem::path& out_dir)
{
    cfg.validate();
    const MorphableModel model = make_model(cfg);
    save_model(out_dir / "model.bin", model);
    write_text_file(out_dir / "config.json", synth_config_to_json(cfg));

    std::string observations = "image_id,subject_id,subset,split,landmarks\n";
    std::string manifest = "image_id,subject_id,subset,pred_mesh,pred_landmarks,gt_mesh,gt_landmarks\n";
    const int first_test = cfg.n_subjects - cfg.n_test_subjects;
    for (int s = 0; s < cfg.n_subjects; ++s)
    {
        const std::string sid = subject_name(s);
        const Subject subject = make_subject(model, cfg, static_cast<std::uint64_t>(s));
        save_mesh(out_dir / "scans" / (sid + ".obj"), subject.mesh);
        save_landmarks(out_dir / "scans" / (sid + ".lmk"), subject.landmarks);
        const bool test = s >= first_test;
        for (int v = 0; v < cfg.n_images_per_subject; ++v)
        {
            const std::string iid = image_name(s, v);
            const bool hq = v % 2 == 0;
            const double sd = cfg.landmark_noise_sd * (hq ? 1.0 : cfg.lq_noise_factor);
            const auto image_id = static_cast<std::uint64_t>(s) * static_cast<std::uint64_t>(cfg.n_images_per_subject) +
                                  static_cast<std::uint64_t>(v);
            const Observation obs = make_observation(model, subject.shape, cfg, image_id, sd);
            std::vector<Vec2> pts(static_cast<std::size_t>(obs.landmarks.cols()));
            for (std::size_t i = 0; i < pts.size(); ++i)
                pts[i] = obs.landmarks.col(static_cast<Eigen::Index>(i));
            const std::string lm_path = "images/" + iid + ".pts";
            save_points2d(out_dir / lm_path, pts);

            const std::string subset = hq ? "HQ" : "LQ";
            observations += iid + "," + sid + "," + subset + "," + (test ? "test" : "train") + "," + lm_path + "\n";
            if (test)
                manifest += iid + "," + sid + "," + subset + ",predictions/" + iid + ".obj,predictions/" + iid +
                            ".lmk,scans/" + sid + ".obj,scans/" + sid + ".lmk\n";
        }
    }
    write_text_file(out_dir / "observations.csv", observations);
    write_text_file(out_dir / "manifest.csv", manifest);
}

} // namespace frbench
