/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: include/frbench/synth.hpp
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

#include "frbench/fitting.hpp"
#include "frbench/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

namespace frbench {

/**
 * SplitMix64 (Steele, Lea & Flood 2014): state += 0x9E3779B97F4A7C15, then the
 * 64-bit finaliser. Uniform doubles take the top 53 bits; normals use the
 * Box-Muller transform (cosine branch only, one normal per two uniforms).
 * Everything here is fully specified, so fixtures are identical on every
 * platform with IEEE doubles.
 */
class SplitMix64
{
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();

private:
    std::uint64_t state_;
};

/// Independent stream seed for (seed, stream tag, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

struct SynthConfig
{
    std::uint64_t seed = 42;
    int q = 362;               ///< vertex count; q - 2 must factor into rings x segments
    int m = 10;                ///< shape modes
    int e = 0;                 ///< expression blendshapes
    double first_eigenvalue = 2000.0; ///< variance of the first mode (mm^2)
    double eigenvalue_decay = 0.7;
    double landmark_noise_sd = 0.01; ///< in normalised landmark units (fraction of the RMS radius)
    int n_subjects = 20;
    int n_images_per_subject = 3;
    int n_test_subjects = 5;       ///< the last subjects form the held-out split
    double lq_noise_factor = 2.0;  ///< noise multiplier for LQ-tagged images

    void validate() const;
};

SynthConfig synth_config_from_json(const std::string& text);
std::string synth_config_to_json(const SynthConfig& cfg);

/// Rings x segments of the latitude-longitude sphere with q vertices (two poles).
std::pair<int, int> sphere_grid(int q);

/// Closed latitude-longitude ellipsoid, poles on the y axis, face towards +z,
/// outward-oriented triangles.
TriMesh make_ellipsoid_mesh(int q, const Vec3& semi_axes);

/// Semi-axes of the head proxy (mm): 180 x 220 x 160 overall.
inline const Vec3 kHeadSemiAxes{90.0, 110.0, 80.0};

MorphableModel make_model(const SynthConfig& cfg);

struct Subject
{
    Vector alpha;
    Vector shape;
    LandmarkSet7 landmarks;
    TriMesh mesh;
};

Subject make_subject(const MorphableModel& model, const SynthConfig& cfg, std::uint64_t subject_id);
/// Subject with prescribed coefficients (no randomness).
Subject make_subject_from_coefficients(const MorphableModel& model, const Vector& alpha);

struct Observation
{
    Points2 landmarks;       ///< noisy 2 x l
    Points2 clean;           ///< noiseless projection
    WeakPerspectiveCamera camera;
    double noise_sd_image = 0.0; ///< noise sd actually applied, in image units
};

/// Random weak-perspective view of a shape's landmarks plus Gaussian noise with
/// sd = noise_sd * RMS radius of the clean landmarks.
Observation make_observation(const MorphableModel& model, const Vector& shape, const SynthConfig& cfg,
                             std::uint64_t image_id, double noise_sd);
inline Observation make_observation(const MorphableModel& model, const Vector& shape, const SynthConfig& cfg,
                                    std::uint64_t image_id)
{
    return make_observation(model, shape, cfg, image_id, cfg.landmark_noise_sd);
}

/// Random rotation in the observation pose range (yaw, pitch, roll in degrees).
Mat3 rotation_from_angles(double yaw_deg, double pitch_deg, double roll_deg);

/**
 * Writes a complete synthetic dataset: model.bin, scans/, images/,
 * observations.csv (all images, with train/test split), manifest.csv (test
 * images, predictions expected under predictions/) and config.json.
 */
void export_fixtures(const SynthConfig& cfg, const std::filesystem::path& out_dir);

} // namespace frbench
