/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: tests/support.hpp
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
#include "frbench/synth.hpp"

#include "Eigen/Geometry"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>

namespace testsupport {

using namespace frbench;

inline Vec3 random_vec(SplitMix64& r, double lo, double hi)
{
    return {r.uniform(lo, hi), r.uniform(lo, hi), r.uniform(lo, hi)};
}

inline Mat3 random_rotation(SplitMix64& r)
{
    Eigen::Quaterniond q(r.normal(), r.normal(), r.normal(), r.normal());
    q.normalize();
    return q.toRotationMatrix();
}

inline SimilarityTransform random_similarity(SplitMix64& r, double scale_lo = 0.1, double scale_hi = 10.0)
{
    SimilarityTransform t;
    t.scale = std::exp(r.uniform(std::log(scale_lo), std::log(scale_hi)));
    t.rotation = random_rotation(r);
    t.translation = random_vec(r, -100.0, 100.0);
    return t;
}

/// Axis-aligned unit cube [0,1]^3, outward-facing triangles, vertex 0 at the origin.
inline TriMesh unit_cube()
{
    TriMesh m;
    for (int i = 0; i < 8; ++i)
        m.vertices.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
    m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                   {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
    return m;
}

/// Triangle soup with corners uniform in [-1, 1]^3.
inline TriMesh random_mesh(SplitMix64& r, int triangles)
{
    TriMesh m;
    for (int t = 0; t < triangles; ++t)
    {
        const int base = static_cast<int>(m.vertices.size());
        const Vec3 centre = random_vec(r, -1.0, 1.0);
        for (int k = 0; k < 3; ++k)
            m.vertices.push_back(centre + random_vec(r, -0.3, 0.3));
        m.triangles.push_back({base, base + 1, base + 2});
    }
    return m;
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b)
{
    const Vec3 ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

/// Distance from p to the closed triangle: plane projection when it falls
/// inside, else the nearest of the three edges.
inline double brute_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 n = (b - a).cross(c - a).normalized();
    const Vec3 proj = p - n * n.dot(p - a);
    // Signed areas of the sub-triangles against the normal.
    const double wa = n.dot((c - b).cross(proj - b));
    const double wb = n.dot((a - c).cross(proj - c));
    const double wc = n.dot((b - a).cross(proj - a));
    if (wa >= 0 && wb >= 0 && wc >= 0)
        return std::abs(n.dot(p - a));
    return std::min({point_segment_distance(p, a, b), point_segment_distance(p, b, c), point_segment_distance(p, c, a)});
}

inline double brute_distance(const TriMesh& mesh, const Vec3& p)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : mesh.triangles)
    {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        if ((b - a).cross(c - a).norm() == 0.0)
            continue;
        best = std::min(best, brute_point_triangle(p, a, b, c));
    }
    return best;
}

/// A roughly face-like seven-point set (mm) with random jitter.
inline LandmarkSet7 random_landmarks(SplitMix64& r, double jitter = 5.0)
{
    const std::array<Vec3, kNumLandmarks> base = {Vec3(-45, 30, 0),  Vec3(-15, 30, 5), Vec3(15, 30, 5),
                                                   Vec3(45, 30, 0),   Vec3(0, -15, 25), Vec3(-25, -45, 10),
                                                   Vec3(25, -45, 10)};
    std::array<Vec3, kNumLandmarks> pts;
    for (std::size_t i = 0; i < kNumLandmarks; ++i)
        pts[i] = base[i] + random_vec(r, -jitter, jitter);
    return LandmarkSet7(pts, 3);
}

inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "frbench_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

struct InflationFixture
{
    TriMesh gt;
    LandmarkSet7 gt_landmarks;
    TriMesh pred;
    std::vector<int> landmark_vertices;
};

/**
 * Dense sphere (radius 100 mm) with seven face-like landmark vertices. The
 * prediction moves every other vertex 2 mm outward along the radial normal and
 * keeps the landmarks, so the true surface distance is 2 mm almost everywhere.
 */
inline InflationFixture inflation_fixture(double offset = 2.0)
{
    const double radius = 100.0;
    InflationFixture f{make_ellipsoid_mesh(20002, Vec3(radius, radius, radius)),
                       LandmarkSet7({Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(1, 0, 0), Vec3(0, 0, 1), Vec3(0, 0, 0),
                                     Vec3(0, 0, 0), Vec3(0, 0, 0)}),
                       {},
                       {}};
    const std::array<Vec2, kNumLandmarks> face = {Vec2(-45, 30), Vec2(-15, 30), Vec2(15, 30), Vec2(45, 30),
                                                  Vec2(0, -15),  Vec2(-25, -45), Vec2(25, -45)};
    std::array<Vec3, kNumLandmarks> pts;
    for (std::size_t i = 0; i < kNumLandmarks; ++i)
    {
        const Vec3 target(face[i].x(), face[i].y(), std::sqrt(radius * radius - face[i].squaredNorm()));
        int best = 0;
        for (int v = 1; v < static_cast<int>(f.gt.vertices.size()); ++v)
            if ((f.gt.vertices[v] - target).squaredNorm() < (f.gt.vertices[best] - target).squaredNorm())
                best = v;
        f.landmark_vertices.push_back(best);
        pts[i] = f.gt.vertices[static_cast<std::size_t>(best)];
    }
    f.gt_landmarks = LandmarkSet7(pts);
    f.pred = f.gt;
    for (std::size_t v = 0; v < f.pred.vertices.size(); ++v)
    {
        if (std::find(f.landmark_vertices.begin(), f.landmark_vertices.end(), static_cast<int>(v)) !=
            f.landmark_vertices.end())
            continue;
        f.pred.vertices[v] += offset * f.gt.vertices[v].normalized();
    }
    return f;
}

} // namespace testsupport
