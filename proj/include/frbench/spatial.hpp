/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: include/frbench/spatial.hpp
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
#include <cstdint>
#include <limits>
#include <vector>

namespace frbench {

/**
 * Closest point to \p p on the closed triangle (a, b, c), resolving face, edge
 * and vertex regions. Throws DegenerateTriangle for zero-area input.
 */
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct ClosestPointResult
{
    double distance = 0.0;
    Vec3 point = Vec3::Zero();
    int triangle_id = -1;
};

/// Per-query instrumentation.
struct QueryStats
{
    std::size_t triangles_tested = 0;
    std::size_t nodes_visited = 0;
};

struct Aabb
{
    Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

    void extend(const Vec3& p)
    {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
    void extend(const Aabb& b)
    {
        min = min.cwiseMin(b.min);
        max = max.cwiseMax(b.max);
    }
    bool contains(const Vec3& p) const { return (p.array() >= min.array()).all() && (p.array() <= max.array()).all(); }
    double squared_distance(const Vec3& p) const;
};

/**
 * Bounding-volume hierarchy over the non-degenerate triangles of a mesh, for
 * exact closest-point queries. Built by recursive median split along the
 * longest axis of the triangle-centroid box. Immutable once built and safe to
 * query from many threads.
 *
 * Triangle corners are copied in, so the index does not depend on the source
 * mesh staying alive.
 */
class SurfaceIndex
{
public:
    struct Node
    {
        Aabb box;
        // Interior: children left/right. Leaf: primitives [first, first + count).
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint32_t first = 0;
        std::uint32_t count = 0;

        bool is_leaf() const { return left < 0; }
    };

    /// Throws NoSurface when the mesh has no non-degenerate triangle.
    explicit SurfaceIndex(const TriMesh& mesh, std::size_t leaf_size = 4);

    ClosestPointResult query_closest(const Vec3& p, QueryStats* stats = nullptr) const;

    const std::vector<Node>& nodes() const { return nodes_; }
    /// Mesh triangle ids in leaf order; leaf [first, first + count) indexes into this.
    const std::vector<int>& leaf_triangle_ids() const { return triangle_ids_; }
    std::size_t triangle_count() const { return triangle_ids_.size(); }
    std::size_t skipped_degenerate() const { return skipped_degenerate_; }
    std::size_t leaf_size() const { return leaf_size_; }

private:
    struct Corners
    {
        Vec3 a, b, c;
    };

    std::int32_t build(std::uint32_t first, std::uint32_t count, std::vector<Vec3>& centroids);

    std::vector<Node> nodes_;
    std::vector<Corners> corners_; // parallel to triangle_ids_
    std::vector<int> triangle_ids_;
    std::size_t leaf_size_;
    std::size_t skipped_degenerate_ = 0;
};

/// Convenience wrapper matching the free-function style of the other modules.
inline SurfaceIndex build_index(const TriMesh& mesh, std::size_t leaf_size = 4)
{
    return SurfaceIndex(mesh, leaf_size);
}

inline ClosestPointResult query_closest(const SurfaceIndex& index, const Vec3& p, QueryStats* stats = nullptr)
{
    return index.query_closest(p, stats);
}

} // namespace frbench
