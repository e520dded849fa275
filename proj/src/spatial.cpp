/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: src/spatial.cpp
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

#include "frbench/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace frbench {

namespace {

Vec3 closest_point_unchecked(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    // Voronoi-region walk (Ericson, Real-Time Collision Detection, 5.1.5).
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    const Vec3 ap = p - a;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0)
        return a;

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3)
        return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0)
        return a + (d1 / (d1 - d3)) * ab;

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6)
        return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0)
        return a + (d2 / (d2 - d6)) * ac;

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

} // namespace

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    if (is_degenerate_triangle(a, b, c))
        throw Error(ErrorCode::DegenerateTriangle, "closest point requested on a zero-area triangle");
    return closest_point_unchecked(p, a, b, c);
}

double Aabb::squared_distance(const Vec3& p) const
{
    const Vec3 below = (min - p).cwiseMax(0.0);
    const Vec3 above = (p - max).cwiseMax(0.0);
    return (below + above).squaredNorm();
}

SurfaceIndex::SurfaceIndex(const TriMesh& mesh, std::size_t leaf_size) : leaf_size_(std::max<std::size_t>(leaf_size, 1))
{
    mesh.validate();
    std::vector<Vec3> centroids;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    {
        const auto& tri = mesh.triangles[t];
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        if (is_degenerate_triangle(a, b, c))
        {
            ++skipped_degenerate_;
            continue;
        }
        triangle_ids_.push_back(static_cast<int>(t));
        corners_.push_back({a, b, c});
        centroids.push_back((a + b + c) / 3.0);
    }
    if (triangle_ids_.empty())
        throw Error(ErrorCode::NoSurface, "mesh has no non-degenerate triangles");

    nodes_.reserve(2 * triangle_ids_.size() / leaf_size_ + 1);
    build(0, static_cast<std::uint32_t>(triangle_ids_.size()), centroids);
}

std::int32_t SurfaceIndex::build(std::uint32_t first, std::uint32_t count, std::vector<Vec3>& centroids)
{
    const auto node_id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();

    Aabb box, centroid_box;
    for (std::uint32_t i = first; i < first + count; ++i)
    {
        box.extend(corners_[i].a);
        box.extend(corners_[i].b);
        box.extend(corners_[i].c);
        centroid_box.extend(centroids[i]);
    }
    nodes_[node_id].box = box;

    if (count <= leaf_size_)
    {
        nodes_[node_id].first = first;
        nodes_[node_id].count = count;
        return node_id;
    }

    int axis = 0;
    (centroid_box.max - centroid_box.min).maxCoeff(&axis);

    // Sort a permutation so that corners, ids and centroids move together.
    std::vector<std::uint32_t> order(count);
    for (std::uint32_t i = 0; i < count; ++i)
        order[i] = first + i;
    const std::uint32_t half = count / 2;
    std::nth_element(order.begin(), order.begin() + half, order.end(), [&](std::uint32_t l, std::uint32_t r) {
        const double cl = centroids[l][axis];
        const double cr = centroids[r][axis];
        return cl < cr || (cl == cr && triangle_ids_[l] < triangle_ids_[r]);
    });
    {
        std::vector<Corners> c(count);
        std::vector<int> ids(count);
        std::vector<Vec3> cen(count);
        for (std::uint32_t i = 0; i < count; ++i)
        {
            c[i] = corners_[order[i]];
            ids[i] = triangle_ids_[order[i]];
            cen[i] = centroids[order[i]];
        }
        std::copy(c.begin(), c.end(), corners_.begin() + first);
        std::copy(ids.begin(), ids.end(), triangle_ids_.begin() + first);
        std::copy(cen.begin(), cen.end(), centroids.begin() + first);
    }

    const std::int32_t left = build(first, half, centroids);
    const std::int32_t right = build(first + half, count - half, centroids);
    nodes_[node_id].left = left;
    nodes_[node_id].right = right;
    return node_id;
}

ClosestPointResult SurfaceIndex::query_closest(const Vec3& p, QueryStats* stats) const
{
    ClosestPointResult best;
    double best_d2 = std::numeric_limits<double>::infinity();

    struct Entry
    {
        std::int32_t node;
        double d2;
    };
    std::vector<Entry> stack;
    stack.reserve(64);
    stack.push_back({0, nodes_[0].box.squared_distance(p)});

    std::size_t tested = 0, visited = 0;
    while (!stack.empty())
    {
        const Entry e = stack.back();
        stack.pop_back();
        // Strict comparison keeps equidistant candidates alive for the id tie-break.
        if (e.d2 > best_d2)
            continue;
        ++visited;
        const Node& node = nodes_[e.node];
        if (node.is_leaf())
        {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i)
            {
                const Corners& tri = corners_[i];
                const Vec3 q = closest_point_unchecked(p, tri.a, tri.b, tri.c);
                const double d2 = (q - p).squaredNorm();
                ++tested;
                if (d2 < best_d2 || (d2 == best_d2 && triangle_ids_[i] < best.triangle_id))
                {
                    best_d2 = d2;
                    best.point = q;
                    best.triangle_id = triangle_ids_[i];
                }
            }
            continue;
        }
        const double dl = nodes_[node.left].box.squared_distance(p);
        const double dr = nodes_[node.right].box.squared_distance(p);
        // Push the farther child first so the nearer one is explored next.
        if (dl <= dr)
        {
            stack.push_back({node.right, dr});
            stack.push_back({node.left, dl});
        }
        else
        {
            stack.push_back({node.left, dl});
            stack.push_back({node.right, dr});
        }
    }
    best.distance = std::sqrt(best_d2);
    if (stats)
    {
        stats->triangles_tested += tested;
        stats->nodes_visited += visited;
    }
    return best;
}

} // namespace frbench
