/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: tests/test_protocol.cpp
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

#include "doctest.h"

#include "support.hpp"

#include "frbench/protocol.hpp"

#include <numeric>

using namespace frbench;
using namespace testsupport;

namespace {

LandmarkSet7 with(const Vec3& nose_bottom, const Vec3& bridge, double half_outer = 45.0, double half_inner = 15.0)
{
    // Eye corners symmetric about the bridge, so both bridge definitions agree.
    return LandmarkSet7({bridge + Vec3(-half_outer, 0, 0), bridge + Vec3(-half_inner, 0, 0),
                         bridge + Vec3(half_inner, 0, 0), bridge + Vec3(half_outer, 0, 0), nose_bottom,
                         nose_bottom + Vec3(-20, -20, 0), nose_bottom + Vec3(20, -20, 0)});
}

/// Square grid in the z = 0 plane with unit spacing, two triangles per cell.
TriMesh grid(int n)
{
    TriMesh m;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            m.vertices.emplace_back(x, y, 0);
    for (int y = 0; y + 1 < n; ++y)
        for (int x = 0; x + 1 < n; ++x)
        {
            const int i = y * n + x;
            m.triangles.push_back({i, i + 1, i + n + 1});
            m.triangles.push_back({i, i + n + 1, i + n});
        }
    return m;
}

} // namespace

TEST_SUITE("protocol")
{
    TEST_CASE("face centre")
    {
        CHECK((face_centre(with(Vec3(0, 0, 0), Vec3(0, 10, 0))) - Vec3(0, 3, 0)).norm() < 1e-12);
        CHECK((face_centre(with(Vec3(1, 1, 1), Vec3(11, 1, 1))) - Vec3(4, 1, 1)).norm() < 1e-12);
        const auto same = with(Vec3(5, 5, 5), Vec3(5, 5, 5));
        CHECK((face_centre(same) - Vec3(5, 5, 5)).norm() < 1e-12);
    }

    TEST_CASE("nose bridge modes")
    {
        // Asymmetric outer corners: the centroid moves, the inner midpoint does not.
        const LandmarkSet7 l({Vec3(-50, 0, 0), Vec3(-10, 0, 0), Vec3(10, 0, 0), Vec3(30, 0, 0), Vec3(0, -40, 0),
                              Vec3(-20, -60, 0), Vec3(20, -60, 0)});
        CHECK((nose_bridge(l) - Vec3(-5, 0, 0)).norm() < 1e-12);
        CHECK((nose_bridge(l, NoseBridge::InnerCorners) - Vec3(0, 0, 0)).norm() < 1e-12);
    }

    TEST_CASE("region radius")
    {
        // outer_eye_dist 90, nose_dist 130/3 -> 1.2 * (90 + 43.33..) / 2 = 80.
        const auto l = with(Vec3(0, -130.0 / 3.0, 0), Vec3(0, 0, 0));
        CHECK(std::abs(region_radius(l) - 80.0) < 1e-12);
        // outer_eye_dist = nose_dist = 60.
        CHECK(std::abs(region_radius(with(Vec3(0, -60, 0), Vec3(0, 0, 0), 30.0, 10.0)) - 72.0) < 1e-12);
        // Seven identical points are not a valid landmark set.
        CHECK_THROWS_AS(LandmarkSet7({Vec3(1, 1, 1), Vec3(1, 1, 1), Vec3(1, 1, 1), Vec3(1, 1, 1), Vec3(1, 1, 1),
                                      Vec3(1, 1, 1), Vec3(1, 1, 1)}),
                        Error);
    }

    TEST_CASE("select region: single vertex, everything, errors")
    {
        const TriMesh g = grid(10);
        const auto one = select_region(g, Vec3(3, 4, 0), 0.001);
        REQUIRE(one.vertex_ids.size() == 1);
        CHECK(one.vertex_ids[0] == 43);
        CHECK(select_region(g, Vec3(4.5, 4.5, 0), 20.0).vertex_ids.size() == 100);
        // Closed ball: a vertex at exactly the radius is included.
        CHECK(select_region(g, Vec3(0, 0, 0), 1.0).vertex_ids == std::vector<int>{0, 1, 10});
        CHECK_THROWS_AS(select_region(g, Vec3(0, 0, 0), 0.0), Error);
        try
        {
            select_region(g, Vec3(100, 100, 100), 1.0);
            FAIL("no error");
        } catch (const Error& e)
        {
            CHECK(e.code() == ErrorCode::EmptyRegion);
        }
    }

    TEST_CASE("select region on a sphere: 60 degree cap around the pole")
    {
        const double r = 50.0;
        const TriMesh s = make_ellipsoid_mesh(402, Vec3(r, r, r));
        const auto region = select_region(s, Vec3(0, r, 0), r);
        std::vector<int> expected;
        for (int v = 0; v < static_cast<int>(s.vertices.size()); ++v)
            if (s.vertices[v].y() / r >= 0.5) // cos(colatitude) >= cos(60)
                expected.push_back(v);
        CHECK(region.vertex_ids == expected);
    }

    TEST_CASE("select region equals the brute-force filter")
    {
        SplitMix64 rng(31);
        const TriMesh m = random_mesh(rng, 200);
        for (int i = 0; i < 50; ++i)
        {
            const Vec3 c = random_vec(rng, -1, 1);
            const double radius = rng.uniform(0.3, 1.5);
            std::vector<int> expected;
            for (int v = 0; v < static_cast<int>(m.vertices.size()); ++v)
                if ((m.vertices[v] - c).norm() <= radius)
                    expected.push_back(v);
            if (expected.empty())
                continue;
            CHECK(select_region(m, c, radius).vertex_ids == expected);
        }
    }

    TEST_CASE("rmse")
    {
        const std::vector<double> a = {3, 4};
        CHECK(rmse(a) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
        const std::vector<double> c(17, 2.5);
        CHECK(rmse(c) == doctest::Approx(2.5).epsilon(1e-15));
        CHECK(rmse(std::vector<double>{0.0}) == 0.0);
        CHECK_THROWS_AS(rmse(std::vector<double>{}), Error);
        SplitMix64 rng(32);
        std::vector<double> d(100);
        for (auto& x : d)
            x = rng.uniform(0, 5);
        CHECK(rmse(d) >= std::accumulate(d.begin(), d.end(), 0.0) / 100.0);
    }

    TEST_CASE("CED curve")
    {
        const std::vector<double> d = {1, 2, 3, 4};
        CHECK(ced_curve(d, std::vector<double>{2.5}).fractions[0] == 0.5);
        const auto edges = ced_curve(d, std::vector<double>{0.5, 4.0});
        CHECK(edges.fractions[0] == 0.0);
        CHECK(edges.fractions[1] == 1.0);
        CHECK(ced_curve(d, std::vector<double>{2.0}).fractions[0] == 0.5); // <= counts ties
        CHECK_THROWS_AS(ced_curve(std::vector<double>{}, std::vector<double>{1.0}), Error);
        CHECK_THROWS_AS(ced_curve(d, std::vector<double>{1.0, 1.0}), Error);
    }

    TEST_CASE("CED matches direct counting")
    {
        SplitMix64 rng(33);
        std::vector<double> d(1000);
        for (auto& x : d)
            x = rng.uniform(0, 8);
        const auto thresholds = linear_thresholds(10.0, 64);
        const auto curve = ced_curve(d, thresholds);
        for (std::size_t i = 0; i < thresholds.size(); ++i)
        {
            const auto count = std::count_if(d.begin(), d.end(), [&](double x) { return x <= thresholds[i]; });
            CHECK(curve.fractions[i] == static_cast<double>(count) / 1000.0);
            if (i > 0)
                CHECK(curve.fractions[i] >= curve.fractions[i - 1]);
        }
        CHECK(ced_csv(ced_curve(d, std::vector<double>{0, 10})) == "threshold_mm,fraction\n0,0\n10,1\n");
    }

    TEST_CASE("summaries")
    {
        const std::vector<ImageResult> one = {{"a", Subset::HQ, 2.0}};
        const auto s1 = summarize(one);
        REQUIRE(s1.rows.size() == 2);
        CHECK(s1.rows[0].name == "HQ");
        CHECK(s1.rows[0].formatted() == "2.00±0.00");
        CHECK(s1.rows[1].name == "Full");
        CHECK(s1.rows[1].formatted() == "2.00±0.00");
        CHECK(s1.warnings.size() == 1);

        const std::vector<ImageResult> four = {
            {"a", Subset::HQ, 2.0}, {"b", Subset::HQ, 2.0}, {"c", Subset::LQ, 4.0}, {"d", Subset::LQ, 4.0}};
        const auto s = summarize(four, 3);
        REQUIRE(s.rows.size() == 3);
        CHECK(s.rows[0].formatted() == "2.00±0.00");
        CHECK(s.rows[1].formatted() == "4.00±0.00");
        CHECK(s.rows[2].formatted() == "3.00±1.00");
        CHECK(format_mean_sd(2.14, 0.69) == "2.14±0.69");
        CHECK(format_mean_sd(2.145001, 0.6949) == "2.15±0.69");
        CHECK(summary_csv(s) ==
              "subset,count,mean_mm,std_mm,formatted\nHQ,2,2.000000,0.000000,2.00±0.00\nLQ,2,4.000000,0.000000,4.00±0.00\nFull,4,3.000000,1.000000,3.00±1.00\n");
        const auto table = summary_table(s);
        CHECK(table.find("3.00±1.00") != std::string::npos);
        CHECK(table.find("# failed images excluded: 3") != std::string::npos);
        CHECK(parse_subset("lq") == Subset::LQ);
        CHECK_THROWS_AS(parse_subset("MQ"), Error);
    }

    TEST_CASE("self evaluation is exactly zero")
    {
        const auto f = inflation_fixture();
        const auto report = evaluate_pair(f.gt, f.gt_landmarks, f.gt, f.gt_landmarks);
        CHECK(report.rmse == 0.0);
        CHECK(report.distances.size() == report.region.vertex_ids.size());
        for (double d : report.distances)
            CHECK(d == 0.0);
        const auto header = distance_file("img", report).substr(0, 7);
        CHECK(header == "# img, ");
    }

    TEST_CASE("similarity-transformed prediction scores zero; gt rigid motion changes nothing")
    {
        SplitMix64 rng(34);
        const TriMesh gt = make_ellipsoid_mesh(402, kHeadSemiAxes);
        const auto lm = random_landmarks(rng, 2.0);
        // Landmarks need not lie on the surface; the region only has to be non-empty.
        for (int i = 0; i < 5; ++i)
        {
            const auto t = random_similarity(rng);
            const auto r = evaluate_pair(apply_transform(t, gt), apply_transform(t, lm), gt, lm);
            CHECK(r.rmse < 1e-9);
        }
        const auto f = inflation_fixture();
        const auto base = evaluate_pair(f.pred, f.gt_landmarks, f.gt, f.gt_landmarks);
        SimilarityTransform rigid = random_similarity(rng);
        rigid.scale = 1.0;
        const auto moved =
            evaluate_pair(f.pred, f.gt_landmarks, apply_transform(rigid, f.gt), apply_transform(rigid, f.gt_landmarks));
        CHECK(std::abs(moved.rmse - base.rmse) < 1e-9);
        CHECK(std::abs(moved.region.radius - base.region.radius) < 1e-9);
        CHECK(moved.region.vertex_ids == base.region.vertex_ids);
    }

    TEST_CASE("2 mm inflation: distances agree with the brute-force oracle, rmse near 2")
    {
        const auto f = inflation_fixture();
        const auto report = evaluate_pair(f.pred, f.gt_landmarks, f.gt, f.gt_landmarks);
        MESSAGE("inflation rmse " << report.rmse << " over " << report.distances.size() << " vertices");
        CHECK(std::abs(report.rmse - 2.0) < 0.05);
        CHECK(report.distances.size() > 1000);
        for (std::size_t i = 0; i < report.distances.size(); i += 25)
        {
            const Vec3& v = f.gt.vertices[static_cast<std::size_t>(report.region.vertex_ids[i])];
            CHECK(std::abs(report.distances[i] - brute_distance(f.pred, v)) < 1e-9);
        }
        const auto sorted = report.sorted_distances();
        CHECK(std::is_sorted(sorted.begin(), sorted.end()));
    }

    TEST_CASE("alignment failures propagate")
    {
        const auto f = inflation_fixture();
        TriMesh flat = f.pred;
        flat.triangles.clear();
        try
        {
            evaluate_pair(flat, f.gt_landmarks, f.gt, f.gt_landmarks);
            FAIL("no error");
        } catch (const Error& e)
        {
            CHECK(e.code() == ErrorCode::NoSurface);
        }
    }
}
