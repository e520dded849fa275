/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: tests/test_synth.cpp
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

#include "frbench/cli.hpp"
#include "frbench/protocol.hpp"
#include "frbench/text_io.hpp"

#include "Eigen/Dense"

#include <map>
#include <numbers>

using namespace frbench;
using namespace testsupport;

namespace {

SynthConfig small_config()
{
    SynthConfig cfg;
    cfg.q = 200;
    cfg.m = 10;
    return cfg;
}

std::map<std::string, std::string> read_tree(const std::filesystem::path& root)
{
    std::map<std::string, std::string> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
        if (entry.is_regular_file())
        {
            const auto bytes = read_binary_file(entry.path());
            files[std::filesystem::relative(entry.path(), root).generic_string()] = std::string(bytes.begin(), bytes.end());
        }
    return files;
}

} // namespace

TEST_SUITE("synth")
{
    TEST_CASE("SplitMix64 reference outputs")
    {
        SplitMix64 r(0);
        CHECK(r.next() == 0xE220A8397B1DCDAFULL);
        CHECK(r.next() == 0x6E789E6AA1B965F4ULL);
        CHECK(r.next() == 0x06C45D188009454FULL);
    }

    TEST_CASE("uniform and normal draws")
    {
        SplitMix64 r(1);
        double sum = 0, sum2 = 0;
        const int n = 200000;
        for (int i = 0; i < n; ++i)
        {
            const double u = r.uniform();
            CHECK_MESSAGE((u >= 0.0 && u < 1.0), "uniform out of range");
            const double z = r.normal();
            sum += z;
            sum2 += z * z;
        }
        CHECK(std::abs(sum / n) < 0.01);
        CHECK(std::abs(sum2 / n - 1.0) < 0.01);
        CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
        CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 3));
        CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    }

    TEST_CASE("sphere grid and ellipsoid mesh")
    {
        CHECK(sphere_grid(200) == std::pair<int, int>{9, 22});
        CHECK_THROWS_AS(sphere_grid(13), Error);
        const TriMesh m = make_ellipsoid_mesh(200, kHeadSemiAxes);
        CHECK(m.vertices.size() == 200);
        CHECK_NOTHROW(m.validate());
        // Closed surface: every undirected edge is used twice, once in each direction.
        std::map<std::pair<int, int>, int> directed;
        for (const auto& t : m.triangles)
            for (int k = 0; k < 3; ++k)
                ++directed[{t[k], t[(k + 1) % 3]}];
        for (const auto& [edge, count] : directed)
        {
            CHECK(count == 1);
            CHECK(directed.count({edge.second, edge.first}) == 1);
        }
        CHECK(static_cast<long>(m.vertices.size()) - static_cast<long>(directed.size() / 2) +
                  static_cast<long>(m.triangles.size()) ==
              2);
        for (const auto& t : m.triangles)
        {
            const Vec3& a = m.vertices[t[0]];
            const Vec3 n = (m.vertices[t[1]] - a).cross(m.vertices[t[2]] - a);
            CHECK(n.dot(a + m.vertices[t[1]] + m.vertices[t[2]]) > 0);
        }
        double max_abs[3] = {0, 0, 0};
        for (const auto& v : m.vertices)
            for (int k = 0; k < 3; ++k)
                max_abs[k] = std::max(max_abs[k], std::abs(v[k]));
        CHECK(max_abs[1] == doctest::Approx(110.0));
    }

    TEST_CASE("model structure")
    {
        SynthConfig cfg = small_config();
        cfg.m = 5;
        cfg.first_eigenvalue = 100;
        cfg.eigenvalue_decay = 0.5;
        const auto model = make_model(cfg);
        CHECK((model.shape_basis.transpose() * model.shape_basis - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <
              1e-10);
        Vector expected(5);
        expected << 100, 50, 25, 12.5, 6.25;
        CHECK(model.eigenvalues == expected);
        REQUIRE(model.num_landmarks() == 68);
        for (int idx : kProtocolLandmarksIn68)
            CHECK(model.mean[3 * model.landmark_map[idx] + 2] > 0); // on the face side
        const auto l = model.protocol_landmarks(model.mean);
        CHECK(l[Landmark::RightEyeOuter].x() < l[Landmark::LeftEyeOuter].x());
        CHECK(l[Landmark::NoseBottom].y() < l[Landmark::RightEyeInner].y());
        const double radius = region_radius(l);
        MESSAGE("mean-shape face radius " << radius);
        CHECK(radius > 60);
        CHECK(radius < 100);
    }

    TEST_CASE("determinism")
    {
        const auto cfg = small_config();
        const auto a = make_model(cfg), b = make_model(cfg);
        CHECK(model_to_binary(a) == model_to_binary(b));
        CHECK(make_subject(a, cfg, 3).shape == make_subject(b, cfg, 3).shape);
        const auto oa = make_observation(a, a.mean, cfg, 9), ob = make_observation(b, b.mean, cfg, 9);
        CHECK(oa.landmarks == ob.landmarks);
        SynthConfig other = cfg;
        other.seed = 43;
        CHECK(model_to_binary(make_model(other)) != model_to_binary(a));
    }

    TEST_CASE("subjects")
    {
        const auto cfg = small_config();
        const auto model = make_model(cfg);
        CHECK(make_subject_from_coefficients(model, Vector::Zero(10)).shape == model.mean);
        const auto s1 = make_subject(model, cfg, 1), s2 = make_subject(model, cfg, 2);
        CHECK((s1.shape - s2.shape).norm() > 0);
        CHECK(s1.mesh.triangles == model.triangles);
        CHECK(s1.landmarks == model.protocol_landmarks(s1.shape));

        const double expected = model.eigenvalues.sum();
        double total = 0;
        for (int i = 0; i < 1000; ++i)
            total += (make_subject(model, cfg, static_cast<std::uint64_t>(i)).shape - model.mean).squaredNorm();
        CHECK(std::abs(total / 1000 - expected) < 0.1 * expected);

        CHECK(evaluate_pair(s1.mesh, s1.landmarks, s1.mesh, s1.landmarks).rmse == 0.0);
        CHECK(evaluate_pair(s1.mesh, s1.landmarks, s2.mesh, s2.landmarks).rmse > 0.0);
    }

    TEST_CASE("observations")
    {
        const auto cfg = small_config();
        const auto model = make_model(cfg);
        const auto sub = make_subject(model, cfg, 4);
        const auto clean = make_observation(model, sub.shape, cfg, 11, 0.0);
        CHECK(clean.landmarks == project_weak_perspective(clean.camera, model.landmarks(sub.shape)));
        CHECK_NOTHROW(clean.camera.validate());

        for (int i = 0; i < 200; ++i)
        {
            const auto o = make_observation(model, sub.shape, cfg, static_cast<std::uint64_t>(i), 0.0);
            CHECK(o.camera.f >= 0.5);
            CHECK(o.camera.f <= 2.0);
        }
        CHECK(rotation_from_angles(0, 0, 0) == Mat3::Identity());
        const Mat3 yaw = rotation_from_angles(90, 0, 0);
        CHECK((yaw * Vec3::UnitZ() - Vec3::UnitX()).norm() < 1e-12);
    }

    TEST_CASE("observation noise level")
    {
        const auto cfg = small_config();
        const auto model = make_model(cfg);
        const auto sub = make_subject(model, cfg, 5);
        double total = 0;
        long count = 0;
        for (int i = 0; count < 10000; ++i)
        {
            const auto o = make_observation(model, sub.shape, cfg, static_cast<std::uint64_t>(i), 0.01);
            const Points2 centred = o.clean.colwise() - o.clean.rowwise().mean();
            const double scale = std::sqrt(centred.colwise().squaredNorm().mean());
            CHECK(o.noise_sd_image == doctest::Approx(0.01 * scale));
            const Eigen::RowVectorXd err = (o.landmarks - o.clean).colwise().norm() / scale;
            total += err.sum();
            count += err.size();
        }
        const double expected = 0.01 * std::sqrt(std::numbers::pi / 2);
        CHECK(std::abs(total / static_cast<double>(count) - expected) < 0.05 * expected);
    }

    TEST_CASE("config parsing and validation")
    {
        const auto cfg = synth_config_from_json(R"({"seed": 7, "q": 200, "n_subjects": 3, "n_test_subjects": 1})");
        CHECK(cfg.seed == 7);
        CHECK(cfg.q == 200);
        const auto again = synth_config_from_json(synth_config_to_json(cfg));
        CHECK(synth_config_to_json(again) == synth_config_to_json(cfg));
        auto code = [](const std::string& text) {
            try
            {
                synth_config_from_json(text);
            } catch (const Error& e)
            {
                return e.code();
            }
            return ErrorCode::Io;
        };
        CHECK(code(R"({"n_subjects": 0})") == ErrorCode::Config);
        CHECK(code(R"({"q": 201})") == ErrorCode::Config); // 199 is prime
        CHECK(code(R"({"eigenvalue_decay": 1.0})") == ErrorCode::Config);
        CHECK(code(R"({"sigma": 1})") == ErrorCode::Config);
        CHECK(code(R"({"q": "many"})") == ErrorCode::Config);
        CHECK(code("[1, 2]") == ErrorCode::Config);
    }

    TEST_CASE("fixture export is complete and byte-identical across runs")
    {
        SynthConfig cfg = small_config();
        cfg.n_subjects = 4;
        cfg.n_test_subjects = 2;
        cfg.n_images_per_subject = 2;
        const auto a = scratch_dir("export_a"), b = scratch_dir("export_b");
        export_fixtures(cfg, a);
        export_fixtures(cfg, b);
        const auto ta = read_tree(a);
        CHECK(ta == read_tree(b));
        CHECK(ta.count("model.bin") == 1);
        CHECK(ta.count("scans/s0003.obj") == 1);
        CHECK(ta.count("scans/s0003.lmk") == 1);
        CHECK(ta.count("images/s0001_v01.pts") == 1);
        CHECK(ta.size() == 1 + 1 + 1 + 1 + 4 * 2 + 4 * 2);
        const auto manifest = parse_csv(ta.at("manifest.csv"));
        CHECK(manifest[0].size() == 7);
        CHECK(manifest[1][0] == "s0002_v00");
        CHECK(manifest[2][2] == "LQ");
        // The exported scan is the subject's shape.
        const auto model = load_model(a / "model.bin");
        const auto scan = load_mesh(a / "scans/s0002.obj");
        CHECK(flatten(scan.vertices) == make_subject(model, cfg, 2).shape);
    }
}
