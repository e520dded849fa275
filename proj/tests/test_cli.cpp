/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: tests/test_cli.cpp
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
#include "frbench/fitting.hpp"
#include "frbench/text_io.hpp"

#include <sstream>

using namespace frbench;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

struct Run
{
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string str(const fs::path& p)
{
    return p.string();
}

void write_pair(const fs::path& dir, const std::string& stem, const TriMesh& mesh, const LandmarkSet7& lmk)
{
    save_mesh(dir / (stem + ".obj"), mesh);
    save_landmarks(dir / (stem + ".lmk"), lmk);
}

std::string manifest_header()
{
    return "image_id,subject_id,subset,pred_mesh,pred_landmarks,gt_mesh,gt_landmarks\n";
}

std::string manifest_row(const std::string& id, const std::string& subset, const std::string& pred,
                         const std::string& gt)
{
    return id + ",s," + subset + "," + pred + ".obj," + pred + ".lmk," + gt + ".obj," + gt + ".lmk\n";
}

SynthConfig small_config()
{
    SynthConfig cfg;
    cfg.q = 200;
    cfg.n_subjects = 12;
    cfg.n_test_subjects = 3;
    cfg.n_images_per_subject = 2;
    return cfg;
}

void save_points(const fs::path& path, const Points2& pts)
{
    std::vector<Vec2> v;
    for (Eigen::Index i = 0; i < pts.cols(); ++i)
        v.push_back(pts.col(i));
    save_points2d(path, v);
}

} // namespace

TEST_SUITE("cli")
{
    TEST_CASE("usage errors exit with status 2")
    {
        CHECK(run({}).code == 2);
        CHECK(run({"bogus"}).code == 2);
        CHECK(run({"evaluate"}).code == 2);
        CHECK(run({"--help"}).code == 0);
    }

    TEST_CASE("self-evaluation reports zero error")
    {
        const auto dir = scratch_dir("cli_self");
        const auto cfg = small_config();
        const auto model = make_model(cfg);
        std::string manifest = manifest_header();
        for (int i = 0; i < 4; ++i)
        {
            const auto sub = make_subject(model, cfg, static_cast<std::uint64_t>(i));
            write_pair(dir, "gt" + std::to_string(i), sub.mesh, sub.landmarks);
            manifest += manifest_row("img" + std::to_string(i), i % 2 ? "LQ" : "HQ", "gt" + std::to_string(i),
                                     "gt" + std::to_string(i));
        }
        write_text_file(dir / "manifest.csv", manifest);
        const auto r = run({"--out", str(dir / "eval"), "evaluate", str(dir / "manifest.csv"), "--no-timestamp"});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("0.00±0.00") != std::string::npos);
        const auto summary = read_text_file(dir / "eval" / "summary.csv");
        CHECK(summary.find("Full,4,0.000000,0.000000,0.00±0.00") != std::string::npos);
        CHECK(fs::exists(dir / "eval" / "distances" / "img3.txt"));
        CHECK(fs::exists(dir / "eval" / "records" / "img0.json"));
        CHECK(fs::exists(dir / "eval" / "ced_Full.csv"));
        CHECK(read_text_file(dir / "eval" / "records" / "img0.json").find("timestamp") == std::string::npos);
    }

    TEST_CASE("inflated prediction reports the offset")
    {
        const auto dir = scratch_dir("cli_inflation");
        const auto f = inflation_fixture(2.0);
        write_pair(dir, "gt", f.gt, f.gt_landmarks);
        write_pair(dir, "pred", f.pred, f.gt_landmarks);
        write_text_file(dir / "manifest.csv", manifest_header() + manifest_row("a", "HQ", "pred", "gt"));
        const auto r = run({"--out", str(dir / "eval"), "evaluate", str(dir / "manifest.csv")});
        REQUIRE(r.code == 0);
        const auto rows = parse_csv(read_text_file(dir / "eval" / "results.csv"));
        REQUIRE(rows.size() >= 2);
        double v = 0;
        REQUIRE(parse_double(rows[1][3], v));
        CHECK(std::abs(v - 2.0) < 0.05);
        CHECK(read_text_file(dir / "eval" / "records" / "a.json").find("timestamp") != std::string::npos);
    }

    TEST_CASE("missing files are reported with the manifest entry")
    {
        const auto dir = scratch_dir("cli_missing");
        const auto f = inflation_fixture(1.0);
        write_pair(dir, "gt", f.gt, f.gt_landmarks);
        write_text_file(dir / "manifest.csv", manifest_header() + manifest_row("lost_one", "HQ", "nowhere", "gt"));
        const auto r = run({"--out", str(dir / "eval"), "evaluate", str(dir / "manifest.csv")});
        CHECK(r.code == 2);
        CHECK(r.err.find("lost_one") != std::string::npos);
        CHECK(r.err.find("nowhere.obj") != std::string::npos);
    }

    TEST_CASE("per-image failures, --strict and worker count")
    {
        const auto dir = scratch_dir("cli_strict");
        const auto cfg = small_config();
        const auto model = make_model(cfg);
        std::string manifest = manifest_header();
        for (int i = 0; i < 6; ++i)
        {
            const auto a = make_subject(model, cfg, static_cast<std::uint64_t>(i));
            const auto b = make_subject(model, cfg, static_cast<std::uint64_t>(i + 50));
            write_pair(dir, "gt" + std::to_string(i), a.mesh, a.landmarks);
            write_pair(dir, "pred" + std::to_string(i), b.mesh, b.landmarks);
            manifest += manifest_row("img" + std::to_string(i), i % 2 ? "LQ" : "HQ", "pred" + std::to_string(i),
                                     "gt" + std::to_string(i));
        }
        write_text_file(dir / "manifest.csv", manifest);
        const auto one = run({"--jobs", "1", "--out", str(dir / "j1"), "evaluate", str(dir / "manifest.csv"),
                              "--no-timestamp"});
        const auto three = run({"--jobs", "3", "--out", str(dir / "j3"), "evaluate", str(dir / "manifest.csv"),
                                "--no-timestamp"});
        REQUIRE(one.code == 0);
        REQUIRE(three.code == 0);
        CHECK(one.out == three.out);
        for (const char* file : {"results.csv", "summary.csv", "ced_HQ.csv", "records/img4.json", "distances/img5.txt"})
            CHECK(read_text_file(dir / "j1" / file) == read_text_file(dir / "j3" / file));

        write_text_file(dir / "pred2.obj", "v 0 0 0\nf 1 2 3\n");
        const auto lenient = run({"--out", str(dir / "e1"), "evaluate", str(dir / "manifest.csv")});
        CHECK(lenient.code == 0);
        CHECK(lenient.err.find("img2") != std::string::npos);
        CHECK(read_text_file(dir / "e1" / "results.csv").find("img2,s,HQ,,failed") != std::string::npos);
        const auto strict = run({"--strict", "--out", str(dir / "e2"), "evaluate", str(dir / "manifest.csv")});
        CHECK(strict.code == 1);
    }

    TEST_CASE("ced command")
    {
        const auto dir = scratch_dir("cli_ced");
        write_text_file(dir / "results.csv",
                        "image_id,subject_id,subset,rmse,status\na,s,HQ,1.0,ok\nb,s,LQ,3.0,ok\nc,s,LQ,,failed\n");
        const auto r = run({"ced", str(dir / "results.csv"), "--ced-max", "4", "--ced-steps", "5"});
        REQUIRE(r.code == 0);
        CHECK(r.out == ced_csv(ced_curve(std::vector<double>{1.0, 3.0}, linear_thresholds(4, 5))));
        CHECK(run({"ced", str(dir / "results.csv"), "--subset", "XQ"}).code == 2);
    }

    TEST_CASE("linear fit recovers a noiseless shape")
    {
        const auto dir = scratch_dir("cli_linear");
        const auto cfg = small_config();
        const auto model = make_model(cfg);
        save_model(dir / "model.bin", model);
        const auto sub = make_subject(model, cfg, 8);
        save_points(dir / "img.pts", make_observation(model, sub.shape, cfg, 3, 0.0).landmarks);
        const auto r = run({"fit", "--model", str(dir / "model.bin"), "-l", str(dir / "img.pts"), "--lambda", "0",
                            "--iterations", "50", "-o", str(dir / "out.obj")});
        REQUIRE(r.code == 0);
        const auto mesh = load_mesh(dir / "out.obj");
        double worst = 0;
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
            worst = std::max(worst, (mesh.vertices[v] - sub.mesh.vertices[v]).norm());
        CHECK(worst < 1e-4);
        CHECK(mesh.triangles == model.triangles);
        CHECK(fs::exists(dir / "out.lmk"));

        // Two images are not accepted by the single-image method.
        CHECK(run({"fit", "--model", str(dir / "model.bin"), "-l", str(dir / "img.pts"), "-l", str(dir / "img.pts"),
                   "-o", str(dir / "out2.obj")})
                  .code == 2);
    }

    TEST_CASE("landmark files with the wrong point count are rejected")
    {
        const auto dir = scratch_dir("cli_67");
        const auto cfg = small_config();
        const auto model = make_model(cfg);
        save_model(dir / "model.bin", model);
        const Points2 u = make_observation(model, model.mean, cfg, 1, 0.0).landmarks;
        save_points(dir / "short.pts", u.leftCols(67));
        const auto r = run({"fit", "--model", str(dir / "model.bin"), "-l", str(dir / "short.pts"), "-o",
                            str(dir / "out.obj")});
        CHECK(r.code == 2);
        CHECK(r.err.find("expected 68") != std::string::npos);
        CHECK(r.err.find("short.pts") != std::string::npos);
        CHECK_FALSE(fs::exists(dir / "out.obj"));
    }

    TEST_CASE("synth, train and batch fit round trip")
    {
        const auto dir = scratch_dir("cli_pipeline");
        const auto cfg = small_config();
        write_text_file(dir / "config.json", synth_config_to_json(cfg));
        const auto data = dir / "data";
        REQUIRE(run({"--out", str(data), "synth", str(dir / "config.json")}).code == 0);
        const auto again = run({"--out", str(dir / "data2"), "synth", str(dir / "config.json")});
        REQUIRE(again.code == 0);
        for (const char* file : {"model.bin", "observations.csv", "manifest.csv", "scans/s0005.obj", "images/s0005_v01.pts"})
            CHECK(read_binary_file(data / file) == read_binary_file(dir / "data2" / file));

        const auto trained =
            run({"train", "--data", str(data), "-K", "5", "--capacity", "2", "-o", str(dir / "reg.bin")});
        REQUIRE(trained.code == 0);
        std::istringstream lines(trained.out);
        std::string line;
        std::vector<double> objectives;
        while (std::getline(lines, line))
            if (line.rfind("stage ", 0) == 0)
                objectives.push_back(std::stod(line.substr(line.rfind(' ') + 1)));
        REQUIRE(objectives.size() == 5);
        for (std::size_t k = 1; k < objectives.size(); ++k)
            CHECK(objectives[k] <= objectives[k - 1]);
        CHECK(trained.out.find("samples 9") != std::string::npos);

        const auto zero = run({"train", "--data", str(data), "-K", "0", "-o", str(dir / "reg0.bin")});
        CHECK(zero.code == 0);
        CHECK(zero.err.find("warning") != std::string::npos);

        // Three images of one subject give one reconstruction.
        CascadeTrainOptions opt;
        const auto model = load_model(data / "model.bin");
        std::vector<TrainingSample> samples;
        for (int i = 0; i < 30; ++i)
        {
            const auto sub = make_subject(model, cfg, static_cast<std::uint64_t>(100 + i));
            std::vector<Points2> images;
            for (int v = 0; v < 3; ++v)
                images.push_back(make_observation(model, sub.shape, cfg, static_cast<std::uint64_t>(1000 + 3 * i + v)).landmarks);
            samples.push_back({sub.shape, assemble_landmark_vector(images, 3)});
        }
        save_regressor(dir / "reg3.bin", cascade_train(samples, model, opt).regressor);
        std::vector<std::string> args = {"fit",         "--model", str(data / "model.bin"), "--method", "cascade",
                                         "--regressor", str(dir / "reg3.bin"), "-o", str(dir / "multi.obj")};
        for (int v = 0; v < 3; ++v)
        {
            args.push_back("-l");
            args.push_back(str(data / "images" / ("s0011_v0" + std::to_string(v % 2) + ".pts")));
        }
        const auto multi = run(args);
        REQUIRE(multi.code == 0);
        CHECK(load_mesh(dir / "multi.obj").vertices.size() == 200);
        CHECK(fs::exists(dir / "multi.lmk"));

        const auto batch = run({"fit", "--data", str(data), "--method", "cascade", "--regressor", str(dir / "reg.bin")});
        REQUIRE(batch.code == 0);
        CHECK(fs::exists(data / "predictions" / "s0009_v01.obj"));
        CHECK(fs::exists(data / "predictions" / "s0011_v00.lmk"));
        const auto eval = run({"--out", str(dir / "eval"), "evaluate", str(data / "manifest.csv"), "--no-timestamp"});
        CHECK(eval.code == 0);
        CHECK(eval.out.find("Full") != std::string::npos);

        CHECK(run({"fit", "--data", str(data), "--method", "cascade"}).code == 2);
        CHECK(run({"fit", "--data", str(data), "--method", "linear", "--regressor", str(dir / "reg.bin")}).code == 2);
    }

    TEST_CASE("corrupt fixtures name the offending file")
    {
        const auto dir = scratch_dir("cli_corrupt");
        const auto data = dir / "data";
        REQUIRE(run({"--seed", "5", "--out", str(data), "synth"}).code == 0);
        auto bytes = read_binary_file(data / "model.bin");
        bytes.resize(bytes.size() / 2);
        write_binary_file(data / "model.bin", bytes);
        const auto r = run({"train", "--data", str(data)});
        CHECK(r.code == 2);
        CHECK(r.err.find("model.bin") != std::string::npos);

        const auto r2 = run({"synth", str(dir / "absent.json")});
        CHECK(r2.code == 2);
        CHECK(r2.err.find("absent.json") != std::string::npos);
    }
}
