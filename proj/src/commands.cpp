/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: src/commands.cpp
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

#include "frbench/cli.hpp"
#include "frbench/fitting.hpp"
#include "frbench/synth.hpp"
#include "frbench/text_io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

namespace frbench {

namespace fs = std::filesystem;

namespace {

struct Globals
{
    int jobs = 0;
    bool strict = false;
    std::optional<std::uint64_t> seed;
    std::string out;
};

fs::path output_dir(const Globals& g, const char* fallback)
{
    if (!g.out.empty())
        return g.out;
    if (const char* env = std::getenv("FRBENCH_OUT"); env && *env)
        return env;
    return fallback;
}

int worker_count(const Globals& g)
{
    if (g.jobs > 0)
        return g.jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

Points2 load_image_landmarks(const fs::path& path, int expected)
{
    const auto pts = load_points2d(path);
    if (static_cast<int>(pts.size()) != expected)
        throw Error(ErrorCode::InvalidLandmarks, path.string() + ": expected " + std::to_string(expected) +
                                                     " landmarks, got " + std::to_string(pts.size()));
    Points2 out(2, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i)
        out.col(static_cast<Eigen::Index>(i)) = pts[i];
    return out;
}

Vector load_shape(const fs::path& path, const MorphableModel& model)
{
    const TriMesh mesh = load_mesh(path);
    if (static_cast<int>(mesh.vertices.size()) != model.vertex_count())
        throw Error(ErrorCode::DimensionMismatch, path.string() + ": " + std::to_string(mesh.vertices.size()) +
                                                      " vertices, model has " + std::to_string(model.vertex_count()));
    return flatten(mesh.vertices);
}

/// Consecutive images of each subject (in table order), cut into groups of at most `size`.
std::vector<std::vector<const ObservationEntry*>> group_by_subject(const std::vector<ObservationEntry>& rows, bool test,
                                                                   int size)
{
    std::vector<std::string> order;
    std::map<std::string, std::vector<const ObservationEntry*>> by_subject;
    for (const auto& r : rows)
    {
        if (r.test != test)
            continue;
        auto& list = by_subject[r.subject_id];
        if (list.empty())
            order.push_back(r.subject_id);
        list.push_back(&r);
    }
    std::vector<std::vector<const ObservationEntry*>> groups;
    for (const auto& id : order)
    {
        const auto& list = by_subject[id];
        for (std::size_t i = 0; i < list.size(); i += static_cast<std::size_t>(size))
            groups.emplace_back(list.begin() + static_cast<std::ptrdiff_t>(i),
                                list.begin() + static_cast<std::ptrdiff_t>(std::min(list.size(), i + size)));
    }
    return groups;
}

void write_prediction(const fs::path& mesh_path, const MorphableModel& model, const Vector& shape)
{
    save_mesh(mesh_path, model.mesh(shape));
    fs::path lmk = mesh_path;
    lmk.replace_extension(".lmk");
    save_landmarks(lmk, model.protocol_landmarks(shape));
}

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string record_json(const ManifestEntry& entry, const ErrorReport& report, bool timestamp)
{
    nlohmann::ordered_json j;
    j["image_id"] = entry.image_id;
    j["subject_id"] = entry.subject_id;
    j["subset"] = std::string(to_string(entry.subset));
    j["rmse"] = report.rmse;
    j["radius"] = report.region.radius;
    j["centre"] = {report.region.centre.x(), report.region.centre.y(), report.region.centre.z()};
    j["region_vertices"] = report.region.vertex_ids.size();
    nlohmann::ordered_json t;
    t["scale"] = report.transform.scale;
    nlohmann::ordered_json rot = nlohmann::ordered_json::array();
    for (int r = 0; r < 3; ++r)
        rot.push_back({report.transform.rotation(r, 0), report.transform.rotation(r, 1), report.transform.rotation(r, 2)});
    t["rotation"] = rot;
    t["translation"] = {report.transform.translation.x(), report.transform.translation.y(),
                        report.transform.translation.z()};
    j["transform"] = t;
    if (timestamp)
        j["timestamp"] = utc_timestamp();
    return j.dump(2) + '\n';
}

std::vector<double> subset_values(const std::vector<ImageResult>& results, const std::string& subset)
{
    std::vector<double> v;
    for (const auto& r : results)
        if (subset == "Full" || to_string(r.subset) == subset)
            v.push_back(r.rmse);
    return v;
}

// ---------------------------------------------------------------------------

struct SynthArgs
{
    std::string config;
};

int cmd_synth(const Globals& g, const SynthArgs& a, std::ostream& out)
{
    SynthConfig cfg;
    if (!a.config.empty())
        cfg = synth_config_from_json(read_text_file(a.config));
    if (g.seed)
        cfg.seed = *g.seed;
    cfg.validate();
    const fs::path dir = output_dir(g, "frbench_synth");
    export_fixtures(cfg, dir);
    out << "wrote " << cfg.n_subjects << " subjects, " << cfg.n_subjects * cfg.n_images_per_subject << " images to "
        << dir.string() << "\n";
    return 0;
}

struct TrainArgs
{
    std::string data;
    std::string model;
    std::string output;
    int stages = 5;
    double ridge = 1e-3;
    bool absolute_ridge = false;
    std::string target = "vertices";
    std::string normalization = "rms";
    int capacity = 1;
};

LandmarkNormalization parse_normalization(const std::string& s)
{
    LandmarkNormalization n;
    if (s == "rms")
        n.scale = LandmarkNormalization::Scale::RmsRadius;
    else if (s == "outer-eyes")
        n.scale = LandmarkNormalization::Scale::OuterEyes;
    else
        throw Error(ErrorCode::InvalidArgument, "unknown normalisation '" + s + "' (rms, outer-eyes)");
    return n;
}

int cmd_train(const Globals& g, const TrainArgs& a, std::ostream& out, std::ostream& err)
{
    const fs::path data(a.data);
    const MorphableModel model = load_model(a.model.empty() ? data / "model.bin" : fs::path(a.model));
    const auto rows = load_observations(data / "observations.csv");
    CascadeTrainOptions options;
    options.stages = a.stages;
    options.ridge = a.ridge;
    options.trace_scaled = !a.absolute_ridge;
    if (a.target == "vertices")
        options.target = RegressionTarget::Vertices;
    else if (a.target == "coefficients")
        options.target = RegressionTarget::Coefficients;
    else
        throw Error(ErrorCode::InvalidArgument, "unknown regression target '" + a.target + "'");
    options.normalization = parse_normalization(a.normalization);

    std::vector<TrainingSample> samples;
    std::map<std::string, Vector> shapes;
    for (const auto& group : group_by_subject(rows, false, a.capacity))
    {
        const std::string& sid = group.front()->subject_id;
        if (!shapes.count(sid))
            shapes[sid] = load_shape(data / "scans" / (sid + ".obj"), model);
        std::vector<Points2> images;
        for (const auto* r : group)
            images.push_back(load_image_landmarks(r->landmarks, model.num_landmarks()));
        samples.push_back({shapes[sid], assemble_landmark_vector(images, a.capacity, options.normalization)});
    }
    if (options.stages == 0)
        err << "warning: K = 0, the regressor predicts the training mean shape\n";
    const auto result = cascade_train(samples, model, options);
    out << "samples " << samples.size() << "\n";
    out << "initial " << format_double(result.initial_error) << "\n";
    for (std::size_t k = 0; k < result.stages.size(); ++k)
        out << "stage " << k + 1 << " objective " << format_double(result.stages[k].objective) << "\n";
    const fs::path dest = a.output.empty() ? output_dir(g, ".") / "regressor.bin" : fs::path(a.output);
    save_regressor(dest, result.regressor);
    out << "wrote " << dest.string() << "\n";
    return 0;
}

struct FitArgs
{
    std::string model;
    std::vector<std::string> landmarks;
    std::string data;
    std::string method = "linear";
    std::string regressor;
    std::string output;
    double lambda = 30.0;
    int iterations = 5;
};

int cmd_fit(const Globals&, const FitArgs& a, std::ostream& out)
{
    if (a.method != "linear" && a.method != "cascade" && a.method != "mean")
        throw Error(ErrorCode::InvalidArgument, "unknown method '" + a.method + "' (linear, cascade, mean)");
    if (a.method == "cascade" && a.regressor.empty())
        throw Error(ErrorCode::InvalidArgument, "the cascade method needs --regressor");
    if (a.method != "cascade" && !a.regressor.empty())
        throw Error(ErrorCode::InvalidArgument, "--regressor is only used by the cascade method");
    if (a.data.empty() == a.landmarks.empty())
        throw Error(ErrorCode::InvalidArgument, "give either --landmarks files or --data for a batch run");

    const fs::path model_path = !a.model.empty() ? fs::path(a.model) : fs::path(a.data) / "model.bin";
    if (a.model.empty() && a.data.empty())
        throw Error(ErrorCode::InvalidArgument, "--model is required");
    const MorphableModel model = load_model(model_path);
    std::optional<CascadedRegressor> reg;
    if (a.method == "cascade")
        reg = load_regressor(a.regressor);

    LinearFitOptions linear;
    linear.lambda = a.lambda;
    linear.iterations = a.iterations;
    auto reconstruct = [&](const std::vector<Points2>& images) -> Vector {
        if (a.method == "mean")
            return model.mean;
        if (a.method == "linear")
        {
            if (images.size() != 1)
                throw Error(ErrorCode::InvalidArgument, "the linear method takes exactly one landmark file");
            return model.shape(fit_shape_linear(model, images.front(), linear).alpha);
        }
        return cascade_predict(*reg, model, assemble_landmark_vector(images, reg->capacity, reg->normalization));
    };

    if (!a.landmarks.empty())
    {
        if (a.output.empty())
            throw Error(ErrorCode::InvalidArgument, "--output is required");
        std::vector<Points2> images;
        for (const auto& p : a.landmarks)
            images.push_back(load_image_landmarks(p, model.num_landmarks()));
        write_prediction(a.output, model, reconstruct(images));
        out << "wrote " << a.output << "\n";
        return 0;
    }

    const fs::path data(a.data);
    const auto rows = load_observations(data / "observations.csv");
    const int group_size = a.method == "cascade" ? reg->capacity : 1;
    std::size_t written = 0;
    for (const auto& group : group_by_subject(rows, true, group_size))
    {
        std::vector<Points2> images;
        for (const auto* r : group)
            images.push_back(load_image_landmarks(r->landmarks, model.num_landmarks()));
        const Vector shape = reconstruct(images);
        for (const auto* r : group)
        {
            write_prediction(data / "predictions" / (r->image_id + ".obj"), model, shape);
            ++written;
        }
    }
    out << "wrote " << written << " predictions to " << (data / "predictions").string() << "\n";
    return 0;
}

struct EvaluateArgs
{
    std::string manifest;
    bool no_timestamp = false;
    bool inner_corners = false;
    double ced_max = 10.0;
    int ced_steps = 101;
};

int cmd_evaluate(const Globals& g, const EvaluateArgs& a, std::ostream& out, std::ostream& err)
{
    const Manifest manifest = load_manifest(a.manifest);
    check_manifest_files(manifest);
    if (a.ced_steps < 2 || !(a.ced_max > 0))
        throw Error(ErrorCode::InvalidArgument, "CED needs at least 2 steps and a positive maximum");
    const fs::path dir = output_dir(g, "frbench_eval");
    ProtocolOptions protocol;
    protocol.nose_bridge = a.inner_corners ? NoseBridge::InnerCorners : NoseBridge::EyeCentres;

    const std::size_t n = manifest.entries.size();
    std::vector<std::optional<double>> rmse(n);
    std::vector<std::string> failure(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++)
        {
            const auto& e = manifest.entries[i];
            try
            {
                const ErrorReport report = evaluate_pair(load_mesh(e.pred_mesh), load_landmarks(e.pred_landmarks),
                                                         load_mesh(e.gt_mesh), load_landmarks(e.gt_landmarks), protocol);
                write_text_file(dir / "distances" / (e.image_id + ".txt"), distance_file(e.image_id, report));
                write_text_file(dir / "records" / (e.image_id + ".json"), record_json(e, report, !a.no_timestamp));
                rmse[i] = report.rmse;
            } catch (const std::exception& ex)
            {
                failure[i] = ex.what();
            }
        }
    };
    const int workers = std::min<int>(worker_count(g), static_cast<int>(std::max<std::size_t>(n, 1)));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w)
        pool.emplace_back(work);
    work();
    for (auto& t : pool)
        t.join();

    std::vector<ImageResult> results;
    std::size_t failures = 0;
    std::string table = "image_id,subject_id,subset,rmse,status\n";
    for (std::size_t i = 0; i < n; ++i)
    {
        const auto& e = manifest.entries[i];
        if (rmse[i])
        {
            results.push_back({e.image_id, e.subset, *rmse[i]});
            table += e.image_id + "," + e.subject_id + "," + std::string(to_string(e.subset)) + "," +
                     format_double(*rmse[i]) + ",ok\n";
        }
        else
        {
            ++failures;
            err << "image " << e.image_id << " failed: " << failure[i] << "\n";
            table += e.image_id + "," + e.subject_id + "," + std::string(to_string(e.subset)) + ",,failed\n";
        }
    }
    write_text_file(dir / "results.csv", table);

    if (!results.empty())
    {
        const Summary summary = summarize(results, failures);
        for (const auto& w : summary.warnings)
            err << "warning: " << w << "\n";
        write_text_file(dir / "summary.csv", summary_csv(summary));
        write_text_file(dir / "summary.txt", summary_table(summary));
        const auto thresholds = linear_thresholds(a.ced_max, static_cast<std::size_t>(a.ced_steps));
        for (const auto& row : summary.rows)
        {
            const auto values = subset_values(results, row.name);
            write_text_file(dir / ("ced_" + row.name + ".csv"), ced_csv(ced_curve(values, thresholds)));
        }
        out << summary_table(summary);
    }
    else
    {
        err << "no image evaluated successfully\n";
    }
    if (failures > 0 && g.strict)
        return 1;
    return results.empty() && n > 0 ? 1 : 0;
}

struct CedArgs
{
    std::string input;
    std::string subset = "Full";
    std::string output;
    double ced_max = 10.0;
    int ced_steps = 101;
};

int cmd_ced(const CedArgs& a, std::ostream& out)
{
    if (a.subset != "HQ" && a.subset != "LQ" && a.subset != "Full")
        throw Error(ErrorCode::InvalidArgument, "subset must be HQ, LQ or Full");
    const auto rows = parse_csv(read_text_file(a.input));
    std::vector<double> values;
    std::size_t rmse_col = 0, subset_col = 0, status_col = 0;
    bool header = true;
    for (std::size_t r = 0; r < rows.size(); ++r)
    {
        const auto& row = rows[r];
        if (row.empty())
            continue;
        if (header)
        {
            auto find = [&](const char* name) {
                const auto it = std::find(row.begin(), row.end(), name);
                if (it == row.end())
                    throw Error(ErrorCode::Parse, a.input + ": header lacks column '" + name + "'");
                return static_cast<std::size_t>(it - row.begin());
            };
            rmse_col = find("rmse");
            subset_col = find("subset");
            status_col = find("status");
            header = false;
            continue;
        }
        if (row.size() <= std::max({rmse_col, subset_col, status_col}))
            throw Error(ErrorCode::Parse, a.input + ": line " + std::to_string(r + 1) + ": wrong field count");
        if (row[status_col] != "ok")
            continue;
        if (a.subset != "Full" && row[subset_col] != a.subset)
            continue;
        double v = 0;
        if (!parse_double(row[rmse_col], v))
            throw Error(ErrorCode::Parse, a.input + ": line " + std::to_string(r + 1) + ": bad rmse value");
        values.push_back(v);
    }
    if (values.empty())
        throw Error(ErrorCode::EmptyInput, a.input + ": no successful " + a.subset + " results");
    const std::string csv =
        ced_csv(ced_curve(values, linear_thresholds(a.ced_max, static_cast<std::size_t>(a.ced_steps))));
    if (a.output.empty())
        out << csv;
    else
        write_text_file(a.output, csv);
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Dense 3D face reconstruction benchmark tools"};
    app.name("frbench");
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--jobs", g.jobs, "Worker threads (default: logical CPU count)")->check(CLI::NonNegativeNumber);
    app.add_flag("--strict", g.strict, "Exit with status 1 if any image fails");
    app.add_option("--seed", g.seed, "Override the random seed");
    app.add_option("--out", g.out, "Output directory (default: $FRBENCH_OUT)");

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic dataset");
    s->add_option("config", synth.config, "JSON config (defaults when omitted)");

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Train a cascaded regressor on a synthetic dataset");
    t->add_option("--data", train.data, "Dataset directory")->required();
    t->add_option("--model", train.model, "Model file (default: <data>/model.bin)");
    t->add_option("--output,-o", train.output, "Regressor file (default: <out>/regressor.bin)");
    t->add_option("--stages,-K", train.stages, "Cascade stages")->check(CLI::NonNegativeNumber);
    t->add_option("--ridge", train.ridge, "Ridge weight");
    t->add_flag("--absolute-ridge", train.absolute_ridge, "Use the ridge weight as given, without trace scaling");
    t->add_option("--target", train.target, "vertices or coefficients");
    t->add_option("--normalization", train.normalization, "rms or outer-eyes");
    t->add_option("--capacity", train.capacity, "Images per sample (N)")->check(CLI::PositiveNumber);

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Reconstruct a neutral face from 2D landmarks");
    f->add_option("--model", fit.model, "Model file");
    f->add_option("--landmarks,-l", fit.landmarks, "68-point landmark file(s), one per image");
    f->add_option("--data", fit.data, "Fit every test image of a synthetic dataset into <data>/predictions");
    f->add_option("--method", fit.method, "linear, cascade or mean");
    f->add_option("--regressor", fit.regressor, "Regressor file (cascade)");
    f->add_option("--output,-o", fit.output, "Output mesh; landmarks go next to it as .lmk");
    f->add_option("--lambda", fit.lambda, "Shape prior weight (linear)");
    f->add_option("--iterations", fit.iterations, "Camera/shape iterations (linear)")->check(CLI::PositiveNumber);

    EvaluateArgs eval;
    auto* e = app.add_subcommand("evaluate", "Evaluate predictions listed in a manifest");
    e->add_option("manifest", eval.manifest, "Manifest CSV")->required();
    e->add_flag("--no-timestamp", eval.no_timestamp, "Omit timestamps from the JSON records");
    e->add_flag("--inner-corners", eval.inner_corners, "Nose bridge from the inner eye corners only");
    e->add_option("--ced-max", eval.ced_max, "Largest CED threshold (mm)");
    e->add_option("--ced-steps", eval.ced_steps, "Number of CED thresholds");

    CedArgs ced;
    auto* c = app.add_subcommand("ced", "Cumulative error distribution from a results CSV");
    c->add_option("results", ced.input, "results.csv written by evaluate")->required();
    c->add_option("--subset", ced.subset, "HQ, LQ or Full");
    c->add_option("--output,-o", ced.output, "Output CSV (default: stdout)");
    c->add_option("--ced-max", ced.ced_max, "Largest threshold (mm)");
    c->add_option("--ced-steps", ced.ced_steps, "Number of thresholds");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try
    {
        app.parse(argv);
    } catch (const CLI::ParseError& pe)
    {
        const int code = app.exit(pe, out, err);
        return code == 0 ? 0 : 2;
    }

    try
    {
        if (*s)
            return cmd_synth(g, synth, out);
        if (*t)
            return cmd_train(g, train, out, err);
        if (*f)
            return cmd_fit(g, fit, out);
        if (*e)
            return cmd_evaluate(g, eval, out, err);
        return cmd_ced(ced, out);
    } catch (const std::exception& ex)
    {
        err << "error: " << ex.what() << "\n";
        return 2;
    }
}

} // namespace frbench
