// dynrec: dynamic image reconstruction from undersampled frequency-domain
// data by joint optimization of a convolutional generator and per-frame
// latent vectors.
//
// Subcommands: phantom, acquire, reconstruct, evaluate, plot.
// Exit codes: 0 success, 2 validation/configuration error, 3 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "dynrec/archive.hpp"
#include "dynrec/evaluation.hpp"
#include "dynrec/phantom.hpp"
#include "dynrec/rng.hpp"
#include "dynrec/svgplot.hpp"
#include "dynrec/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dynrec;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f) throw std::runtime_error("input not found: " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ValidationError("config parse error in " + path + ": " + e.what());
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (j.contains(key) && !j.at(key).is_null()) return j.at(key).get<T>();
    return fallback;
}

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw std::runtime_error("input not found: " + path);
}

void write_json(const json& j, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write: " + path);
    f << j.dump(2) << '\n';
}

void write_manifest(const std::string& subcommand, const json& resolved_config,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, const std::string& path) {
    json m;
    m["subcommand"] = subcommand;
    m["format_version"] = Archive::kFormatVersion;
    m["config"] = resolved_config;
    m["inputs"] = json::object();
    for (const auto& in : inputs) m["inputs"][in] = sha256_file(in);
    m["outputs"] = outputs;
    write_json(m, path);
}

// --- config materialization ---------------------------------------------

PhantomSpec phantom_spec_from_json(const json& j, std::optional<std::uint64_t> seed_override) {
    PhantomSpec spec;
    if (j.contains("grid")) spec.grid = {j.at("grid")[0].get<int>(), j.at("grid")[1].get<int>()};
    spec.num_frames = get_or(j, "num_frames", spec.num_frames);
    spec.cardiac_period = get_or(j, "cardiac_period", spec.cardiac_period);
    spec.resp_period = get_or(j, "resp_period", spec.resp_period);
    spec.cardiac_amplitude = get_or(j, "cardiac_amplitude", spec.cardiac_amplitude);
    spec.resp_amplitude = get_or(j, "resp_amplitude", spec.resp_amplitude);
    spec.noise_sigma = get_or(j, "noise_sigma", spec.noise_sigma);
    spec.seed = get_or(j, "seed", spec.seed);
    if (seed_override) spec.seed = *seed_override;
    spec.validate();
    return spec;
}

json phantom_spec_to_json(const PhantomSpec& s) {
    return json{{"grid", {s.grid.h, s.grid.w}},
                {"num_frames", s.num_frames},
                {"cardiac_period", s.cardiac_period},
                {"resp_period", s.resp_period},
                {"cardiac_amplitude", s.cardiac_amplitude},
                {"resp_amplitude", s.resp_amplitude},
                {"noise_sigma", s.noise_sigma},
                {"seed", s.seed}};
}

GeneratorConfig generator_config_from_json(const json& j, GridShape grid) {
    GeneratorConfig cfg;
    cfg.output_shape = grid;
    cfg.latent_dim = get_or(j, "latent_dim", cfg.latent_dim);
    cfg.base_channels = get_or(j, "base_channels", cfg.base_channels);
    if (j.contains("activation"))
        cfg.activation = activation_from_name(j.at("activation").get<std::string>());
    cfg.seed = get_or(j, "seed", cfg.seed);
    cfg.validate();
    return cfg;
}

json generator_config_to_json(const GeneratorConfig& c) {
    return json{{"latent_dim", c.latent_dim},
                {"output_shape", {c.output_shape.h, c.output_shape.w}},
                {"base_channels", c.base_channels},
                {"activation", activation_name(c.activation)},
                {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.weights.lambda1 = get_or(j, "lambda1", cfg.weights.lambda1);
    cfg.weights.lambda2 = get_or(j, "lambda2", cfg.weights.lambda2);
    if (j.contains("stage_frame_counts") && !j.at("stage_frame_counts").is_null())
        cfg.stage_frame_counts = j.at("stage_frame_counts").get<std::vector<int>>();
    if (j.contains("epochs_per_stage"))
        cfg.epochs_per_stage = j.at("epochs_per_stage").get<std::vector<int>>();
    cfg.batch_size = get_or(j, "batch_size", cfg.batch_size);
    cfg.lr_theta = get_or(j, "lr_theta", cfg.lr_theta);
    cfg.lr_z = get_or(j, "lr_z", cfg.lr_z);
    if (j.contains("adam_betas")) {
        cfg.adam_beta1 = j.at("adam_betas")[0].get<double>();
        cfg.adam_beta2 = j.at("adam_betas")[1].get<double>();
    }
    cfg.seed = get_or(j, "seed", cfg.seed);
    if (j.contains("mode")) cfg.mode = train_mode_from_name(j.at("mode").get<std::string>());
    cfg.eval_every = get_or(j, "eval_every", cfg.eval_every);
    cfg.latent_snapshot_max = get_or(j, "latent_snapshot_max", cfg.latent_snapshot_max);
    return cfg;
}

json train_config_to_json(const TrainConfig& c, int num_frames) {
    return json{{"lambda1", c.weights.lambda1},
                {"lambda2", c.weights.lambda2},
                {"stage_frame_counts", c.resolved_stages(num_frames)},
                {"epochs_per_stage", c.epochs_per_stage},
                {"batch_size", c.batch_size},
                {"lr_theta", c.lr_theta},
                {"lr_z", c.lr_z},
                {"adam_betas", {c.adam_beta1, c.adam_beta2}},
                {"seed", c.seed},
                {"mode", train_mode_name(c.mode)},
                {"eval_every", c.eval_every},
                {"latent_snapshot_max", c.latent_snapshot_max}};
}

// --- subcommand bodies ----------------------------------------------------

void cmd_phantom(const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed) {
    const PhantomSpec spec = phantom_spec_from_json(load_config(config_path), seed);
    const PhantomTruth truth = make_phantom(spec);
    save_phantom(truth, out_path);
    std::vector<std::string> inputs;
    if (!config_path.empty()) inputs.push_back(config_path);
    write_manifest("phantom", phantom_spec_to_json(spec), inputs, {out_path},
                   out_path + ".manifest.json");
    std::cout << "phantom: wrote " << spec.num_frames << " frames at " << spec.grid.h << "x"
              << spec.grid.w << " to " << out_path << "\n";
}

void cmd_acquire(const std::string& truth_path, const std::string& config_path,
                 const std::string& out_path, std::optional<std::uint64_t> seed) {
    require_file(truth_path);
    const json cfg = load_config(config_path);
    const PhantomTruth truth = load_phantom(truth_path);
    const int lines = get_or(cfg, "lines_per_frame", 6);
    const int coils = get_or(cfg, "num_coils", 1);
    const double sigma = get_or(cfg, "noise_sigma", truth.spec.noise_sigma);
    std::uint64_t acq_seed = get_or(cfg, "seed", std::uint64_t{2});
    if (seed) acq_seed = *seed;
    require(lines >= 1, "lines_per_frame must be >= 1");
    require(coils >= 1, "num_coils must be >= 1");

    const MeasurementSet mset = simulate_acquisition(truth, lines, coils, sigma, acq_seed);
    save_measurement_set(mset, out_path);
    const json resolved{{"lines_per_frame", lines},
                        {"num_coils", coils},
                        {"noise_sigma", sigma},
                        {"seed", acq_seed}};
    std::vector<std::string> inputs{truth_path};
    if (!config_path.empty()) inputs.push_back(config_path);
    write_manifest("acquire", resolved, inputs, {out_path}, out_path + ".manifest.json");
    std::cout << "acquire: " << mset.frames.size() << " frames, " << mset.total_samples()
              << " samples to " << out_path << "\n";
}

void cmd_reconstruct(const std::string& mset_path, const std::string& config_path,
                     const std::string& out_dir, const std::string& mode_flag,
                     bool no_progressive, const std::string& reference_path,
                     std::optional<std::uint64_t> seed, bool resume) {
    require_file(mset_path);
    const json cfg = load_config(config_path);
    const MeasurementSet mset = load_measurement_set(mset_path);
    const int n = static_cast<int>(mset.frames.size());

    GeneratorConfig gen_cfg = generator_config_from_json(
        cfg.contains("generator") ? cfg.at("generator") : json::object(), mset.grid);
    TrainConfig train_cfg =
        train_config_from_json(cfg.contains("train") ? cfg.at("train") : json::object());
    if (!mode_flag.empty()) train_cfg.mode = train_mode_from_name(mode_flag);
    if (seed) {
        train_cfg.seed = *seed;
        gen_cfg.seed = Rng::mix(*seed, 1);
    }
    if (no_progressive) {
        int total_epochs = 0;
        for (int e : train_cfg.epochs_per_stage) total_epochs += e;
        train_cfg.stage_frame_counts = {n};
        train_cfg.epochs_per_stage = {total_epochs};
    }
    train_cfg.validate(n);

    ImageSeries reference;
    const ImageSeries* ref_ptr = nullptr;
    if (!reference_path.empty()) {
        require_file(reference_path);
        reference = load_phantom(reference_path).images;
        ref_ptr = &reference;
    }

    fs::create_directories(out_dir);
    if (!resume) {
        // a stale stage checkpoint would silently shortcut the run
        for (int s = 0; s < static_cast<int>(train_cfg.resolved_stages(n).size()); s++)
            fs::remove_all(fs::path(out_dir) / ("stage_" + std::string(s < 10 ? "0" : "") +
                                                std::to_string(s)));
    }

    const ReconstructResult result =
        reconstruct(mset, gen_cfg, train_cfg, ref_ptr, out_dir);

    save_generator(result.state, (fs::path(out_dir) / "generator.ckpt").string());
    save_latents(result.latents, (fs::path(out_dir) / "latents.bin").string());
    save_image_series(result.images, (fs::path(out_dir) / "images.bin").string());
    result.history.save_jsonl((fs::path(out_dir) / "history.jsonl").string());

    json resolved;
    resolved["generator"] = generator_config_to_json(gen_cfg);
    resolved["train"] = train_config_to_json(train_cfg, n);
    write_json(resolved, (fs::path(out_dir) / "config.json").string());

    std::vector<std::string> inputs{mset_path};
    if (!config_path.empty()) inputs.push_back(config_path);
    if (!reference_path.empty()) inputs.push_back(reference_path);
    write_manifest("reconstruct", resolved, inputs,
                   {(fs::path(out_dir) / "generator.ckpt").string(),
                    (fs::path(out_dir) / "latents.bin").string(),
                    (fs::path(out_dir) / "images.bin").string(),
                    (fs::path(out_dir) / "history.jsonl").string()},
                   (fs::path(out_dir) / "manifest.json").string());

    const auto& last = result.history.records.back();
    std::cout << "reconstruct: " << n << " frames, final cost " << last.cost.total;
    if (last.ser_mag_db) std::cout << ", magnitude SER " << *last.ser_mag_db << " dB";
    std::cout << "\n";
}

json latent_corr_to_json(const LatentCorrelation& lc) {
    json m = json::array();
    for (const auto& row : lc.corr) m.push_back({row[0], row[1]});
    return json{{"matrix", m},
                {"cardiac_channel", lc.cardiac_channel},
                {"resp_channel", lc.resp_channel},
                {"cardiac_corr", lc.cardiac_corr},
                {"resp_corr", lc.resp_corr}};
}

void cmd_evaluate(const std::vector<std::string>& run_dirs, const std::string& truth_path,
                  std::optional<double> threshold, const std::string& out_path) {
    require(!run_dirs.empty(), "at least one --run directory is required");
    require_file(truth_path);
    const PhantomTruth truth = load_phantom(truth_path);

    json report;
    report["runs"] = json::array();
    std::vector<std::string> names;
    std::vector<TrainHistory> histories;
    for (const auto& dir : run_dirs) {
        require_file((fs::path(dir) / "images.bin").string());
        const ImageSeries recon = load_image_series((fs::path(dir) / "images.bin").string());
        json r;
        r["name"] = dir;
        r["ser_db"] = ser_db(recon, truth.images);
        r["ser_magnitude_db"] = ser_magnitude_db(recon, truth.images);
        r["per_frame_ser_db"] = per_frame_ser_db(recon, truth.images);
        r["per_frame_ser_magnitude_db"] = per_frame_ser_magnitude_db(recon, truth.images);
        const auto latents_path = (fs::path(dir) / "latents.bin").string();
        if (fs::exists(latents_path)) {
            const LatentSequence latents = load_latents(latents_path);
            r["latent_corr"] = latent_corr_to_json(latent_motion_correlation(latents, truth));
        }
        const auto history_path = (fs::path(dir) / "history.jsonl").string();
        if (fs::exists(history_path)) {
            names.push_back(dir);
            histories.push_back(TrainHistory::from_jsonl_file(history_path));
        }
        report["runs"].push_back(std::move(r));
    }

    if (!histories.empty()) {
        // default threshold: the weakest run's final logged SER
        double thr;
        if (threshold) {
            thr = *threshold;
        } else {
            thr = kSerCapDb;
            bool any = false;
            for (const auto& h : histories) {
                std::optional<double> final_ser;
                for (const auto& rec : h.records)
                    if (rec.ser_mag_db) final_ser = *rec.ser_mag_db;
                if (final_ser) {
                    thr = std::min(thr, *final_ser);
                    any = true;
                }
            }
            if (!any) thr = 0.0;
        }
        const auto timing = compare_runs(names, histories, thr);
        json jt;
        jt["threshold_ser_db"] = thr;
        jt["entries"] = json::array();
        for (const auto& e : timing) {
            json je{{"name", e.name},
                    {"total_seconds", e.total_seconds},
                    {"final_ser_db", e.final_ser_db}};
            if (e.seconds_to_threshold)
                je["seconds_to_threshold"] = *e.seconds_to_threshold;
            else
                je["seconds_to_threshold"] = nullptr;  // not reached
            jt["entries"].push_back(std::move(je));
        }
        report["timing"] = std::move(jt);
    }

    write_json(report, out_path);
    std::cout << "evaluate: wrote " << out_path << "\n";
}

void cmd_plot(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    require(!run_dirs.empty(), "at least one --run directory is required");
    fs::create_directories(out_dir);

    std::vector<PlotSeries> ser_time, ser_epoch, cost_epoch;
    std::vector<std::vector<double>> ser_rows;
    for (const auto& dir : run_dirs) {
        const auto history_path = (fs::path(dir) / "history.jsonl").string();
        require_file(history_path);
        const TrainHistory h = TrainHistory::from_jsonl_file(history_path);
        PlotSeries st{fs::path(dir).filename().string(), {}, {}};
        PlotSeries se = st, ce = st;
        int epoch_offset = 0, prev_stage = -1, prev_epoch = 0;
        for (const auto& rec : h.records) {
            if (rec.stage != prev_stage) {
                if (prev_stage >= 0) epoch_offset += prev_epoch;
                prev_stage = rec.stage;
            }
            prev_epoch = rec.epoch;
            const double cum_epoch = epoch_offset + rec.epoch;
            ce.x.push_back(cum_epoch);
            ce.y.push_back(rec.cost.total);
            if (rec.ser_mag_db) {
                st.x.push_back(rec.wall_seconds);
                st.y.push_back(*rec.ser_mag_db);
                se.x.push_back(cum_epoch);
                se.y.push_back(*rec.ser_mag_db);
                ser_rows.push_back({static_cast<double>(ser_time.size()), rec.wall_seconds,
                                    cum_epoch, *rec.ser_mag_db,
                                    rec.ser_complex_db ? *rec.ser_complex_db : std::nan("")});
            }
        }
        if (!st.x.empty()) {
            ser_time.push_back(st);
            ser_epoch.push_back(se);
        }
        cost_epoch.push_back(ce);

        // latent trajectories for this run
        const auto latents_path = (fs::path(dir) / "latents.bin").string();
        if (fs::exists(latents_path)) {
            const LatentSequence latents = load_latents(latents_path);
            std::vector<PlotSeries> channels;
            std::vector<std::vector<double>> rows;
            for (int k = 0; k < latents.dim; k++) {
                PlotSeries s{"z" + std::to_string(k), {}, {}};
                for (int i = 0; i < latents.size(); i++) {
                    s.x.push_back(i);
                    s.y.push_back(latents.row(i)[k]);
                }
                channels.push_back(std::move(s));
            }
            for (int i = 0; i < latents.size(); i++) {
                std::vector<double> row{static_cast<double>(i)};
                for (int k = 0; k < latents.dim; k++) row.push_back(latents.row(i)[k]);
                rows.push_back(std::move(row));
            }
            const std::string stem = fs::path(dir).filename().string();
            write_line_plot((fs::path(out_dir) / ("latents_" + stem + ".svg")).string(),
                            "Latent trajectories: " + stem, "frame", "latent value", channels);
            std::vector<std::string> cols{"frame"};
            for (int k = 0; k < latents.dim; k++) cols.push_back("z" + std::to_string(k));
            write_tsv((fs::path(out_dir) / ("latents_" + stem + ".tsv")).string(), cols, rows);
        }
    }

    if (!ser_time.empty()) {
        write_line_plot((fs::path(out_dir) / "ser_vs_time.svg").string(),
                        "Reconstruction quality vs. wall time", "wall seconds",
                        "magnitude SER (dB)", ser_time);
        write_line_plot((fs::path(out_dir) / "ser_vs_epoch.svg").string(),
                        "Reconstruction quality vs. epoch", "epoch", "magnitude SER (dB)",
                        ser_epoch);
        write_tsv((fs::path(out_dir) / "ser_curves.tsv").string(),
                  {"run", "wall_seconds", "epoch", "ser_mag_db", "ser_complex_db"}, ser_rows);
    }
    write_line_plot((fs::path(out_dir) / "cost_vs_epoch.svg").string(), "Total cost vs. epoch",
                    "epoch", "cost", cost_epoch);
    std::cout << "plot: wrote figures to " << out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic image reconstruction via generator + latent optimization"};
    app.require_subcommand(1);

    std::string config_path, out_path, truth_path, mset_path, reference_path, mode_flag;
    std::vector<std::string> run_dirs;
    std::optional<std::uint64_t> seed;
    std::optional<double> threshold;
    bool no_progressive = false, resume = false;

    auto* p = app.add_subcommand("phantom", "synthesize a dynamic phantom archive");
    p->add_option("--config", config_path, "JSON config");
    p->add_option("--out", out_path, "output archive path")->required();
    p->add_option("--seed", seed, "override config seed");

    auto* a = app.add_subcommand("acquire", "simulate undersampled acquisition of a phantom");
    a->add_option("--truth", truth_path, "phantom archive")->required();
    a->add_option("--config", config_path, "JSON config");
    a->add_option("--out", out_path, "output measurement archive")->required();
    a->add_option("--seed", seed, "override config seed");

    auto* r = app.add_subcommand("reconstruct", "reconstruct an image series from measurements");
    r->add_option("--measurements", mset_path, "measurement archive")->required();
    r->add_option("--config", config_path, "JSON config");
    r->add_option("--out", out_path, "output run directory")->required();
    r->add_option("--mode", mode_flag, "joint | fixed-latent (overrides config)");
    r->add_flag("--no-progressive", no_progressive, "collapse the schedule to a single stage");
    r->add_option("--reference", reference_path, "phantom archive for SER logging");
    r->add_option("--seed", seed, "override config seeds");
    r->add_flag("--resume", resume, "resume from stage checkpoints in the run directory");

    auto* e = app.add_subcommand("evaluate", "metrics report for completed runs");
    e->add_option("--run", run_dirs, "run directory (repeatable)")->required();
    e->add_option("--truth", truth_path, "phantom archive")->required();
    e->add_option("--threshold", threshold, "SER threshold (dB) for the timing table");
    e->add_option("--out", out_path, "report path")->required();

    auto* pl = app.add_subcommand("plot", "figures and plot data from completed runs");
    pl->add_option("--run", run_dirs, "run directory (repeatable)")->required();
    pl->add_option("--out", out_path, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        if (err.get_exit_code() == 0) return app.exit(err);
        app.exit(err);
        return kExitValidation;
    }

    try {
        if (app.got_subcommand(p)) cmd_phantom(config_path, out_path, seed);
        if (app.got_subcommand(a)) cmd_acquire(truth_path, config_path, out_path, seed);
        if (app.got_subcommand(r))
            cmd_reconstruct(mset_path, config_path, out_path, mode_flag, no_progressive,
                            reference_path, seed, resume);
        if (app.got_subcommand(e)) cmd_evaluate(run_dirs, truth_path, threshold, out_path);
        if (app.got_subcommand(pl)) cmd_plot(run_dirs, out_path);
    } catch (const ValidationError& err) {
        std::cerr << "validation error: " << err.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
