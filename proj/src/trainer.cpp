#include "dynrec/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dynrec/archive.hpp"
#include "dynrec/evaluation.hpp"
#include "dynrec/rng.hpp"

namespace dynrec {

namespace fs = std::filesystem;

// --- ADAM -------------------------------------------------------------------

AdamOptimizer::AdamOptimizer(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    require(lr > 0.0, "learning rate must be > 0");
}

void AdamOptimizer::step(double* params, const double* grads, std::size_t n) {
    if (m_.size() != n) {
        m_.assign(n, 0.0);
        v_.assign(n, 0.0);
        t_ = 0;
    }
    t_++;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); i++) {
        const double g = grads[i];
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
        const double mh = m_[i] / bc1;
        const double vh = v_[i] / bc2;
        params[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
}

// --- config -----------------------------------------------------------------

std::string train_mode_name(TrainMode m) {
    return m == TrainMode::Joint ? "joint" : "fixed-latent";
}

TrainMode train_mode_from_name(const std::string& name) {
    if (name == "joint") return TrainMode::Joint;
    if (name == "fixed-latent") return TrainMode::FixedLatent;
    throw ValidationError("unknown train mode: " + name);
}

std::vector<int> TrainConfig::resolved_stages(int num_frames) const {
    if (!stage_frame_counts.empty()) return stage_frame_counts;
    std::vector<int> counts{1};
    const int mid = (num_frames + 4) / 5;  // ceil(N/5)
    if (mid > 1 && mid < num_frames) counts.push_back(mid);
    if (num_frames > 1) counts.push_back(num_frames);
    return counts;
}

void TrainConfig::validate(int num_frames) const {
    weights.validate();
    const auto counts = resolved_stages(num_frames);
    require(!counts.empty(), "stage_frame_counts must not be empty");
    require(counts.front() >= 1, "stage frame counts must be >= 1");
    for (size_t i = 1; i < counts.size(); i++)
        require(counts[i] > counts[i - 1], "stage_frame_counts must be strictly ascending");
    require(counts.back() == num_frames, "last stage frame count must equal the frame count");
    require(epochs_per_stage.size() == counts.size(),
            "epochs_per_stage and stage_frame_counts lengths must match");
    for (int e : epochs_per_stage) require(e >= 0, "epochs must be >= 0");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(lr_theta > 0.0 && lr_z > 0.0, "learning rates must be > 0");
    require(adam_beta1 > 0.0 && adam_beta1 < 1.0 && adam_beta2 > 0.0 && adam_beta2 < 1.0,
            "adam betas must lie in (0, 1)");
    require(eval_every >= 1, "eval_every must be >= 1");
}

// --- history ----------------------------------------------------------------

void TrainHistory::append(HistoryRecord rec) { records.push_back(std::move(rec)); }

namespace {

nlohmann::json record_to_json(const HistoryRecord& r) {
    nlohmann::json j;
    j["stage"] = r.stage;
    j["epoch"] = r.epoch;
    j["step"] = r.step;
    j["wall_seconds"] = r.wall_seconds;
    j["cost"] = {{"data", r.cost.data},
                 {"network", r.cost.network},
                 {"temporal", r.cost.temporal},
                 {"total", r.cost.total}};
    if (r.ser_mag_db) j["ser_mag_db"] = *r.ser_mag_db;
    if (r.ser_complex_db) j["ser_complex_db"] = *r.ser_complex_db;
    if (!r.latent_snapshot.empty()) {
        j["latent_snapshot"] = r.latent_snapshot;
        j["latent_snapshot_rows"] = r.latent_snapshot_rows;
    }
    return j;
}

HistoryRecord record_from_json(const nlohmann::json& j) {
    HistoryRecord r;
    r.stage = j.at("stage").get<int>();
    r.epoch = j.at("epoch").get<int>();
    r.step = j.at("step").get<long>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.cost.data = j.at("cost").at("data").get<double>();
    r.cost.network = j.at("cost").at("network").get<double>();
    r.cost.temporal = j.at("cost").at("temporal").get<double>();
    r.cost.total = j.at("cost").at("total").get<double>();
    if (j.contains("ser_mag_db")) r.ser_mag_db = j.at("ser_mag_db").get<double>();
    if (j.contains("ser_complex_db")) r.ser_complex_db = j.at("ser_complex_db").get<double>();
    if (j.contains("latent_snapshot")) {
        r.latent_snapshot = j.at("latent_snapshot").get<std::vector<double>>();
        r.latent_snapshot_rows = j.at("latent_snapshot_rows").get<std::vector<int>>();
    }
    return r;
}

}  // namespace

std::string TrainHistory::to_jsonl() const {
    std::ostringstream os;
    for (const auto& r : records) os << record_to_json(r).dump() << '\n';
    return os.str();
}

void TrainHistory::save_jsonl(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write history: " + path);
    f << to_jsonl();
}

TrainHistory TrainHistory::from_jsonl_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read history: " + path);
    TrainHistory h;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        h.records.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    return h;
}

// --- latent initialization and interpolation --------------------------------

LatentSequence interpolate_latents(const LatentSequence& src, int target_len,
                                   std::uint64_t seed) {
    const int m = src.size();
    const int d = src.dim;
    require(m >= 1, "source latents empty");
    require(target_len >= m, "target length must be >= source length");
    if (target_len == m) return src;

    LatentSequence out = LatentSequence::uniform(target_len, d);
    if (m == 1) {
        // broadcast plus bounded zero-mean jitter to break symmetry
        Rng rng(Rng::mix(seed, 0x171e));
        const double half_width = 1e-2 * std::sqrt(3.0);  // sd 1e-2, |jitter| <= ~1.73e-2
        for (int i = 0; i < target_len; i++)
            for (int k = 0; k < d; k++)
                out.row(i)[k] = src.row(0)[k] + rng.uniform(-half_width, half_width);
        return out;
    }
    for (int i = 0; i < target_len; i++) {
        const double pos = static_cast<double>(i) * (m - 1) / (target_len - 1);
        const int lo = std::min(static_cast<int>(pos), m - 2);
        const double frac = pos - lo;
        for (int k = 0; k < d; k++)
            out.row(i)[k] = (1.0 - frac) * src.row(lo)[k] + frac * src.row(lo + 1)[k];
    }
    return out;
}

namespace {

LatentSequence random_latents(int n, int d, std::uint64_t seed) {
    LatentSequence seq = LatentSequence::uniform(n, d);
    Rng rng(Rng::mix(seed, 0x1a7e));
    for (auto& v : seq.z) v = 0.1 * rng.normal();
    return seq;
}

std::vector<int> fisher_yates_permutation(int n, Rng& rng) {
    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; i++) perm[static_cast<size_t>(i)] = i;
    for (int i = n - 1; i > 0; i--)
        std::swap(perm[static_cast<size_t>(i)],
                  perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    return perm;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// --- training ---------------------------------------------------------------

StageResult train_stage(GeneratorState state, LatentSequence latents, const MeasurementSet& mset,
                        const TrainConfig& config, int stage_index, const ImageSeries* reference,
                        TrainHistory& history, double wall_offset_seconds) {
    mset.validate();
    latents.validate();
    const int k_frames = static_cast<int>(mset.frames.size());
    require(latents.size() == k_frames, "latents length must match measurement frames");
    require(stage_index >= 0 &&
                stage_index < static_cast<int>(config.epochs_per_stage.size()),
            "stage index out of range");

    const int epochs = config.epochs_per_stage[static_cast<size_t>(stage_index)];
    const int d = latents.dim;
    const GeneratorLayout layout = make_layout(state.config);
    const auto t0 = std::chrono::steady_clock::now();

    AdamOptimizer opt_theta(config.lr_theta, config.adam_beta1, config.adam_beta2);
    AdamOptimizer opt_z(config.lr_z, config.adam_beta1, config.adam_beta2);
    Rng batch_rng(Rng::mix(config.seed, 0xb000 + static_cast<std::uint64_t>(stage_index)));

    long step = 0;
    const auto log_record = [&](int epoch) {
        HistoryRecord rec;
        rec.stage = stage_index;
        rec.epoch = epoch;
        rec.step = step;
        rec.cost = total_cost(state, latents, mset, config.weights, all_frames(mset));
        if (reference && !reference->empty()) {
            const int full_n = static_cast<int>(reference->size());
            const LatentSequence eval_latents =
                latents.size() == full_n
                    ? latents
                    : interpolate_latents(latents, full_n,
                                          Rng::mix(config.seed, 0xe7a1));
            const ImageSeries recon = generate(state, eval_latents.z, full_n);
            rec.ser_mag_db = ser_magnitude_db(recon, *reference);
            rec.ser_complex_db = ser_db(recon, *reference);
        }
        if (config.latent_snapshot_max > 0) {
            const int rows = std::min(config.latent_snapshot_max, k_frames);
            for (int r = 0; r < rows; r++) {
                const int src = (rows == 1) ? 0 : r * (k_frames - 1) / (rows - 1);
                rec.latent_snapshot_rows.push_back(src);
                for (int kk = 0; kk < d; kk++) rec.latent_snapshot.push_back(latents.row(src)[kk]);
            }
        }
        rec.wall_seconds = wall_offset_seconds + seconds_since(t0);
        history.append(std::move(rec));
    };

    log_record(0);  // stage-boundary snapshot; also checks the warm start is finite
    if (!std::isfinite(history.records.back().cost.total))
        throw TrainingDivergence("non-finite cost at stage start");

    std::vector<double> gtheta(layout.total_params);
    std::vector<double> gz(static_cast<size_t>(k_frames) * d);
    for (int epoch = 0; epoch < epochs; epoch++) {
        const std::vector<int> perm = fisher_yates_permutation(k_frames, batch_rng);
        for (int start = 0; start < k_frames; start += config.batch_size) {
            const int end = std::min(k_frames, start + config.batch_size);
            const std::vector<int> batch(perm.begin() + start, perm.begin() + end);
            const double b = static_cast<double>(batch.size());
            // per-frame averaged terms scaled by the stage frame count keep
            // the lambdas meaningful for any batch size
            const double scale_data = static_cast<double>(k_frames) / b;
            const double scale_net = config.weights.lambda1 * static_cast<double>(k_frames);
            const double scale_temp = config.weights.lambda2;

            std::fill(gtheta.begin(), gtheta.end(), 0.0);
            std::fill(gz.begin(), gz.end(), 0.0);
            const TermValues terms =
                cost_terms_grad(state, latents, mset, batch, scale_data,
                                config.weights.lambda1 > 0.0 ? scale_net : 0.0,
                                config.mode == TrainMode::Joint ? scale_temp : 0.0,
                                gtheta.data(),
                                config.mode == TrainMode::Joint ? gz.data() : nullptr);
            step++;

            const double step_cost = scale_data * terms.data +
                                     scale_net * terms.network / std::max(1.0, b) +
                                     scale_temp * terms.temporal;
            if (!std::isfinite(step_cost)) {
                std::ostringstream os;
                os << "non-finite cost at stage " << stage_index << " step " << step
                   << " (data=" << terms.data << ", network=" << terms.network
                   << ", temporal=" << terms.temporal << ")";
                throw TrainingDivergence(os.str());
            }

            opt_theta.step(state.params.data(), gtheta.data(), state.params.size());
            if (config.mode == TrainMode::Joint)
                opt_z.step(latents.z.data(), gz.data(), latents.z.size());
        }
        if ((epoch + 1) % config.eval_every == 0 || epoch + 1 == epochs) log_record(epoch + 1);
    }

    return {std::move(state), std::move(latents)};
}

// --- serialization helpers ---------------------------------------------------

void save_latents(const LatentSequence& latents, const std::string& path) {
    Archive a("latent_sequence");
    a.meta()["dim"] = latents.dim;
    a.meta()["num_frames"] = latents.size();
    a.add_f64("z", latents.z, {latents.size(), latents.dim});
    a.add_f64("frame_times", latents.frame_times, {latents.size()});
    a.save(path);
}

LatentSequence load_latents(const std::string& path) {
    Archive a = Archive::load(path);
    if (a.kind() != "latent_sequence") throw std::runtime_error("not a latent archive: " + path);
    LatentSequence seq;
    seq.dim = a.meta().at("dim").get<int>();
    seq.z = a.f64("z");
    seq.frame_times = a.f64("frame_times");
    seq.validate();
    return seq;
}

void save_image_series(const ImageSeries& images, const std::string& path) {
    require(!images.empty(), "image series is empty");
    const GridShape grid = images.front().shape;
    Archive a("image_series");
    a.meta()["grid"] = {grid.h, grid.w};
    a.meta()["num_frames"] = static_cast<int>(images.size());
    std::vector<double> flat;
    flat.reserve(images.size() * static_cast<size_t>(grid.pixels()) * 2);
    for (const auto& img : images) {
        require(img.shape == grid, "inconsistent frame shapes");
        for (const auto& v : img.data) {
            flat.push_back(v.real());
            flat.push_back(v.imag());
        }
    }
    a.add_f64("images", flat, {static_cast<std::int64_t>(images.size()), grid.h, grid.w, 2});
    a.save(path);
}

ImageSeries load_image_series(const std::string& path) {
    Archive a = Archive::load(path);
    if (a.kind() != "image_series") throw std::runtime_error("not an image series: " + path);
    const GridShape grid{a.meta().at("grid")[0].get<int>(), a.meta().at("grid")[1].get<int>()};
    const int n = a.meta().at("num_frames").get<int>();
    const auto& flat = a.f64("images");
    ImageSeries out(static_cast<size_t>(n), ComplexImage(grid));
    const std::int64_t npix = grid.pixels();
    for (int i = 0; i < n; i++) {
        const double* src = flat.data() + static_cast<std::size_t>(i) * npix * 2;
        for (std::int64_t k = 0; k < npix; k++)
            out[static_cast<size_t>(i)].data[k] = cplx(src[2 * k], src[2 * k + 1]);
    }
    return out;
}

// --- full progressive pipeline -----------------------------------------------

namespace {

std::string stage_ckpt_dir(const std::string& root, int stage) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "stage_%02d", stage);
    return (fs::path(root) / buf).string();
}

void write_stage_checkpoint(const std::string& root, int stage, const GeneratorState& state,
                            const LatentSequence& latents, const TrainHistory& history) {
    const fs::path dir = stage_ckpt_dir(root, stage);
    fs::create_directories(dir);
    save_generator(state, (dir / "generator.ckpt").string());
    save_latents(latents, (dir / "latents.bin").string());
    history.save_jsonl((dir / "history.jsonl").string());
}

bool stage_checkpoint_exists(const std::string& root, int stage) {
    const fs::path dir = stage_ckpt_dir(root, stage);
    return fs::exists(dir / "generator.ckpt") && fs::exists(dir / "latents.bin") &&
           fs::exists(dir / "history.jsonl");
}

}  // namespace

ReconstructResult reconstruct(const MeasurementSet& mset, const GeneratorConfig& gen_config,
                              const TrainConfig& train_config, const ImageSeries* reference,
                              const std::string& checkpoint_dir) {
    mset.validate();
    gen_config.validate();
    const int n = static_cast<int>(mset.frames.size());
    train_config.validate(n);
    const std::vector<int> stage_counts = train_config.resolved_stages(n);
    require(gen_config.output_shape == mset.grid,
            "generator output shape must match the measurement grid");

    ReconstructResult result;
    result.state = init_generator(gen_config);
    int first_stage = 0;

    // resume from the last completed stage checkpoint, if any
    if (!checkpoint_dir.empty()) {
        for (int s = static_cast<int>(stage_counts.size()) - 1; s >= 0; s--) {
            if (stage_checkpoint_exists(checkpoint_dir, s)) {
                result.state = load_generator(
                    (fs::path(stage_ckpt_dir(checkpoint_dir, s)) / "generator.ckpt").string());
                result.latents = load_latents(
                    (fs::path(stage_ckpt_dir(checkpoint_dir, s)) / "latents.bin").string());
                result.history = TrainHistory::from_jsonl_file(
                    (fs::path(stage_ckpt_dir(checkpoint_dir, s)) / "history.jsonl").string());
                first_stage = s + 1;
                break;
            }
        }
    }

    double wall_offset = 0.0;
    for (const auto& rec : result.history.records)
        wall_offset = std::max(wall_offset, rec.wall_seconds);

    for (int stage = first_stage; stage < static_cast<int>(stage_counts.size()); stage++) {
        const int k_target = stage_counts[static_cast<size_t>(stage)];
        const int group = (n + k_target - 1) / k_target;  // ceil
        const MeasurementSet binned = bin_measurements(mset, group);
        const int k_actual = static_cast<int>(binned.frames.size());

        LatentSequence stage_latents =
            (stage == 0)
                ? random_latents(k_actual, gen_config.latent_dim, train_config.seed)
                : interpolate_latents(
                      result.latents, k_actual,
                      Rng::mix(train_config.seed, 0x57a0 + static_cast<std::uint64_t>(stage)));

        StageResult sr = train_stage(std::move(result.state), std::move(stage_latents), binned,
                                     train_config, stage, reference, result.history, wall_offset);
        result.state = std::move(sr.state);
        result.latents = std::move(sr.latents);
        for (const auto& rec : result.history.records)
            wall_offset = std::max(wall_offset, rec.wall_seconds);

        if (!checkpoint_dir.empty())
            write_stage_checkpoint(checkpoint_dir, stage, result.state, result.latents,
                                   result.history);
    }

    result.images = generate(result.state, result.latents.z, result.latents.size());
    return result;
}

}  // namespace dynrec
