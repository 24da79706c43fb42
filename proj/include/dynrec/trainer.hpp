#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynrec/objective.hpp"

namespace dynrec {

/// First-moment/second-moment adaptive step. One instance per variable block.
class AdamOptimizer {
public:
    AdamOptimizer(double lr, double beta1, double beta2, double eps = 1e-8);

    /// In-place update of params from grads; both length n.
    void step(double* params, const double* grads, std::size_t n);

    long iterations() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

enum class TrainMode { Joint = 0, FixedLatent = 1 };

std::string train_mode_name(TrainMode m);
TrainMode train_mode_from_name(const std::string& name);

struct TrainConfig {
    RegWeights weights;
    std::vector<int> epochs_per_stage{60, 60, 60};
    std::vector<int> stage_frame_counts;  // ascending, last must equal N; empty = [1, ceil(N/5), N]
    int batch_size = 10;
    double lr_theta = 1e-4;
    double lr_z = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::Joint;
    int eval_every = 10;       // epochs between history records
    int latent_snapshot_max = 32;  // subsampled latent rows stored per record (0 = none)

    void validate(int num_frames) const;
    /// Fills stage_frame_counts with the default progressive schedule when empty.
    std::vector<int> resolved_stages(int num_frames) const;
};

struct HistoryRecord {
    int stage = 0;
    int epoch = 0;       // within the stage; 0 is the pre-training snapshot
    long step = 0;       // global optimizer step count
    double wall_seconds = 0.0;
    CostBreakdown cost;  // full-data cost on the stage's (binned) measurement set
    std::optional<double> ser_mag_db;      // magnitude SER vs. reference, full series
    std::optional<double> ser_complex_db;  // complex SER vs. reference
    std::vector<double> latent_snapshot;   // subsampled rows, row-major
    std::vector<int> latent_snapshot_rows;
};

struct TrainHistory {
    std::vector<HistoryRecord> records;

    void append(HistoryRecord rec);
    std::string to_jsonl() const;
    static TrainHistory from_jsonl_file(const std::string& path);
    void save_jsonl(const std::string& path) const;
};

/// Piecewise-linear resampling of an (M x d) latent matrix onto K rows,
/// mapping source index range [0, M-1] onto [0, K-1]. For M = 1 the single
/// row is broadcast with small zero-mean jitter (scale 1e-2, bounded) to
/// break symmetry; jitter is deterministic given seed.
LatentSequence interpolate_latents(const LatentSequence& src, int target_len,
                                   std::uint64_t seed = 0);

/// One optimization stage over a (possibly binned) measurement set.
/// Minibatch ADAM on theta and the batch's latent rows; the temporal penalty
/// gradient touches every latent row each step. In FixedLatent mode the
/// latents are never updated. Appends to history and returns the updated
/// state/latents. reference (full-length series) enables SER logging; when
/// the stage has fewer frames than the reference, latents are linearly
/// interpolated to the reference length for evaluation.
struct StageResult {
    GeneratorState state;
    LatentSequence latents;
};
StageResult train_stage(GeneratorState state, LatentSequence latents, const MeasurementSet& mset,
                        const TrainConfig& config, int stage_index, const ImageSeries* reference,
                        TrainHistory& history, double wall_offset_seconds = 0.0);

struct ReconstructResult {
    GeneratorState state;
    LatentSequence latents;
    ImageSeries images;
    TrainHistory history;
};

/// Full progressive pipeline: for each stage, bin the measurements to the
/// stage frame count, warm-start latents by interpolation (stage 0 from
/// scaled random vectors) and theta from the previous stage, then train.
/// checkpoint_dir, when non-empty, receives per-stage checkpoints and the
/// run is resumable from the last completed stage found there.
ReconstructResult reconstruct(const MeasurementSet& mset, const GeneratorConfig& gen_config,
                              const TrainConfig& train_config,
                              const ImageSeries* reference = nullptr,
                              const std::string& checkpoint_dir = "");

void save_latents(const LatentSequence& latents, const std::string& path);
LatentSequence load_latents(const std::string& path);

void save_image_series(const ImageSeries& images, const std::string& path);
ImageSeries load_image_series(const std::string& path);

}  // namespace dynrec
