#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dynrec/phantom.hpp"
#include "dynrec/trainer.hpp"

namespace dynrec {

/// SER values are capped here when the error norm underflows to zero.
inline constexpr double kSerCapDb = 300.0;

/// 20 log10(||ref|| / ||ref - recon||) over all frames jointly.
double ser_db(const ImageSeries& recon, const ImageSeries& reference);

/// Same formula on the magnitude images; insensitive to a global phase on
/// either argument.
double ser_magnitude_db(const ImageSeries& recon, const ImageSeries& reference);

std::vector<double> per_frame_ser_db(const ImageSeries& recon, const ImageSeries& reference);
std::vector<double> per_frame_ser_magnitude_db(const ImageSeries& recon,
                                               const ImageSeries& reference);

/// Absolute Pearson correlation of each latent channel against the sin/cos
/// projections of each motion phase (max over the pair per mode), plus the
/// injective channel-to-mode assignment maximizing total correlation.
struct LatentCorrelation {
    std::vector<std::array<double, 2>> corr;  // [channel][mode]; mode 0 cardiac, 1 respiratory
    int cardiac_channel = -1;
    int resp_channel = -1;
    double cardiac_corr = 0.0;
    double resp_corr = 0.0;
};
LatentCorrelation latent_motion_correlation(const LatentSequence& latents,
                                            const PhantomTruth& truth);

/// First wall-clock time at which each run's logged magnitude SER reaches
/// the threshold; nullopt = never reached.
struct TimingEntry {
    std::string name;
    std::optional<double> seconds_to_threshold;
    double total_seconds = 0.0;
    double final_ser_db = 0.0;
};
std::vector<TimingEntry> compare_runs(const std::vector<std::string>& names,
                                      const std::vector<TrainHistory>& histories,
                                      double threshold_ser_db);

struct EvalReport {
    double ser_db = 0.0;
    double ser_magnitude_db = 0.0;
    std::vector<double> per_frame_ser_db;
    std::vector<double> per_frame_ser_magnitude_db;
    std::optional<LatentCorrelation> latent_corr;
    std::vector<TimingEntry> timing;
};

}  // namespace dynrec
