#include "dynrec/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace dynrec {

namespace {

void check_shapes(const ImageSeries& recon, const ImageSeries& reference) {
    require(!reference.empty(), "reference series is empty");
    require(recon.size() == reference.size(), "series lengths differ");
    for (size_t i = 0; i < recon.size(); i++)
        require(recon[i].shape == reference[i].shape, "frame shapes differ");
}

double to_db(double ref_sq, double err_sq) {
    if (ref_sq <= 0.0) throw ValidationError("reference has zero norm");
    if (err_sq <= 0.0) return kSerCapDb;
    return std::min(10.0 * std::log10(ref_sq / err_sq), kSerCapDb);
}

// Pearson correlation; 0 when either side is constant.
double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < n; i++) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (size_t i = 0; i < n; i++) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

double ser_db(const ImageSeries& recon, const ImageSeries& reference) {
    check_shapes(recon, reference);
    double ref_sq = 0.0, err_sq = 0.0;
    for (size_t i = 0; i < recon.size(); i++) {
        for (size_t p = 0; p < reference[i].data.size(); p++) {
            ref_sq += std::norm(reference[i].data[p]);
            err_sq += std::norm(reference[i].data[p] - recon[i].data[p]);
        }
    }
    return to_db(ref_sq, err_sq);
}

double ser_magnitude_db(const ImageSeries& recon, const ImageSeries& reference) {
    check_shapes(recon, reference);
    double ref_sq = 0.0, err_sq = 0.0;
    for (size_t i = 0; i < recon.size(); i++) {
        for (size_t p = 0; p < reference[i].data.size(); p++) {
            const double r = std::abs(reference[i].data[p]);
            const double e = r - std::abs(recon[i].data[p]);
            ref_sq += r * r;
            err_sq += e * e;
        }
    }
    return to_db(ref_sq, err_sq);
}

std::vector<double> per_frame_ser_db(const ImageSeries& recon, const ImageSeries& reference) {
    check_shapes(recon, reference);
    std::vector<double> out(recon.size());
    for (size_t i = 0; i < recon.size(); i++) out[i] = ser_db({recon[i]}, {reference[i]});
    return out;
}

std::vector<double> per_frame_ser_magnitude_db(const ImageSeries& recon,
                                               const ImageSeries& reference) {
    check_shapes(recon, reference);
    std::vector<double> out(recon.size());
    for (size_t i = 0; i < recon.size(); i++)
        out[i] = ser_magnitude_db({recon[i]}, {reference[i]});
    return out;
}

LatentCorrelation latent_motion_correlation(const LatentSequence& latents,
                                            const PhantomTruth& truth) {
    const int n = latents.size();
    require(n == static_cast<int>(truth.cardiac_phase.size()),
            "latent count does not match phantom frames");
    const int d = latents.dim;

    // wrap-safe projections of each phase signal
    std::vector<double> sc(static_cast<size_t>(n)), cc(static_cast<size_t>(n)),
        sr(static_cast<size_t>(n)), cr(static_cast<size_t>(n));
    for (int i = 0; i < n; i++) {
        sc[static_cast<size_t>(i)] = std::sin(truth.cardiac_phase[static_cast<size_t>(i)]);
        cc[static_cast<size_t>(i)] = std::cos(truth.cardiac_phase[static_cast<size_t>(i)]);
        sr[static_cast<size_t>(i)] = std::sin(truth.resp_phase[static_cast<size_t>(i)]);
        cr[static_cast<size_t>(i)] = std::cos(truth.resp_phase[static_cast<size_t>(i)]);
    }

    LatentCorrelation out;
    out.corr.resize(static_cast<size_t>(d));
    std::vector<double> channel(static_cast<size_t>(n));
    for (int k = 0; k < d; k++) {
        for (int i = 0; i < n; i++) channel[static_cast<size_t>(i)] = latents.row(i)[k];
        const double card =
            std::max(std::abs(pearson(channel, sc)), std::abs(pearson(channel, cc)));
        const double resp =
            std::max(std::abs(pearson(channel, sr)), std::abs(pearson(channel, cr)));
        out.corr[static_cast<size_t>(k)] = {card, resp};
    }

    // injective assignment of the two motion modes to distinct channels;
    // d is tiny, so enumerate ordered pairs
    double best = -1.0;
    for (int a = 0; a < d; a++) {
        for (int b = 0; b < d; b++) {
            if (a == b) continue;
            const double score =
                out.corr[static_cast<size_t>(a)][0] + out.corr[static_cast<size_t>(b)][1];
            if (score > best) {
                best = score;
                out.cardiac_channel = a;
                out.resp_channel = b;
            }
        }
    }
    if (d == 1) {  // degenerate: a single channel gets the stronger mode
        out.cardiac_channel = out.corr[0][0] >= out.corr[0][1] ? 0 : -1;
        out.resp_channel = out.cardiac_channel == 0 ? -1 : 0;
    }
    if (out.cardiac_channel >= 0)
        out.cardiac_corr = out.corr[static_cast<size_t>(out.cardiac_channel)][0];
    if (out.resp_channel >= 0)
        out.resp_corr = out.corr[static_cast<size_t>(out.resp_channel)][1];
    return out;
}

std::vector<TimingEntry> compare_runs(const std::vector<std::string>& names,
                                      const std::vector<TrainHistory>& histories,
                                      double threshold_ser_db) {
    require(names.size() == histories.size(), "names/histories length mismatch");
    std::vector<TimingEntry> out;
    for (size_t r = 0; r < histories.size(); r++) {
        TimingEntry e;
        e.name = names[r];
        for (const auto& rec : histories[r].records) {
            e.total_seconds = std::max(e.total_seconds, rec.wall_seconds);
            if (rec.ser_mag_db) {
                e.final_ser_db = *rec.ser_mag_db;
                if (!e.seconds_to_threshold && *rec.ser_mag_db >= threshold_ser_db)
                    e.seconds_to_threshold = rec.wall_seconds;
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace dynrec
