#include <doctest.h>

#include <cmath>

#include "dynrec/evaluation.hpp"
#include "dynrec/rng.hpp"

using namespace dynrec;

namespace {

ImageSeries random_series(int n, GridShape g, Rng& rng) {
    ImageSeries out;
    for (int i = 0; i < n; i++) {
        ComplexImage img(g);
        for (auto& v : img.data) v = cplx(rng.normal(), rng.normal());
        out.push_back(std::move(img));
    }
    return out;
}

PhantomTruth phases_only(int n, double cardiac_period, double resp_period) {
    PhantomTruth t;
    const double tp = 6.283185307179586;
    for (int i = 0; i < n; i++) {
        t.cardiac_phase.push_back(std::fmod(tp * i / cardiac_period, tp));
        t.resp_phase.push_back(std::fmod(tp * i / resp_period, tp));
    }
    return t;
}

}  // namespace

TEST_CASE("ser formula") {
    Rng rng(4);
    const ImageSeries ref = random_series(3, {16, 16}, rng);

    SUBCASE("identical reconstruction hits the cap") {
        CHECK(ser_db(ref, ref) == kSerCapDb);
        CHECK(ser_magnitude_db(ref, ref) == kSerCapDb);
    }

    SUBCASE("zero reconstruction gives 0 dB") {
        ImageSeries zeros;
        for (const auto& f : ref) zeros.push_back(ComplexImage(f.shape));
        CHECK(ser_db(zeros, ref) == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("an error of one tenth the signal norm gives 20 dB") {
        ImageSeries recon = ref;
        double ref_sq = 0.0;
        for (const auto& f : ref)
            for (const auto& v : f.data) ref_sq += std::norm(v);
        // e = ref * 0.1 has norm ||ref||/10
        for (size_t i = 0; i < recon.size(); i++)
            for (size_t p = 0; p < recon[i].data.size(); p++)
                recon[i].data[p] += 0.1 * ref[i].data[p];
        CHECK(ser_db(recon, ref) == doctest::Approx(20.0).epsilon(1e-10));
    }

    SUBCASE("complex SER is invariant to a shared global phase") {
        Rng r2(5);
        ImageSeries recon = random_series(3, {16, 16}, r2);
        const double base = ser_db(recon, ref);
        const cplx rot = std::polar(1.0, 1.234);
        ImageSeries recon_rot = recon, ref_rot = ref;
        for (size_t i = 0; i < recon.size(); i++) {
            for (auto& v : recon_rot[i].data) v *= rot;
            for (auto& v : ref_rot[i].data) v *= rot;
        }
        CHECK(ser_db(recon_rot, ref_rot) == doctest::Approx(base).epsilon(1e-12));
    }

    SUBCASE("zero reference rejected") {
        ImageSeries zeros;
        for (const auto& f : ref) zeros.push_back(ComplexImage(f.shape));
        CHECK_THROWS_AS(ser_db(ref, zeros), ValidationError);
    }

    SUBCASE("per-frame variant matches the joint formula per frame") {
        Rng r2(6);
        const ImageSeries recon = random_series(3, {16, 16}, r2);
        const auto per = per_frame_ser_db(recon, ref);
        REQUIRE(per.size() == 3);
        for (size_t i = 0; i < 3; i++)
            CHECK(per[i] == doctest::Approx(ser_db({recon[i]}, {ref[i]})).epsilon(1e-12));
    }
}

TEST_CASE("latent-motion correlation") {
    const int n = 150;
    const PhantomTruth truth = phases_only(n, 9.7, 41.3);

    SUBCASE("oracle latents correlate perfectly on the diagonal") {
        LatentSequence latents = LatentSequence::uniform(n, 2);
        for (int i = 0; i < n; i++) {
            latents.row(i)[0] = std::cos(truth.cardiac_phase[static_cast<size_t>(i)]);
            latents.row(i)[1] = std::cos(truth.resp_phase[static_cast<size_t>(i)]);
        }
        const LatentCorrelation lc = latent_motion_correlation(latents, truth);
        CHECK(lc.cardiac_channel == 0);
        CHECK(lc.resp_channel == 1);
        CHECK(lc.cardiac_corr == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(lc.resp_corr == doctest::Approx(1.0).epsilon(1e-9));
    }

    SUBCASE("channel swap moves the assignment") {
        LatentSequence latents = LatentSequence::uniform(n, 2);
        for (int i = 0; i < n; i++) {
            latents.row(i)[0] = std::cos(truth.resp_phase[static_cast<size_t>(i)]);
            latents.row(i)[1] = std::cos(truth.cardiac_phase[static_cast<size_t>(i)]);
        }
        const LatentCorrelation lc = latent_motion_correlation(latents, truth);
        CHECK(lc.cardiac_channel == 1);
        CHECK(lc.resp_channel == 0);
    }

    SUBCASE("affine rescaling of a channel does not change correlations") {
        LatentSequence latents = LatentSequence::uniform(n, 2);
        Rng rng(8);
        for (auto& v : latents.z) v = rng.normal();
        const LatentCorrelation base = latent_motion_correlation(latents, truth);
        for (int i = 0; i < n; i++) latents.row(i)[0] = -3.5 * latents.row(i)[0] + 11.0;
        const LatentCorrelation scaled = latent_motion_correlation(latents, truth);
        for (int k = 0; k < 2; k++) {
            CHECK(scaled.corr[static_cast<size_t>(k)][0] ==
                  doctest::Approx(base.corr[static_cast<size_t>(k)][0]).epsilon(1e-10));
            CHECK(scaled.corr[static_cast<size_t>(k)][1] ==
                  doctest::Approx(base.corr[static_cast<size_t>(k)][1]).epsilon(1e-10));
        }
    }

    SUBCASE("constant channel yields zero correlation") {
        LatentSequence latents = LatentSequence::uniform(n, 2);
        for (int i = 0; i < n; i++) {
            latents.row(i)[0] = 2.5;
            latents.row(i)[1] = std::cos(truth.resp_phase[static_cast<size_t>(i)]);
        }
        const LatentCorrelation lc = latent_motion_correlation(latents, truth);
        CHECK(lc.corr[0][0] == 0.0);
        CHECK(lc.corr[0][1] == 0.0);
    }

    SUBCASE("white-noise latents stay below 0.3 with frequency >= 0.99") {
        // Monte-Carlo calibration of the null distribution, fixed seed
        Rng rng(20260809);
        int below = 0;
        const int draws = 1000;
        for (int t = 0; t < draws; t++) {
            LatentSequence latents = LatentSequence::uniform(n, 2);
            for (auto& v : latents.z) v = rng.normal();
            const LatentCorrelation lc = latent_motion_correlation(latents, truth);
            double mx = 0.0;
            for (const auto& row : lc.corr) mx = std::max({mx, row[0], row[1]});
            if (mx < 0.3) below++;
        }
        CHECK(below >= static_cast<int>(0.99 * draws));
    }
}

TEST_CASE("compare_runs timing lookup") {
    TrainHistory crossing;
    for (int i = 0; i <= 5; i++) {
        HistoryRecord r;
        r.epoch = i;
        r.wall_seconds = 10.0 * i;
        r.ser_mag_db = 3.0 * i;  // crosses 10 dB at i = 4 (12 dB)
        crossing.records.push_back(r);
    }
    TrainHistory flat;
    for (int i = 0; i <= 5; i++) {
        HistoryRecord r;
        r.epoch = i;
        r.wall_seconds = 10.0 * i;
        r.ser_mag_db = 1.0;
        flat.records.push_back(r);
    }

    const auto table = compare_runs({"crossing", "flat"}, {crossing, flat}, 10.0);
    REQUIRE(table.size() == 2);
    CHECK(table[0].seconds_to_threshold.has_value());
    CHECK(*table[0].seconds_to_threshold == doctest::Approx(40.0));
    CHECK_FALSE(table[1].seconds_to_threshold.has_value());  // never reached
    CHECK(table[0].final_ser_db == doctest::Approx(15.0));
    CHECK(table[1].total_seconds == doctest::Approx(50.0));
}
