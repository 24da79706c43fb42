#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dynrec/archive.hpp"
#include "dynrec/phantom.hpp"

using namespace dynrec;

namespace {

double max_frame_diff(const ComplexImage& a, const ComplexImage& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); i++) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

PhantomSpec default_spec() {
    PhantomSpec spec;
    spec.grid = {64, 64};
    spec.num_frames = 150;
    spec.cardiac_period = 9.7;
    spec.resp_period = 41.3;
    spec.cardiac_amplitude = 0.05;
    spec.resp_amplitude = 0.05;
    spec.seed = 2;
    return spec;
}

}  // namespace

TEST_CASE("spec validation") {
    PhantomSpec s = default_spec();
    CHECK_NOTHROW(s.validate());
    s.cardiac_period = 1.9;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = default_spec();
    s.resp_period = 19.4;  // exactly 2x cardiac
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = default_spec();
    s.cardiac_amplitude = 0.31;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = default_spec();
    s.cardiac_amplitude = 0.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("vanishing amplitudes freeze the scene") {
    PhantomSpec s = default_spec();
    s.num_frames = 12;
    s.cardiac_amplitude = 1e-13;
    s.resp_amplitude = 1e-13;
    const PhantomTruth t = make_phantom(s);
    for (int i = 1; i < s.num_frames; i++)
        CHECK(max_frame_diff(t.images[static_cast<size_t>(i)], t.images[0]) < 1e-10);
}

TEST_CASE("construction is periodic in both phases") {
    PhantomSpec s = default_spec();
    s.cardiac_period = 10.0;
    s.resp_period = 25.0;  // ratio 2.5: frame 50 realigns both phases
    s.num_frames = 51;
    const PhantomTruth t = make_phantom(s);
    CHECK(max_frame_diff(t.images[50], t.images[0]) < 1e-8);
}

TEST_CASE("magnitude bounded and phases self-consistent") {
    PhantomSpec s = default_spec();
    s.num_frames = 20;
    const PhantomTruth t = make_phantom(s);
    for (const auto& img : t.images)
        for (const auto& v : img.data) {
            CHECK(std::isfinite(v.real()));
            CHECK(std::isfinite(v.imag()));
            CHECK(std::abs(v) <= 1.0);
        }
    // phases advance by 2pi/period per frame
    const double tp = 6.283185307179586;
    for (int i = 0; i < s.num_frames; i++) {
        CHECK(t.cardiac_phase[static_cast<size_t>(i)] ==
              doctest::Approx(std::fmod(tp * i / s.cardiac_period, tp)).epsilon(1e-12));
        CHECK(t.resp_phase[static_cast<size_t>(i)] ==
              doctest::Approx(std::fmod(tp * i / s.resp_period, tp)).epsilon(1e-12));
    }
    // regenerating from the stored phases reproduces the stored frames
    for (int i : {0, 7, 19}) {
        const ComplexImage re = render_phantom_frame(s, t.cardiac_phase[static_cast<size_t>(i)],
                                                     t.resp_phase[static_cast<size_t>(i)]);
        CHECK(max_frame_diff(re, t.images[static_cast<size_t>(i)]) < 1e-12);
    }
}

TEST_CASE("ventricle area oscillates at the cardiac period") {
    const PhantomSpec s = default_spec();
    const PhantomTruth t = make_phantom(s);
    const int n = s.num_frames;

    // area above a threshold isolating the ventricle intensity band
    std::vector<double> area(static_cast<size_t>(n));
    for (int i = 0; i < n; i++) {
        int count = 0;
        for (const auto& v : t.images[static_cast<size_t>(i)].data)
            if (std::abs(v) > 0.75) count++;
        area[static_cast<size_t>(i)] = count;
    }
    double mean = 0.0;
    for (double a : area) mean += a;
    mean /= n;

    // dominant frequency via a direct DFT of the de-meaned area signal,
    // quadratic interpolation around the peak bin
    const double two_pi = 6.283185307179586;
    std::vector<double> power(static_cast<size_t>(n / 2), 0.0);
    for (int k = 1; k < n / 2; k++) {
        cplx acc(0.0, 0.0);
        for (int i = 0; i < n; i++)
            acc += (area[static_cast<size_t>(i)] - mean) *
                   std::polar(1.0, -two_pi * k * i / n);
        power[static_cast<size_t>(k)] = std::norm(acc);
    }
    int kpeak = 1;
    for (int k = 2; k < n / 2; k++)
        if (power[static_cast<size_t>(k)] > power[static_cast<size_t>(kpeak)]) kpeak = k;
    double refined = kpeak;
    if (kpeak + 1 < n / 2 && kpeak > 1) {
        const double pl = power[static_cast<size_t>(kpeak - 1)];
        const double pc = power[static_cast<size_t>(kpeak)];
        const double pr = power[static_cast<size_t>(kpeak + 1)];
        const double denom = pl - 2 * pc + pr;
        if (std::abs(denom) > 1e-12) refined += 0.5 * (pl - pr) / denom;
    }
    const double period = static_cast<double>(n) / refined;
    CHECK(std::abs(period - s.cardiac_period) <= 0.5);
}

TEST_CASE("acquisition simulation") {
    PhantomSpec s = default_spec();
    s.grid = {32, 32};
    s.num_frames = 8;
    const PhantomTruth t = make_phantom(s);

    SUBCASE("noise-free full sampling recovers every frame") {
        MeasurementSet mset;
        mset.grid = s.grid;
        mset.num_coils = 1;
        mset.coils = unit_coils(s.grid);
        for (int i = 0; i < s.num_frames; i++) {
            MeasurementFrame f;
            f.pattern = SamplingPattern::full(s.grid, i);
            f.sample_indices = f.pattern.mask_indices();
            f.samples = forward_at(t.images[static_cast<size_t>(i)], f.sample_indices, mset.coils);
            mset.frames.push_back(std::move(f));
        }
        const ImageSeries back = zero_filled_series(mset);
        for (int i = 0; i < s.num_frames; i++)
            CHECK(max_frame_diff(back[static_cast<size_t>(i)],
                                 t.images[static_cast<size_t>(i)]) < 1e-10);
    }

    SUBCASE("sampling fraction matches the pattern count") {
        const MeasurementSet mset = simulate_acquisition(t, 6, 1, 0.0, 3);
        const auto pats = make_golden_angle_patterns(s.grid, s.num_frames, 6, 3);
        for (int i = 0; i < s.num_frames; i++) {
            CHECK(static_cast<std::int64_t>(
                      mset.frames[static_cast<size_t>(i)].sample_indices.size()) ==
                  pats[static_cast<size_t>(i)].count_true());
        }
    }

    SUBCASE("noise-free acquisition is exactly consistent with the truth") {
        const MeasurementSet mset = simulate_acquisition(t, 5, 1, 0.0, 3);
        double resid = 0.0;
        for (int i = 0; i < s.num_frames; i++) {
            const auto pred = forward_at(t.images[static_cast<size_t>(i)],
                                         mset.frames[static_cast<size_t>(i)].sample_indices,
                                         mset.coils);
            for (size_t k = 0; k < pred[0].size(); k++)
                resid += std::norm(pred[0][k] -
                                   mset.frames[static_cast<size_t>(i)].samples[0][k]);
        }
        CHECK(resid == 0.0);
    }

    SUBCASE("different seeds change only the noise") {
        const MeasurementSet a = simulate_acquisition(t, 4, 1, 0.05, 10);
        const MeasurementSet b = simulate_acquisition(t, 4, 1, 0.05, 11);
        for (int i = 0; i < s.num_frames; i++) {
            CHECK(a.frames[static_cast<size_t>(i)].pattern.mask ==
                  b.frames[static_cast<size_t>(i)].pattern.mask);
            CHECK(a.frames[static_cast<size_t>(i)].samples !=
                  b.frames[static_cast<size_t>(i)].samples);
        }
    }

    SUBCASE("multi-coil maps have strictly positive sum-of-squares") {
        const CoilSensitivities coils = synth_coil_maps(s.grid, 4, 7);
        for (std::int64_t p = 0; p < s.grid.pixels(); p++) {
            double sos = 0.0;
            for (int c = 0; c < 4; c++) sos += std::norm(coils.coil(c)[p]);
            CHECK(sos > 0.0);
        }
    }
}

TEST_CASE("phantom archive round-trips bit-exactly") {
    PhantomSpec s = default_spec();
    s.grid = {16, 16};
    s.num_frames = 5;
    const PhantomTruth t = make_phantom(s);
    const std::string path =
        (std::filesystem::temp_directory_path() / "dynrec_phantom_test.bin").string();
    save_phantom(t, path);
    const PhantomTruth loaded = load_phantom(path);
    CHECK(loaded.spec.num_frames == 5);
    CHECK(loaded.cardiac_phase == t.cardiac_phase);
    CHECK(loaded.resp_phase == t.resp_phase);
    for (int i = 0; i < 5; i++)
        CHECK(loaded.images[static_cast<size_t>(i)].data == t.images[static_cast<size_t>(i)].data);

    const std::string path2 =
        (std::filesystem::temp_directory_path() / "dynrec_phantom_test2.bin").string();
    save_phantom(loaded, path2);
    CHECK(sha256_file(path) == sha256_file(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
}
