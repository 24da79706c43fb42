#pragma once

#include <cstdint>
#include <string>

#include "dynrec/forward_model.hpp"

namespace dynrec {

/// Synthetic dynamic scene with two independent periodic motions: a
/// "ventricle" whose radius oscillates at the cardiac period inside a torso
/// that translates vertically at the respiratory period.
struct PhantomSpec {
    GridShape grid{64, 64};
    int num_frames = 150;
    double cardiac_period = 9.7;   // frames per cycle
    double resp_period = 41.3;     // frames per cycle
    double cardiac_amplitude = 0.05;  // fraction of grid height
    double resp_amplitude = 0.05;     // fraction of grid height
    double noise_sigma = 0.0;         // default acquisition noise level
    std::uint64_t seed = 1;

    void validate() const;
};

struct PhantomTruth {
    PhantomSpec spec;
    ImageSeries images;                 // complex, magnitude in [0, 1]
    std::vector<double> cardiac_phase;  // radians in [0, 2pi)
    std::vector<double> resp_phase;
};

/// Render one frame at explicit motion phases; make_phantom composes this
/// per frame, and tests use it to confirm the stored phases reproduce the
/// stored images.
ComplexImage render_phantom_frame(const PhantomSpec& spec, double cardiac_phase,
                                  double resp_phase);

PhantomTruth make_phantom(const PhantomSpec& spec);

/// Golden-angle sampling of the truth: per-frame masks, coil weighting, and
/// complex white Gaussian noise with E|eta|^2 = noise_sigma^2 per sample.
MeasurementSet simulate_acquisition(const PhantomTruth& truth, int lines_per_frame,
                                    int num_coils, double noise_sigma, std::uint64_t seed);

void save_phantom(const PhantomTruth& truth, const std::string& path);
PhantomTruth load_phantom(const std::string& path);

}  // namespace dynrec
