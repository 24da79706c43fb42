#pragma once

#include <cstdint>
#include <vector>

#include "dynrec/common.hpp"

namespace dynrec {

/// Golden-angle increment between successive lines, pi / phi radians
/// (about 111.246 degrees).
inline constexpr double kGoldenAngle = 1.9416110387254665;  // pi * (sqrt(5) - 1) / 2

/// Cartesian pseudo-radial sampling mask for one frame. The mask is the
/// union of rasterized diameters through the grid center at the recorded
/// angles. Rasterization walks each line in half-pixel steps and rounds
/// both coordinates symmetrically about the center, ties toward the origin.
struct SamplingPattern {
    int frame_index = 0;
    GridShape grid;
    std::vector<double> line_angles;  // radians in [0, pi)
    std::vector<std::uint8_t> mask;   // row-major h*w
    bool full_grid = false;           // degenerate all-true pattern (no line set)

    /// Row-major flat indices of true mask entries, ascending.
    std::vector<std::int64_t> mask_indices() const;
    std::int64_t count_true() const;

    /// All-true pattern; used for dense limits and exact round-trip tests.
    static SamplingPattern full(GridShape grid, int frame_index);
};

/// Per-coil complex sensitivity maps, coil-major (c, h, w).
struct CoilSensitivities {
    int num_coils = 1;
    GridShape grid;
    std::vector<cplx> maps;

    const cplx* coil(int c) const { return maps.data() + static_cast<size_t>(c) * grid.pixels(); }
};

/// Uniform all-ones single-coil map.
CoilSensitivities unit_coils(GridShape grid);

/// Smooth complex Gaussian-bump sensitivities; sum-of-squares magnitude is
/// strictly positive everywhere.
CoilSensitivities synth_coil_maps(GridShape grid, int num_coils, std::uint64_t seed);

/// Undersampled frequency-domain data for one frame. sample_indices are flat
/// positions on the centered k-space grid; after temporal binning they may
/// contain one entry per originating frame, so duplicates are allowed and the
/// data term sums over all retained entries.
struct MeasurementFrame {
    SamplingPattern pattern;
    std::vector<std::int64_t> sample_indices;
    std::vector<std::vector<cplx>> samples;  // [coil][entry]
};

struct MeasurementSet {
    GridShape grid;
    int num_coils = 1;
    double noise_sigma = 0.0;
    CoilSensitivities coils;
    std::vector<MeasurementFrame> frames;

    std::int64_t total_samples() const;
    void validate() const;
};

/// Frame k uses lines at angles {((k*L + j) * golden) mod pi, j = 0..L-1}.
/// Deterministic given arguments; grid dimensions must be even and >= 8.
std::vector<SamplingPattern> make_golden_angle_patterns(GridShape grid, int num_frames,
                                                        int lines_per_frame,
                                                        std::uint64_t seed = 0);

/// Rasterize a single diameter; exposed for pattern reconstruction checks.
void rasterize_line(GridShape grid, double angle, std::vector<std::uint8_t>& mask);

/// Per-coil unitary DFT of (coil map * image) gathered at the mask positions.
std::vector<std::vector<cplx>> apply_forward(const ComplexImage& image,
                                             const SamplingPattern& pattern,
                                             const CoilSensitivities& coils);

/// Gather at an explicit index list (duplicates allowed).
std::vector<std::vector<cplx>> forward_at(const ComplexImage& image,
                                          const std::vector<std::int64_t>& indices,
                                          const CoilSensitivities& coils);

/// Exact adjoint of apply_forward: scatter, inverse unitary DFT, conjugate
/// coil weighting, sum over coils.
ComplexImage apply_adjoint(const std::vector<std::vector<cplx>>& samples,
                           const SamplingPattern& pattern, const CoilSensitivities& coils);

/// Adjoint against an explicit index list; duplicate indices accumulate.
ComplexImage adjoint_at(const std::vector<std::vector<cplx>>& samples,
                        const std::vector<std::int64_t>& indices, GridShape grid,
                        const CoilSensitivities& coils);

/// Merge consecutive groups of group_size frames: union mask, concatenated
/// samples (entries at shared positions are all retained). ceil(N/g) output
/// frames; total scalar measurement count is preserved.
MeasurementSet bin_measurements(const MeasurementSet& mset, int group_size);

/// Per-frame adjoint of the raw measurements; the no-prior baseline.
ImageSeries zero_filled_series(const MeasurementSet& mset);

void save_measurement_set(const MeasurementSet& mset, const std::string& path);
MeasurementSet load_measurement_set(const std::string& path);

}  // namespace dynrec
