#pragma once

#include <vector>

#include "dynrec/forward_model.hpp"
#include "dynrec/generator.hpp"

namespace dynrec {

/// Per-frame latent vectors, row-major (N x dim), with monotone frame times
/// (uniform by default).
struct LatentSequence {
    int dim = 0;
    std::vector<double> z;
    std::vector<double> frame_times;

    int size() const { return dim == 0 ? 0 : static_cast<int>(z.size()) / dim; }
    double* row(int i) { return z.data() + static_cast<std::size_t>(i) * dim; }
    const double* row(int i) const { return z.data() + static_cast<std::size_t>(i) * dim; }

    static LatentSequence uniform(int n, int dim);
    void validate() const;
};

struct RegWeights {
    double lambda1 = 0.001;  // network smoothness
    double lambda2 = 2.0;    // temporal smoothness

    void validate() const {
        require(lambda1 >= 0.0 && lambda2 >= 0.0, "regularization weights must be >= 0");
    }
};

struct CostBreakdown {
    double data = 0.0;      // squared residual norm over selected frames
    double network = 0.0;   // lambda1 * mean squared Jacobian norm
    double temporal = 0.0;  // lambda2 * sum of squared latent differences
    double total = 0.0;
};

/// Squared l2 distance between the forward model of G(z_i) and the stored
/// samples, summed over the selected frames and coils.
double data_fidelity(const GeneratorState& state, const LatentSequence& latents,
                     const MeasurementSet& mset, const std::vector<int>& frame_indices);

/// Fidelity of a single already-generated frame; also exposes the adjoint of
/// the cost with respect to the 2-channel generator output when grad_out2 is
/// non-null (overwrites, size 2*h*w).
double frame_fidelity(const ComplexImage& image, const MeasurementFrame& frame,
                      const CoilSensitivities& coils, double* grad_out2);

/// Sum over i of ||z_{i+1} - z_i||^2; first-order forward differences with
/// unit spacing, always over the full sequence.
double temporal_penalty(const LatentSequence& latents);

/// Adds scale * d(temporal_penalty)/dz to gz (row-major N x dim).
void temporal_penalty_grad(const LatentSequence& latents, double scale, double* gz);

/// data_fidelity + lambda1 * network_penalty(selected) + lambda2 *
/// temporal_penalty(full). The breakdown terms sum to the total.
CostBreakdown total_cost(const GeneratorState& state, const LatentSequence& latents,
                         const MeasurementSet& mset, const RegWeights& weights,
                         const std::vector<int>& frame_indices);

/// Gradient accumulation for a weighted combination of the three terms:
///   scale_data  * sum of frame fidelities over frame_indices
/// + scale_net   * network_penalty (batch mean over frame_indices)
/// + scale_temp  * temporal_penalty (full sequence)
/// Accumulates into gtheta (may be null) and gz (full N x dim, may be null)
/// and returns the unweighted term values.
struct TermValues {
    double data = 0.0;
    double network = 0.0;
    double temporal = 0.0;
};
TermValues cost_terms_grad(const GeneratorState& state, const LatentSequence& latents,
                           const MeasurementSet& mset, const std::vector<int>& frame_indices,
                           double scale_data, double scale_net, double scale_temp,
                           double* gtheta, double* gz);

std::vector<int> all_frames(const MeasurementSet& mset);

}  // namespace dynrec
