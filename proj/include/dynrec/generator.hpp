#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynrec/common.hpp"

namespace dynrec {

enum class Activation { SmoothSaturating = 0, PiecewiseLinear = 1 };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Decoder architecture: dense map from the latent vector to a 4x4 seed grid
/// with base_channels channels, then log2(h/4) stages of (nearest-neighbor 2x
/// upsample -> 3x3 conv -> activation) with channels halving per stage, and a
/// final linear 3x3 conv to 2 channels read as (real, imag).
struct GeneratorConfig {
    int latent_dim = 2;
    GridShape output_shape{64, 64};
    int base_channels = 128;
    Activation activation = Activation::SmoothSaturating;
    std::uint64_t seed = 0;

    int upsample_stages() const;
    void validate() const;
};

/// Offsets of each layer's weights inside the flat parameter vector.
struct GeneratorLayout {
    int d = 0;
    int stages = 0;
    std::vector<int> ch;        // ch[0] = base_channels, halving, floor 2
    std::size_t dense_w = 0, dense_b = 0;
    struct ConvOffsets {
        std::size_t k = 0, b = 0;
    };
    std::vector<ConvOffsets> conv;  // one per upsample stage
    ConvOffsets out;                // final 2-channel conv
    std::size_t total_params = 0;

    int seed_units() const { return 16 * ch[0]; }  // 4*4*base_channels
};

GeneratorLayout make_layout(const GeneratorConfig& config);

struct GeneratorState {
    GeneratorConfig config;
    std::vector<double> params;
};

/// Random initialization: every parameter of a layer is drawn i.i.d. from a
/// zero-mean normal with standard deviation 1/sqrt(fan_in). Deterministic
/// given config.seed.
GeneratorState init_generator(const GeneratorConfig& config);

/// Intermediate activations of one forward pass, kept for the reverse pass.
/// When ntan > 0 the same structure also carries that many directional
/// tangents propagated alongside the values.
struct ForwardCache {
    std::vector<double> a0;                            // dense output
    std::vector<std::vector<double>> up, pre, act;     // per stage
    std::vector<double> out2;                          // (2, h, w)
    int ntan = 0;
    std::vector<std::vector<double>> t_a0;                       // [k]
    std::vector<std::vector<std::vector<double>>> t_up, t_pre, t_act;  // [stage][k]
    std::vector<std::vector<double>> t_out2;                     // [k]
};

/// Forward pass from one latent vector; optionally propagates ntangents
/// directional tangents given row-major (ntangents x d) directions.
void generator_forward(const GeneratorState& state, const double* z, ForwardCache& cache,
                       int ntangents = 0, const double* tangent_dirs = nullptr);

/// Reverse pass through the (augmented) forward computation. gy is the
/// adjoint of the 2-channel output (may be null), gty the adjoints of the
/// output tangents (may be empty). Accumulates into gtheta (total_params)
/// and gz (latent_dim); either may be null. tangent_dirs must match the
/// forward call when gty is non-empty.
void generator_reverse(const GeneratorState& state, const double* z, const ForwardCache& cache,
                       const double* gy, const std::vector<std::vector<double>>& gty,
                       const double* tangent_dirs, double* gtheta, double* gz);

/// x = G(z). Rejects non-finite latents.
ComplexImage generate_one(const GeneratorState& state, const double* z);

/// Batched forward: z_batch is row-major (batch x latent_dim).
ImageSeries generate(const GeneratorState& state, const std::vector<double>& z_batch, int batch);

/// Analytic Jacobian-vector product dG/dz * v as a (2, h, w) tangent.
std::vector<double> generate_jvp(const GeneratorState& state, const double* z, const double* v);

/// Mean squared Frobenius norm of the latent-to-image Jacobian over the
/// batch, computed exactly with latent_dim JVPs per latent; both output
/// channels contribute.
double network_penalty(const GeneratorState& state, const std::vector<double>& z_batch, int batch);

/// Adds scale * d(network_penalty)/d(theta, z) to the accumulators and
/// returns the penalty value. gz_batch has one latent_dim row per batch
/// entry; gtheta/gz_batch may be null.
double network_penalty_grad(const GeneratorState& state, const std::vector<double>& z_batch,
                            int batch, double scale, double* gtheta, double* gz_batch);

void save_generator(const GeneratorState& state, const std::string& path);
GeneratorState load_generator(const std::string& path);

}  // namespace dynrec
