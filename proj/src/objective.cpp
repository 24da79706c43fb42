#include "dynrec/objective.hpp"

#include <cmath>

namespace dynrec {

LatentSequence LatentSequence::uniform(int n, int dim) {
    LatentSequence seq;
    seq.dim = dim;
    seq.z.assign(static_cast<size_t>(n) * dim, 0.0);
    seq.frame_times.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; i++) seq.frame_times[static_cast<size_t>(i)] = i;
    return seq;
}

void LatentSequence::validate() const {
    require(dim >= 1, "latent dim must be >= 1");
    require(!z.empty() && z.size() % static_cast<size_t>(dim) == 0, "latent matrix shape mismatch");
    require(frame_times.size() == z.size() / static_cast<size_t>(dim),
            "frame_times length mismatch");
    for (double v : z) require(std::isfinite(v), "latent entries must be finite");
    for (size_t i = 1; i < frame_times.size(); i++)
        require(frame_times[i] > frame_times[i - 1], "frame_times must be strictly increasing");
}

std::vector<int> all_frames(const MeasurementSet& mset) {
    std::vector<int> idx(mset.frames.size());
    for (size_t i = 0; i < idx.size(); i++) idx[i] = static_cast<int>(i);
    return idx;
}

double frame_fidelity(const ComplexImage& image, const MeasurementFrame& frame,
                      const CoilSensitivities& coils, double* grad_out2) {
    const auto predicted = forward_at(image, frame.sample_indices, coils);
    double cost = 0.0;
    std::vector<std::vector<cplx>> residual(predicted.size());
    for (size_t c = 0; c < predicted.size(); c++) {
        auto& r = residual[c];
        r.resize(predicted[c].size());
        const auto& b = frame.samples[c];
        for (size_t i = 0; i < r.size(); i++) {
            r[i] = predicted[c][i] - b[i];
            cost += std::norm(r[i]);
        }
    }
    if (grad_out2) {
        // d/dx ||Ax - b||^2 = 2 A^H r; real part drives channel 0, imaginary channel 1
        const ComplexImage g =
            adjoint_at(residual, frame.sample_indices, image.shape, coils);
        const std::int64_t n = image.shape.pixels();
        for (std::int64_t i = 0; i < n; i++) {
            grad_out2[i] = 2.0 * g.data[i].real();
            grad_out2[n + i] = 2.0 * g.data[i].imag();
        }
    }
    return cost;
}

double data_fidelity(const GeneratorState& state, const LatentSequence& latents,
                     const MeasurementSet& mset, const std::vector<int>& frame_indices) {
    const int n = static_cast<int>(mset.frames.size());
    require(latents.size() == n, "latent count does not match measurement frames");
    double cost = 0.0;
    for (int idx : frame_indices) {
        require(idx >= 0 && idx < n, "frame index out of range");
        const ComplexImage img = generate_one(state, latents.row(idx));
        cost += frame_fidelity(img, mset.frames[static_cast<size_t>(idx)], mset.coils, nullptr);
    }
    return cost;
}

double temporal_penalty(const LatentSequence& latents) {
    const int n = latents.size();
    const int d = latents.dim;
    double sum = 0.0;
    for (int i = 0; i + 1 < n; i++) {
        const double* a = latents.row(i);
        const double* b = latents.row(i + 1);
        for (int k = 0; k < d; k++) {
            const double diff = b[k] - a[k];
            sum += diff * diff;
        }
    }
    return sum;
}

void temporal_penalty_grad(const LatentSequence& latents, double scale, double* gz) {
    const int n = latents.size();
    const int d = latents.dim;
    for (int i = 0; i + 1 < n; i++) {
        const double* a = latents.row(i);
        const double* b = latents.row(i + 1);
        for (int k = 0; k < d; k++) {
            const double diff = 2.0 * scale * (b[k] - a[k]);
            gz[static_cast<std::size_t>(i) * d + k] -= diff;
            gz[static_cast<std::size_t>(i + 1) * d + k] += diff;
        }
    }
}

CostBreakdown total_cost(const GeneratorState& state, const LatentSequence& latents,
                         const MeasurementSet& mset, const RegWeights& weights,
                         const std::vector<int>& frame_indices) {
    weights.validate();
    CostBreakdown out;
    out.data = data_fidelity(state, latents, mset, frame_indices);
    if (weights.lambda1 > 0.0) {
        std::vector<double> zsel;
        zsel.reserve(frame_indices.size() * static_cast<size_t>(latents.dim));
        for (int idx : frame_indices)
            zsel.insert(zsel.end(), latents.row(idx), latents.row(idx) + latents.dim);
        out.network = weights.lambda1 * network_penalty(state, zsel,
                                                        static_cast<int>(frame_indices.size()));
    }
    if (weights.lambda2 > 0.0) out.temporal = weights.lambda2 * temporal_penalty(latents);
    out.total = out.data + out.network + out.temporal;
    return out;
}

TermValues cost_terms_grad(const GeneratorState& state, const LatentSequence& latents,
                           const MeasurementSet& mset, const std::vector<int>& frame_indices,
                           double scale_data, double scale_net, double scale_temp,
                           double* gtheta, double* gz) {
    const int n = static_cast<int>(mset.frames.size());
    const int d = latents.dim;
    require(latents.size() == n, "latent count does not match measurement frames");
    TermValues values;

    const bool want_tangents = scale_net != 0.0;
    std::vector<double> dirs;
    if (want_tangents) {
        dirs.assign(static_cast<size_t>(d) * d, 0.0);
        for (int k = 0; k < d; k++) dirs[static_cast<size_t>(k) * d + k] = 1.0;
    }

    ForwardCache cache;
    std::vector<double> gy;
    const std::int64_t npix = mset.grid.pixels();
    for (int idx : frame_indices) {
        require(idx >= 0 && idx < n, "frame index out of range");
        const double* z = latents.row(idx);
        generator_forward(state, z, cache, want_tangents ? d : 0,
                          want_tangents ? dirs.data() : nullptr);

        ComplexImage img(mset.grid);
        for (std::int64_t i = 0; i < npix; i++)
            img.data[i] = cplx(cache.out2[i], cache.out2[npix + i]);

        gy.assign(static_cast<size_t>(2) * npix, 0.0);
        values.data += frame_fidelity(img, mset.frames[static_cast<size_t>(idx)], mset.coils,
                                      gy.data());
        if (scale_data != 0.0)
            for (double& v : gy) v *= scale_data;
        else
            std::fill(gy.begin(), gy.end(), 0.0);

        std::vector<std::vector<double>> gty;
        if (want_tangents) {
            double frame_sq = 0.0;
            gty.resize(static_cast<size_t>(d));
            const double batch = static_cast<double>(frame_indices.size());
            const double c = 2.0 * scale_net / batch;
            for (int k = 0; k < d; k++) {
                const auto& t = cache.t_out2[static_cast<size_t>(k)];
                for (double v : t) frame_sq += v * v;
                gty[static_cast<size_t>(k)] = t;
                for (double& v : gty[static_cast<size_t>(k)]) v *= c;
            }
            values.network += frame_sq;
        }

        generator_reverse(state, z, cache, gy.data(), gty, want_tangents ? dirs.data() : nullptr,
                          gtheta, gz ? gz + static_cast<std::size_t>(idx) * d : nullptr);
    }
    if (want_tangents && !frame_indices.empty())
        values.network /= static_cast<double>(frame_indices.size());

    values.temporal = temporal_penalty(latents);
    if (scale_temp != 0.0 && gz) temporal_penalty_grad(latents, scale_temp, gz);
    return values;
}

}  // namespace dynrec
