#include "dynrec/generator.hpp"

#include <cmath>
#include <cstring>

#include "dynrec/archive.hpp"
#include "dynrec/kernels.hpp"
#include "dynrec/rng.hpp"

namespace dynrec {

std::string activation_name(Activation a) {
    return a == Activation::SmoothSaturating ? "smooth-saturating" : "piecewise-linear";
}

Activation activation_from_name(const std::string& name) {
    if (name == "smooth-saturating") return Activation::SmoothSaturating;
    if (name == "piecewise-linear") return Activation::PiecewiseLinear;
    throw ValidationError("unknown activation: " + name);
}

int GeneratorConfig::upsample_stages() const {
    int s = 0;
    int size = 4;
    while (size < output_shape.h) {
        size *= 2;
        s++;
    }
    return s;
}

void GeneratorConfig::validate() const {
    require(latent_dim >= 1, "latent_dim must be >= 1");
    require(output_shape.h == output_shape.w, "generator output must be square");
    const int h = output_shape.h;
    require(h >= 16 && (h & (h - 1)) == 0, "output size must be a power of two >= 16");
    require(base_channels >= 8, "base_channels must be >= 8");
}

GeneratorLayout make_layout(const GeneratorConfig& config) {
    config.validate();
    GeneratorLayout lay;
    lay.d = config.latent_dim;
    lay.stages = config.upsample_stages();
    lay.ch.resize(static_cast<size_t>(lay.stages) + 1);
    lay.ch[0] = config.base_channels;
    for (int s = 1; s <= lay.stages; s++) lay.ch[s] = std::max(lay.ch[s - 1] / 2, 2);

    std::size_t off = 0;
    lay.dense_w = off;
    off += static_cast<std::size_t>(lay.seed_units()) * lay.d;
    lay.dense_b = off;
    off += static_cast<std::size_t>(lay.seed_units());
    lay.conv.resize(static_cast<size_t>(lay.stages));
    for (int s = 0; s < lay.stages; s++) {
        lay.conv[s].k = off;
        off += static_cast<std::size_t>(lay.ch[s + 1]) * lay.ch[s] * 9;
        lay.conv[s].b = off;
        off += static_cast<std::size_t>(lay.ch[s + 1]);
    }
    lay.out.k = off;
    off += static_cast<std::size_t>(2) * lay.ch[lay.stages] * 9;
    lay.out.b = off;
    off += 2;
    lay.total_params = off;
    return lay;
}

GeneratorState init_generator(const GeneratorConfig& config) {
    const GeneratorLayout lay = make_layout(config);
    GeneratorState st;
    st.config = config;
    st.params.assign(lay.total_params, 0.0);
    Rng rng(config.seed);

    auto fill = [&](std::size_t off, std::size_t count, int fan_in) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < count; i++) st.params[off + i] = scale * rng.normal();
    };
    fill(lay.dense_w, static_cast<std::size_t>(lay.seed_units()) * lay.d, lay.d);
    fill(lay.dense_b, static_cast<std::size_t>(lay.seed_units()), lay.d);
    for (int s = 0; s < lay.stages; s++) {
        const int fan = lay.ch[s] * 9;
        fill(lay.conv[s].k, static_cast<std::size_t>(lay.ch[s + 1]) * lay.ch[s] * 9, fan);
        fill(lay.conv[s].b, static_cast<std::size_t>(lay.ch[s + 1]), fan);
    }
    fill(lay.out.k, static_cast<std::size_t>(2) * lay.ch[lay.stages] * 9, lay.ch[lay.stages] * 9);
    fill(lay.out.b, 2, lay.ch[lay.stages] * 9);
    return st;
}

namespace {

inline int level_size(int s) { return 4 << s; }  // spatial size entering stage s+1

void check_finite_latent(const double* z, int d) {
    for (int i = 0; i < d; i++)
        if (!std::isfinite(z[i])) throw ValidationError("non-finite latent vector");
}

}  // namespace

void generator_forward(const GeneratorState& state, const double* z, ForwardCache& cache,
                       int ntangents, const double* tangent_dirs) {
    const GeneratorLayout lay = make_layout(state.config);
    const int kind = static_cast<int>(state.config.activation);
    const double* p = state.params.data();
    check_finite_latent(z, lay.d);

    cache.ntan = ntangents;
    cache.a0.resize(static_cast<size_t>(lay.seed_units()));
    kernels::dense_forward(p + lay.dense_w, p + lay.dense_b, lay.seed_units(), lay.d, z,
                           cache.a0.data());

    cache.up.assign(static_cast<size_t>(lay.stages), {});
    cache.pre.assign(static_cast<size_t>(lay.stages), {});
    cache.act.assign(static_cast<size_t>(lay.stages), {});
    const double* cur = cache.a0.data();
    for (int s = 0; s < lay.stages; s++) {
        const int hs = level_size(s);          // input spatial size
        const int ho = 2 * hs;                 // after upsample
        auto& up = cache.up[static_cast<size_t>(s)];
        auto& pre = cache.pre[static_cast<size_t>(s)];
        auto& act = cache.act[static_cast<size_t>(s)];
        up.resize(static_cast<size_t>(lay.ch[s]) * ho * ho);
        pre.resize(static_cast<size_t>(lay.ch[s + 1]) * ho * ho);
        act.resize(pre.size());
        kernels::upsample2x(cur, lay.ch[s], hs, hs, up.data());
        kernels::conv3x3_forward(up.data(), lay.ch[s], ho, ho, p + lay.conv[s].k,
                                 p + lay.conv[s].b, lay.ch[s + 1], pre.data());
        kernels::act_forward(kind, pre.data(), static_cast<std::int64_t>(pre.size()), act.data());
        cur = act.data();
    }
    const int hw = state.config.output_shape.h;
    cache.out2.resize(static_cast<size_t>(2) * hw * hw);
    kernels::conv3x3_forward(cur, lay.ch[lay.stages], hw, hw, p + lay.out.k, p + lay.out.b, 2,
                             cache.out2.data());

    if (ntangents <= 0) {
        cache.t_a0.clear();
        cache.t_up.clear();
        cache.t_pre.clear();
        cache.t_act.clear();
        cache.t_out2.clear();
        return;
    }

    // tangent sweep: same linear maps without biases, chain rule on activations
    cache.t_a0.assign(static_cast<size_t>(ntangents), {});
    cache.t_up.assign(static_cast<size_t>(lay.stages), {});
    cache.t_pre.assign(static_cast<size_t>(lay.stages), {});
    cache.t_act.assign(static_cast<size_t>(lay.stages), {});
    for (int s = 0; s < lay.stages; s++) {
        cache.t_up[static_cast<size_t>(s)].assign(static_cast<size_t>(ntangents), {});
        cache.t_pre[static_cast<size_t>(s)].assign(static_cast<size_t>(ntangents), {});
        cache.t_act[static_cast<size_t>(s)].assign(static_cast<size_t>(ntangents), {});
    }
    cache.t_out2.assign(static_cast<size_t>(ntangents), {});

    std::vector<std::vector<double>> d1(static_cast<size_t>(lay.stages));
    for (int s = 0; s < lay.stages; s++) {
        d1[static_cast<size_t>(s)].resize(cache.pre[static_cast<size_t>(s)].size());
        kernels::act_d1(kind, cache.pre[static_cast<size_t>(s)].data(),
                        static_cast<std::int64_t>(cache.pre[static_cast<size_t>(s)].size()),
                        d1[static_cast<size_t>(s)].data());
    }

    for (int k = 0; k < ntangents; k++) {
        auto& ta0 = cache.t_a0[static_cast<size_t>(k)];
        ta0.resize(static_cast<size_t>(lay.seed_units()));
        kernels::dense_forward(p + lay.dense_w, nullptr, lay.seed_units(), lay.d,
                               tangent_dirs + static_cast<std::size_t>(k) * lay.d, ta0.data());
        const double* tcur = ta0.data();
        for (int s = 0; s < lay.stages; s++) {
            const int hs = level_size(s);
            const int ho = 2 * hs;
            auto& tup = cache.t_up[static_cast<size_t>(s)][static_cast<size_t>(k)];
            auto& tpre = cache.t_pre[static_cast<size_t>(s)][static_cast<size_t>(k)];
            auto& tact = cache.t_act[static_cast<size_t>(s)][static_cast<size_t>(k)];
            tup.resize(static_cast<size_t>(lay.ch[s]) * ho * ho);
            tpre.resize(static_cast<size_t>(lay.ch[s + 1]) * ho * ho);
            tact.resize(tpre.size());
            kernels::upsample2x(tcur, lay.ch[s], hs, hs, tup.data());
            kernels::conv3x3_forward(tup.data(), lay.ch[s], ho, ho, p + lay.conv[s].k, nullptr,
                                     lay.ch[s + 1], tpre.data());
            const auto& dd = d1[static_cast<size_t>(s)];
            for (size_t i = 0; i < tpre.size(); i++) tact[i] = dd[i] * tpre[i];
            tcur = tact.data();
        }
        auto& tout = cache.t_out2[static_cast<size_t>(k)];
        tout.resize(static_cast<size_t>(2) * hw * hw);
        kernels::conv3x3_forward(tcur, lay.ch[lay.stages], hw, hw, p + lay.out.k, nullptr, 2,
                                 tout.data());
    }
}

void generator_reverse(const GeneratorState& state, const double* z, const ForwardCache& cache,
                       const double* gy, const std::vector<std::vector<double>>& gty,
                       const double* tangent_dirs, double* gtheta, double* gz) {
    const GeneratorLayout lay = make_layout(state.config);
    const int kind = static_cast<int>(state.config.activation);
    const double* p = state.params.data();
    const int ntan = static_cast<int>(gty.size());
    const int hw = state.config.output_shape.h;

    // adjoint of the final conv output
    std::vector<double> gcur(static_cast<size_t>(2) * hw * hw, 0.0);
    if (gy) std::memcpy(gcur.data(), gy, gcur.size() * sizeof(double));
    std::vector<std::vector<double>> gtcur(static_cast<size_t>(ntan));
    for (int k = 0; k < ntan; k++) gtcur[static_cast<size_t>(k)] = gty[static_cast<size_t>(k)];

    const double* top_act =
        lay.stages > 0 ? cache.act.back().data() : cache.a0.data();
    if (gtheta) {
        kernels::conv3x3_weight_grad(top_act, lay.ch[lay.stages], gcur.data(), 2, hw, hw,
                                     gtheta + lay.out.k, gtheta + lay.out.b);
        for (int k = 0; k < ntan; k++)
            kernels::conv3x3_weight_grad(cache.t_act.back()[static_cast<size_t>(k)].data(),
                                         lay.ch[lay.stages], gtcur[static_cast<size_t>(k)].data(),
                                         2, hw, hw, gtheta + lay.out.k, nullptr);
    }
    std::vector<double> ga(static_cast<size_t>(lay.ch[lay.stages]) * hw * hw);
    kernels::conv3x3_input_grad(gcur.data(), 2, hw, hw, p + lay.out.k, lay.ch[lay.stages],
                                ga.data());
    std::vector<std::vector<double>> gta(static_cast<size_t>(ntan));
    for (int k = 0; k < ntan; k++) {
        gta[static_cast<size_t>(k)].resize(ga.size());
        kernels::conv3x3_input_grad(gtcur[static_cast<size_t>(k)].data(), 2, hw, hw, p + lay.out.k,
                                    lay.ch[lay.stages], gta[static_cast<size_t>(k)].data());
    }

    std::vector<double> d1, d2, gpre, gup;
    std::vector<std::vector<double>> gtpre(static_cast<size_t>(ntan)),
        gtup(static_cast<size_t>(ntan));
    for (int s = lay.stages - 1; s >= 0; s--) {
        const int hs = level_size(s);
        const int ho = 2 * hs;
        const auto& pre = cache.pre[static_cast<size_t>(s)];
        d1.resize(pre.size());
        kernels::act_d1(kind, pre.data(), static_cast<std::int64_t>(pre.size()), d1.data());
        gpre.resize(pre.size());
        for (size_t i = 0; i < pre.size(); i++) gpre[i] = d1[i] * ga[i];
        if (ntan > 0) {
            d2.resize(pre.size());
            kernels::act_d2(kind, pre.data(), static_cast<std::int64_t>(pre.size()), d2.data());
            for (int k = 0; k < ntan; k++) {
                const auto& tpre = cache.t_pre[static_cast<size_t>(s)][static_cast<size_t>(k)];
                const auto& gtak = gta[static_cast<size_t>(k)];
                for (size_t i = 0; i < pre.size(); i++) gpre[i] += d2[i] * tpre[i] * gtak[i];
                auto& gtprek = gtpre[static_cast<size_t>(k)];
                gtprek.resize(pre.size());
                for (size_t i = 0; i < pre.size(); i++) gtprek[i] = d1[i] * gtak[i];
            }
        }

        if (gtheta) {
            kernels::conv3x3_weight_grad(cache.up[static_cast<size_t>(s)].data(), lay.ch[s],
                                         gpre.data(), lay.ch[s + 1], ho, ho,
                                         gtheta + lay.conv[s].k, gtheta + lay.conv[s].b);
            for (int k = 0; k < ntan; k++)
                kernels::conv3x3_weight_grad(
                    cache.t_up[static_cast<size_t>(s)][static_cast<size_t>(k)].data(), lay.ch[s],
                    gtpre[static_cast<size_t>(k)].data(), lay.ch[s + 1], ho, ho,
                    gtheta + lay.conv[s].k, nullptr);
        }
        gup.resize(static_cast<size_t>(lay.ch[s]) * ho * ho);
        kernels::conv3x3_input_grad(gpre.data(), lay.ch[s + 1], ho, ho, p + lay.conv[s].k,
                                    lay.ch[s], gup.data());
        ga.resize(static_cast<size_t>(lay.ch[s]) * hs * hs);
        kernels::upsample2x_adjoint(gup.data(), lay.ch[s], hs, hs, ga.data());
        for (int k = 0; k < ntan; k++) {
            auto& gtupk = gtup[static_cast<size_t>(k)];
            gtupk.resize(gup.size());
            kernels::conv3x3_input_grad(gtpre[static_cast<size_t>(k)].data(), lay.ch[s + 1], ho,
                                        ho, p + lay.conv[s].k, lay.ch[s], gtupk.data());
            auto& gtak = gta[static_cast<size_t>(k)];
            gtak.resize(ga.size());
            kernels::upsample2x_adjoint(gtupk.data(), lay.ch[s], hs, hs, gtak.data());
        }
    }

    // dense layer: ga is the adjoint of a0; tangent adjoints feed the weight
    // gradient through their direction vectors
    if (gtheta) {
        kernels::dense_backward(p + lay.dense_w, lay.seed_units(), lay.d, z, ga.data(), nullptr,
                                gtheta + lay.dense_w, gtheta + lay.dense_b);
        for (int k = 0; k < ntan; k++)
            kernels::dense_backward(p + lay.dense_w, lay.seed_units(), lay.d,
                                    tangent_dirs + static_cast<std::size_t>(k) * lay.d,
                                    gta[static_cast<size_t>(k)].data(), nullptr,
                                    gtheta + lay.dense_w, nullptr);
    }
    if (gz) {
        std::vector<double> gz_local(static_cast<size_t>(lay.d));
        kernels::dense_backward(p + lay.dense_w, lay.seed_units(), lay.d, z, ga.data(),
                                gz_local.data(), nullptr, nullptr);
        for (int i = 0; i < lay.d; i++) gz[i] += gz_local[i];
    }
}

ComplexImage generate_one(const GeneratorState& state, const double* z) {
    ForwardCache cache;
    generator_forward(state, z, cache);
    ComplexImage img(state.config.output_shape);
    const std::int64_t n = img.shape.pixels();
    for (std::int64_t i = 0; i < n; i++)
        img.data[i] = cplx(cache.out2[i], cache.out2[n + i]);
    return img;
}

ImageSeries generate(const GeneratorState& state, const std::vector<double>& z_batch, int batch) {
    const int d = state.config.latent_dim;
    require(static_cast<int>(z_batch.size()) == batch * d, "latent batch size mismatch");
    ImageSeries out;
    out.reserve(static_cast<size_t>(batch));
    for (int i = 0; i < batch; i++)
        out.push_back(generate_one(state, z_batch.data() + static_cast<std::size_t>(i) * d));
    return out;
}

std::vector<double> generate_jvp(const GeneratorState& state, const double* z, const double* v) {
    ForwardCache cache;
    generator_forward(state, z, cache, 1, v);
    return cache.t_out2[0];
}

double network_penalty(const GeneratorState& state, const std::vector<double>& z_batch,
                       int batch) {
    return network_penalty_grad(state, z_batch, batch, 0.0, nullptr, nullptr);
}

double network_penalty_grad(const GeneratorState& state, const std::vector<double>& z_batch,
                            int batch, double scale, double* gtheta, double* gz_batch) {
    require(batch >= 1, "network_penalty needs a non-empty batch");
    const int d = state.config.latent_dim;
    require(static_cast<int>(z_batch.size()) == batch * d, "latent batch size mismatch");

    // unit latent directions; one JVP per latent coordinate
    std::vector<double> dirs(static_cast<size_t>(d) * d, 0.0);
    for (int k = 0; k < d; k++) dirs[static_cast<size_t>(k) * d + k] = 1.0;

    const bool want_grad = (gtheta != nullptr) || (gz_batch != nullptr);
    double penalty = 0.0;
    ForwardCache cache;
    for (int i = 0; i < batch; i++) {
        const double* z = z_batch.data() + static_cast<std::size_t>(i) * d;
        generator_forward(state, z, cache, d, dirs.data());
        double frame_sq = 0.0;
        for (int k = 0; k < d; k++)
            for (double t : cache.t_out2[static_cast<size_t>(k)]) frame_sq += t * t;
        penalty += frame_sq;
        if (want_grad) {
            std::vector<std::vector<double>> gty(static_cast<size_t>(d));
            const double c = 2.0 * scale / batch;
            for (int k = 0; k < d; k++) {
                gty[static_cast<size_t>(k)] = cache.t_out2[static_cast<size_t>(k)];
                for (double& v : gty[static_cast<size_t>(k)]) v *= c;
            }
            generator_reverse(state, z, cache, nullptr, gty, dirs.data(), gtheta,
                              gz_batch ? gz_batch + static_cast<std::size_t>(i) * d : nullptr);
        }
    }
    penalty /= batch;
    if (!std::isfinite(penalty))
        throw TrainingDivergence("network penalty became non-finite");
    return penalty;
}

void save_generator(const GeneratorState& state, const std::string& path) {
    Archive a("generator_checkpoint");
    a.meta()["latent_dim"] = state.config.latent_dim;
    a.meta()["output_shape"] = {state.config.output_shape.h, state.config.output_shape.w};
    a.meta()["base_channels"] = state.config.base_channels;
    a.meta()["activation"] = activation_name(state.config.activation);
    a.meta()["seed"] = state.config.seed;
    a.add_f64("params", state.params, {static_cast<std::int64_t>(state.params.size())});
    a.save(path);
}

GeneratorState load_generator(const std::string& path) {
    Archive a = Archive::load(path);
    if (a.kind() != "generator_checkpoint")
        throw std::runtime_error("not a generator checkpoint: " + path);
    GeneratorState st;
    st.config.latent_dim = a.meta().at("latent_dim").get<int>();
    st.config.output_shape = {a.meta().at("output_shape")[0].get<int>(),
                              a.meta().at("output_shape")[1].get<int>()};
    st.config.base_channels = a.meta().at("base_channels").get<int>();
    st.config.activation = activation_from_name(a.meta().at("activation").get<std::string>());
    st.config.seed = a.meta().at("seed").get<std::uint64_t>();
    st.params = a.f64("params");
    const GeneratorLayout lay = make_layout(st.config);
    if (st.params.size() != lay.total_params)
        throw std::runtime_error("checkpoint parameter count does not match its config");
    return st;
}

}  // namespace dynrec
