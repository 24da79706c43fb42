#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dynrec/archive.hpp"
#include "dynrec/generator.hpp"
#include "dynrec/kernels.hpp"
#include "dynrec/rng.hpp"

using namespace dynrec;

namespace {

GeneratorConfig small_config() {
    GeneratorConfig cfg;
    cfg.latent_dim = 2;
    cfg.output_shape = {16, 16};
    cfg.base_channels = 16;
    cfg.seed = 21;
    return cfg;
}

double vec_rel_err(const std::vector<double>& got, const std::vector<double>& want) {
    double num = 0.0, den = 1e-300;
    for (size_t i = 0; i < got.size(); i++) {
        num += (got[i] - want[i]) * (got[i] - want[i]);
        den += want[i] * want[i];
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("initialization is deterministic and seed-sensitive") {
    const GeneratorConfig cfg = small_config();
    const GeneratorState a = init_generator(cfg);
    const GeneratorState b = init_generator(cfg);
    CHECK(a.params == b.params);

    GeneratorConfig cfg2 = cfg;
    cfg2.seed = cfg.seed + 1;
    const GeneratorState c = init_generator(cfg2);
    CHECK(a.params != c.params);
}

TEST_CASE("parameter count matches an independent per-layer audit") {
    GeneratorConfig cfg;
    cfg.latent_dim = 2;
    cfg.output_shape = {64, 64};
    cfg.base_channels = 128;
    const GeneratorLayout lay = make_layout(cfg);

    // hand audit: dense 2 -> 4*4*128, then convs 128->64->32->16->8, out 8->2
    std::size_t expect = 0;
    expect += (4 * 4 * 128) * 2 + (4 * 4 * 128);          // dense w + b
    int cin = 128;
    for (int s = 0; s < 4; s++) {
        const int cout = cin / 2;
        expect += static_cast<std::size_t>(cout) * cin * 9 + cout;
        cin = cout;
    }
    expect += static_cast<std::size_t>(2) * cin * 9 + 2;  // output conv
    CHECK(lay.total_params == expect);
    CHECK(init_generator(cfg).params.size() == expect);
}

TEST_CASE("generate is deterministic with the documented shape contract") {
    const GeneratorConfig cfg = small_config();
    const GeneratorState st = init_generator(cfg);

    std::vector<double> zb{0.1, -0.2, 0.1, -0.2, 0.5, 0.7, 0.1, -0.2, -0.3, 0.9};
    const ImageSeries frames = generate(st, zb, 5);
    REQUIRE(frames.size() == 5);
    for (const auto& f : frames) {
        CHECK(f.shape.h == 16);
        CHECK(f.shape.w == 16);
    }
    // identical latent rows give identical frames
    CHECK(frames[0].data == frames[1].data);
    CHECK(frames[0].data == frames[3].data);
    CHECK(frames[0].data != frames[2].data);

    const double bad[2] = {std::nan(""), 0.0};
    CHECK_THROWS_AS(generate_one(st, bad), ValidationError);
}

TEST_CASE("analytic JVP matches central differences") {
    const GeneratorConfig cfg = small_config();
    const GeneratorState st = init_generator(cfg);
    const double z[2] = {0.3, -0.5};
    const double v[2] = {0.8, 0.6};

    const std::vector<double> jvp = generate_jvp(st, z, v);
    const double eps = 1e-3;
    const double zp[2] = {z[0] + eps * v[0], z[1] + eps * v[1]};
    const double zm[2] = {z[0] - eps * v[0], z[1] - eps * v[1]};
    const ComplexImage gp = generate_one(st, zp);
    const ComplexImage gm = generate_one(st, zm);
    std::vector<double> fd(jvp.size());
    const std::int64_t n = gp.shape.pixels();
    for (std::int64_t i = 0; i < n; i++) {
        fd[static_cast<size_t>(i)] = (gp.data[i].real() - gm.data[i].real()) / (2 * eps);
        fd[static_cast<size_t>(n + i)] = (gp.data[i].imag() - gm.data[i].imag()) / (2 * eps);
    }
    CHECK(vec_rel_err(jvp, fd) < 1e-4);
}

TEST_CASE("network penalty") {
    SUBCASE("zero convolution kernels give zero penalty") {
        GeneratorConfig cfg = small_config();
        GeneratorState st = init_generator(cfg);
        const GeneratorLayout lay = make_layout(cfg);
        for (int s = 0; s < lay.stages; s++) {
            const std::size_t n = static_cast<std::size_t>(lay.ch[s + 1]) * lay.ch[s] * 9;
            for (std::size_t i = 0; i < n; i++) st.params[lay.conv[s].k + i] = 0.0;
        }
        const std::size_t nout = static_cast<std::size_t>(2) * lay.ch[lay.stages] * 9;
        for (std::size_t i = 0; i < nout; i++) st.params[lay.out.k + i] = 0.0;

        std::vector<double> zb{0.4, -0.1, 0.0, 0.9};
        CHECK(network_penalty(st, zb, 2) == 0.0);
    }

    SUBCASE("a linear map's penalty equals its squared Frobenius norm") {
        // single dense layer harness driven through the same JVP machinery
        Rng rng(5);
        const int rows = 24, d = 3;
        std::vector<double> m(static_cast<size_t>(rows) * d);
        for (auto& v : m) v = rng.normal();
        double frob_sq = 0.0;
        for (double v : m) frob_sq += v * v;

        double penalty = 0.0;
        for (int k = 0; k < d; k++) {
            std::vector<double> e(static_cast<size_t>(d), 0.0);
            e[static_cast<size_t>(k)] = 1.0;
            std::vector<double> col(static_cast<size_t>(rows));
            kernels::dense_forward(m.data(), nullptr, rows, d, e.data(), col.data());
            for (double v : col) penalty += v * v;
        }
        CHECK(penalty == doctest::Approx(frob_sq).epsilon(1e-12));
    }

    SUBCASE("penalty matches a brute-force finite-difference Jacobian") {
        const GeneratorConfig cfg = small_config();
        const GeneratorState st = init_generator(cfg);
        std::vector<double> zb{0.2, 0.6, -0.4, 0.1};
        const double penalty = network_penalty(st, zb, 2);

        const double eps = 1e-4;
        double brute = 0.0;
        for (int i = 0; i < 2; i++) {
            for (int k = 0; k < 2; k++) {
                double zp[2] = {zb[2 * i], zb[2 * i + 1]};
                double zm[2] = {zb[2 * i], zb[2 * i + 1]};
                zp[k] += eps;
                zm[k] -= eps;
                const ComplexImage gp = generate_one(st, zp);
                const ComplexImage gm = generate_one(st, zm);
                for (size_t p = 0; p < gp.data.size(); p++) {
                    const cplx diff = (gp.data[p] - gm.data[p]) / (2 * eps);
                    brute += std::norm(diff);
                }
            }
        }
        brute /= 2.0;  // batch mean
        CHECK(std::abs(penalty - brute) / brute < 1e-3);
    }

    SUBCASE("penalty gradient matches central differences") {
        const GeneratorConfig cfg = small_config();
        GeneratorState st = init_generator(cfg);
        std::vector<double> zb{0.2, -0.3};
        const GeneratorLayout lay = make_layout(cfg);

        std::vector<double> gtheta(lay.total_params, 0.0), gz(2, 0.0);
        network_penalty_grad(st, zb, 1, 1.0, gtheta.data(), gz.data());

        Rng pick(77);
        const double eps = 1e-5;
        for (int trial = 0; trial < 10; trial++) {
            const std::size_t idx = pick.below(lay.total_params);
            GeneratorState sp = st, sm = st;
            sp.params[idx] += eps;
            sm.params[idx] -= eps;
            const double fd =
                (network_penalty(sp, zb, 1) - network_penalty(sm, zb, 1)) / (2 * eps);
            if (std::abs(fd) < 1e-12) {
                CHECK(std::abs(gtheta[idx]) < 1e-8);
            } else {
                CHECK(gtheta[idx] == doctest::Approx(fd).epsilon(1e-4));
            }
        }
        for (int k = 0; k < 2; k++) {
            std::vector<double> zp = zb, zm = zb;
            zp[static_cast<size_t>(k)] += eps;
            zm[static_cast<size_t>(k)] -= eps;
            const double fd =
                (network_penalty(st, zp, 1) - network_penalty(st, zm, 1)) / (2 * eps);
            CHECK(gz[static_cast<size_t>(k)] == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}

TEST_CASE("gradient of ||G(z)||^2 w.r.t. theta and z matches finite differences") {
    const GeneratorConfig cfg = small_config();
    GeneratorState st = init_generator(cfg);
    const double z[2] = {0.25, -0.6};
    const GeneratorLayout lay = make_layout(cfg);

    const auto norm_sq = [](const GeneratorState& s, const double* zz) {
        const ComplexImage img = generate_one(s, zz);
        double acc = 0.0;
        for (const auto& v : img.data) acc += std::norm(v);
        return acc;
    };

    // analytic: d||y||^2/dy = 2y
    ForwardCache cache;
    generator_forward(st, z, cache);
    std::vector<double> gy(cache.out2.size());
    for (size_t i = 0; i < gy.size(); i++) gy[i] = 2.0 * cache.out2[i];
    std::vector<double> gtheta(lay.total_params, 0.0), gz(2, 0.0);
    generator_reverse(st, z, cache, gy.data(), {}, nullptr, gtheta.data(), gz.data());

    Rng pick(31);
    const double eps = 1e-5;
    for (int trial = 0; trial < 10; trial++) {
        const std::size_t idx = pick.below(lay.total_params);
        GeneratorState sp = st, sm = st;
        sp.params[idx] += eps;
        sm.params[idx] -= eps;
        const double fd = (norm_sq(sp, z) - norm_sq(sm, z)) / (2 * eps);
        CHECK(gtheta[idx] == doctest::Approx(fd).epsilon(1e-4));
    }
    for (int k = 0; k < 2; k++) {
        double zp[2] = {z[0], z[1]}, zm[2] = {z[0], z[1]};
        zp[k] += eps;
        zm[k] -= eps;
        const double fd = (norm_sq(st, zp) - norm_sq(st, zm)) / (2 * eps);
        CHECK(gz[k] == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("latent rescaling compensated in the input layer leaves output unchanged") {
    const GeneratorConfig cfg = small_config();
    GeneratorState st = init_generator(cfg);
    const GeneratorLayout lay = make_layout(cfg);
    const double z[2] = {0.4, -0.7};
    const ComplexImage base = generate_one(st, z);

    const double s = 3.7;
    GeneratorState scaled = st;
    for (std::size_t i = 0; i < static_cast<std::size_t>(lay.seed_units()) * lay.d; i++)
        scaled.params[lay.dense_w + i] /= s;
    const double zs[2] = {s * z[0], s * z[1]};
    const ComplexImage out = generate_one(scaled, zs);

    double max_err = 0.0;
    for (size_t i = 0; i < base.data.size(); i++)
        max_err = std::max(max_err, std::abs(base.data[i] - out.data[i]));
    CHECK(max_err < 1e-10);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    const GeneratorConfig cfg = small_config();
    const GeneratorState st = init_generator(cfg);
    const std::string path =
        (std::filesystem::temp_directory_path() / "dynrec_gen_ckpt.bin").string();
    save_generator(st, path);
    const GeneratorState loaded = load_generator(path);
    CHECK(loaded.params == st.params);
    CHECK(loaded.config.latent_dim == cfg.latent_dim);
    CHECK(loaded.config.base_channels == cfg.base_channels);
    CHECK(loaded.config.seed == cfg.seed);

    const std::string path2 =
        (std::filesystem::temp_directory_path() / "dynrec_gen_ckpt2.bin").string();
    save_generator(loaded, path2);
    CHECK(sha256_file(path) == sha256_file(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("invalid configurations are rejected") {
    GeneratorConfig cfg = small_config();
    cfg.output_shape = {24, 24};  // not a power of two
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = small_config();
    cfg.output_shape = {8, 8};  // too small
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = small_config();
    cfg.base_channels = 4;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = small_config();
    cfg.latent_dim = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
