#include <doctest.h>

#include <cmath>

#include "dynrec/objective.hpp"
#include "dynrec/phantom.hpp"
#include "dynrec/rng.hpp"

using namespace dynrec;

namespace {

GeneratorConfig small_config() {
    GeneratorConfig cfg;
    cfg.latent_dim = 2;
    cfg.output_shape = {16, 16};
    cfg.base_channels = 16;
    cfg.seed = 33;
    return cfg;
}

LatentSequence make_latents(int n, int d, std::uint64_t seed) {
    LatentSequence seq = LatentSequence::uniform(n, d);
    Rng rng(seed);
    for (auto& v : seq.z) v = 0.3 * rng.normal();
    return seq;
}

// measurements synthesized from the generator itself (zero residual at init)
MeasurementSet consistent_mset(const GeneratorState& st, const LatentSequence& latents,
                               int lines) {
    const GridShape g = st.config.output_shape;
    MeasurementSet mset;
    mset.grid = g;
    mset.num_coils = 1;
    mset.coils = unit_coils(g);
    auto pats = make_golden_angle_patterns(g, latents.size(), lines, 0);
    for (int i = 0; i < latents.size(); i++) {
        MeasurementFrame f;
        f.pattern = std::move(pats[static_cast<size_t>(i)]);
        f.sample_indices = f.pattern.mask_indices();
        f.samples = forward_at(generate_one(st, latents.row(i)), f.sample_indices, mset.coils);
        mset.frames.push_back(std::move(f));
    }
    return mset;
}

MeasurementSet phantom_mset(GridShape g, int n, int lines, double sigma, std::uint64_t seed) {
    PhantomSpec spec;
    spec.grid = g;
    spec.num_frames = n;
    spec.cardiac_period = 4.3;
    spec.resp_period = 7.9;
    spec.seed = seed;
    return simulate_acquisition(make_phantom(spec), lines, 1, sigma, seed);
}

}  // namespace

TEST_CASE("data fidelity") {
    const GeneratorState st = init_generator(small_config());
    const LatentSequence latents = make_latents(6, 2, 1);

    SUBCASE("zero at exactly consistent measurements") {
        const MeasurementSet mset = consistent_mset(st, latents, 3);
        const double fid = data_fidelity(st, latents, mset, all_frames(mset));
        CHECK(fid < 1e-20);
    }

    SUBCASE("equals a frame-by-frame oracle") {
        const MeasurementSet mset = phantom_mset({16, 16}, 6, 3, 0.0, 4);
        const double fid = data_fidelity(st, latents, mset, all_frames(mset));
        double oracle = 0.0;
        for (int i = 0; i < 6; i++) {
            const ComplexImage img = generate_one(st, latents.row(i));
            const auto pred =
                apply_forward(img, mset.frames[static_cast<size_t>(i)].pattern, mset.coils);
            for (size_t c = 0; c < pred.size(); c++)
                for (size_t k = 0; k < pred[c].size(); k++)
                    oracle +=
                        std::norm(pred[c][k] - mset.frames[static_cast<size_t>(i)].samples[c][k]);
        }
        CHECK(std::abs(fid - oracle) / oracle < 1e-10);
    }

    SUBCASE("doubling the image doubles the residual when b = 0") {
        MeasurementSet mset = consistent_mset(st, latents, 3);
        for (auto& f : mset.frames)
            for (auto& row : f.samples)
                for (auto& v : row) v = cplx(0.0, 0.0);
        const double f1 = data_fidelity(st, latents, mset, all_frames(mset));

        GeneratorState doubled = st;
        const GeneratorLayout lay = make_layout(st.config);
        for (std::size_t i = 0; i < static_cast<std::size_t>(2) * lay.ch[lay.stages] * 9 + 2; i++)
            doubled.params[lay.out.k + i] *= 2.0;
        const double f2 = data_fidelity(doubled, latents, mset, all_frames(mset));
        CHECK(f2 == doctest::Approx(4.0 * f1).epsilon(1e-10));
    }

    SUBCASE("out-of-range frame index rejected") {
        const MeasurementSet mset = consistent_mset(st, latents, 3);
        CHECK_THROWS_AS(data_fidelity(st, latents, mset, {6}), ValidationError);
    }
}

TEST_CASE("temporal penalty") {
    SUBCASE("constant sequence gives zero") {
        LatentSequence seq = LatentSequence::uniform(5, 2);
        for (int i = 0; i < 5; i++) {
            seq.row(i)[0] = 0.7;
            seq.row(i)[1] = -0.2;
        }
        CHECK(temporal_penalty(seq) == 0.0);
    }

    SUBCASE("hand-computed value for (0, 1, 3)") {
        LatentSequence seq = LatentSequence::uniform(3, 1);
        seq.row(0)[0] = 0.0;
        seq.row(1)[0] = 1.0;
        seq.row(2)[0] = 3.0;
        CHECK(temporal_penalty(seq) == doctest::Approx(5.0).epsilon(1e-15));
    }

    SUBCASE("invariant to adding a constant vector") {
        LatentSequence seq = make_latents(8, 2, 2);
        const double before = temporal_penalty(seq);
        for (int i = 0; i < 8; i++) {
            seq.row(i)[0] += 11.5;
            seq.row(i)[1] -= 3.25;
        }
        CHECK(temporal_penalty(seq) == doctest::Approx(before).epsilon(1e-12));
    }

    SUBCASE("gradient matches finite differences") {
        const LatentSequence seq = make_latents(5, 2, 3);
        std::vector<double> g(10, 0.0);
        temporal_penalty_grad(seq, 1.0, g.data());
        const double eps = 1e-6;
        for (int i = 0; i < 10; i++) {
            LatentSequence p = seq, m = seq;
            p.z[static_cast<size_t>(i)] += eps;
            m.z[static_cast<size_t>(i)] -= eps;
            const double fd = (temporal_penalty(p) - temporal_penalty(m)) / (2 * eps);
            CHECK(g[static_cast<size_t>(i)] == doctest::Approx(fd).epsilon(1e-7));
        }
    }
}

TEST_CASE("total cost") {
    const GeneratorState st = init_generator(small_config());
    const LatentSequence latents = make_latents(6, 2, 5);
    const MeasurementSet mset = phantom_mset({16, 16}, 6, 3, 0.01, 6);

    SUBCASE("reduces to the data term when both weights vanish") {
        const CostBreakdown c = total_cost(st, latents, mset, {0.0, 0.0}, all_frames(mset));
        CHECK(c.network == 0.0);
        CHECK(c.temporal == 0.0);
        CHECK(c.total == data_fidelity(st, latents, mset, all_frames(mset)));
    }

    SUBCASE("breakdown sums to the total") {
        const CostBreakdown c = total_cost(st, latents, mset, {0.001, 2.0}, all_frames(mset));
        CHECK(std::abs(c.data + c.network + c.temporal - c.total) < 1e-12);
        CHECK(c.total >= 0.0);
    }

    SUBCASE("a large latent jump strictly increases the cost") {
        LatentSequence bumped = latents;
        bumped.row(3)[0] += 50.0;
        const RegWeights w{0.0, 2.0};
        // isolate the temporal term: same data/network contribution comparison
        const double before = temporal_penalty(latents);
        const double after = temporal_penalty(bumped);
        CHECK(after > before + 1000.0);
        (void)w;
    }

    SUBCASE("gradient matches central finite differences on a 16x16 problem") {
        const RegWeights w{0.001, 2.0};
        const std::vector<int> idx = all_frames(mset);
        const GeneratorLayout lay = make_layout(st.config);

        std::vector<double> gtheta(lay.total_params, 0.0);
        std::vector<double> gz(latents.z.size(), 0.0);
        cost_terms_grad(st, latents, mset, idx, 1.0, w.lambda1, w.lambda2, gtheta.data(),
                        gz.data());

        const auto eval = [&](const GeneratorState& s, const LatentSequence& l) {
            return total_cost(s, l, mset, w, idx).total;
        };

        Rng pick(9);
        const double eps = 1e-5;
        for (int trial = 0; trial < 10; trial++) {
            const std::size_t i = pick.below(lay.total_params);
            GeneratorState sp = st, sm = st;
            sp.params[i] += eps;
            sm.params[i] -= eps;
            const double fd = (eval(sp, latents) - eval(sm, latents)) / (2 * eps);
            CHECK(gtheta[i] == doctest::Approx(fd).epsilon(1e-4));
        }
        for (int trial = 0; trial < 6; trial++) {
            const std::size_t i = pick.below(gz.size());
            LatentSequence lp = latents, lm = latents;
            lp.z[i] += eps;
            lm.z[i] -= eps;
            const double fd = (eval(st, lp) - eval(st, lm)) / (2 * eps);
            CHECK(gz[i] == doctest::Approx(fd).epsilon(1e-4));
        }
    }

    SUBCASE("minibatch data term is an unbiased estimator") {
        const int n = 6, batch = 2;
        const double full = data_fidelity(st, latents, mset, all_frames(mset));
        Rng rng(123);
        double acc = 0.0;
        const int draws = 200;
        for (int t = 0; t < draws; t++) {
            // sample without replacement
            std::vector<int> pool(static_cast<size_t>(n));
            for (int i = 0; i < n; i++) pool[static_cast<size_t>(i)] = i;
            std::vector<int> pick_idx;
            for (int b = 0; b < batch; b++) {
                const auto j = rng.below(pool.size());
                pick_idx.push_back(pool[j]);
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
            }
            acc += (static_cast<double>(n) / batch) *
                   data_fidelity(st, latents, mset, pick_idx);
        }
        acc /= draws;
        CHECK(std::abs(acc - full) / full < 0.02);
    }
}
