// Benchmark of the OpenMP kernels against the serial reference
// implementations, plus a whole-generator forward/backward timing.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include <omp.h>

#include "dynrec/generator.hpp"
#include "dynrec/kernels.hpp"
#include "dynrec/rng.hpp"

using namespace dynrec;

namespace {

double time_best_ms(const std::function<void()>& fn, int reps) {
    double best = 1e300;
    for (int r = 0; r < reps; r++) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); i++) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void fill_random(std::vector<double>& v, Rng& rng) {
    for (auto& x : v) x = rng.normal();
}

void report(const char* name, double serial_ms, double omp_ms, double diff) {
    std::printf("%-28s %10.3f ms %10.3f ms %8.2fx   max|diff| %.3e\n", name, serial_ms, omp_ms,
                serial_ms / omp_ms, diff);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    Rng rng(7);
    const int reps = 5;

    {
        const int cin = 64, cout = 32, h = 64, w = 64;
        std::vector<double> in(static_cast<size_t>(cin) * h * w), k(static_cast<size_t>(cout) * cin * 9),
            bias(cout), out_s(static_cast<size_t>(cout) * h * w), out_p(out_s.size());
        fill_random(in, rng);
        fill_random(k, rng);
        fill_random(bias, rng);
        const double ts = time_best_ms(
            [&] { refkernels::conv3x3_forward(in.data(), cin, h, w, k.data(), bias.data(), cout, out_s.data()); },
            reps);
        const double tp = time_best_ms(
            [&] { kernels::conv3x3_forward(in.data(), cin, h, w, k.data(), bias.data(), cout, out_p.data()); },
            reps);
        report("conv3x3 forward 64c->32c", ts, tp, max_abs_diff(out_s, out_p));

        std::vector<double> gout(out_s.size()), gin_s(in.size()), gin_p(in.size());
        fill_random(gout, rng);
        const double ts2 = time_best_ms(
            [&] { refkernels::conv3x3_input_grad(gout.data(), cout, h, w, k.data(), cin, gin_s.data()); },
            reps);
        const double tp2 = time_best_ms(
            [&] { kernels::conv3x3_input_grad(gout.data(), cout, h, w, k.data(), cin, gin_p.data()); },
            reps);
        report("conv3x3 input grad", ts2, tp2, max_abs_diff(gin_s, gin_p));

        std::vector<double> gk_s(k.size(), 0.0), gk_p(k.size(), 0.0), gb_s(cout, 0.0), gb_p(cout, 0.0);
        const double ts3 = time_best_ms(
            [&] {
                std::fill(gk_s.begin(), gk_s.end(), 0.0);
                std::fill(gb_s.begin(), gb_s.end(), 0.0);
                refkernels::conv3x3_weight_grad(in.data(), cin, gout.data(), cout, h, w, gk_s.data(), gb_s.data());
            },
            reps);
        const double tp3 = time_best_ms(
            [&] {
                std::fill(gk_p.begin(), gk_p.end(), 0.0);
                std::fill(gb_p.begin(), gb_p.end(), 0.0);
                kernels::conv3x3_weight_grad(in.data(), cin, gout.data(), cout, h, w, gk_p.data(), gb_p.data());
            },
            reps);
        report("conv3x3 weight grad", ts3, tp3, max_abs_diff(gk_s, gk_p));
    }

    {
        const int c = 64, h = 32, w = 32;
        std::vector<double> in(static_cast<size_t>(c) * h * w), out_s(in.size() * 4), out_p(in.size() * 4);
        fill_random(in, rng);
        const double ts = time_best_ms([&] { refkernels::upsample2x(in.data(), c, h, w, out_s.data()); }, reps);
        const double tp = time_best_ms([&] { kernels::upsample2x(in.data(), c, h, w, out_p.data()); }, reps);
        report("upsample2x 64c 32->64", ts, tp, max_abs_diff(out_s, out_p));
    }

    {
        const std::int64_t n = 1 << 20;
        std::vector<double> u(static_cast<size_t>(n)), out_s(u.size()), out_p(u.size());
        fill_random(u, rng);
        const double ts = time_best_ms([&] { refkernels::act_forward(0, u.data(), n, out_s.data()); }, reps);
        const double tp = time_best_ms([&] { kernels::act_forward(0, u.data(), n, out_p.data()); }, reps);
        report("tanh 1M", ts, tp, max_abs_diff(out_s, out_p));
    }

    {
        GeneratorConfig cfg;
        cfg.output_shape = {64, 64};
        cfg.base_channels = 64;
        cfg.seed = 11;
        const GeneratorState st = init_generator(cfg);
        const double z[2] = {0.3, -0.2};
        ForwardCache cache;
        const double dirs[4] = {1, 0, 0, 1};
        std::vector<double> gtheta(st.params.size()), gz(2);
        std::vector<double> gy(static_cast<size_t>(2) * 64 * 64, 1e-3);

        const double tf = time_best_ms([&] { generator_forward(st, z, cache); }, reps);
        std::printf("%-28s %24.3f ms\n", "generator fwd 64x64 c64", tf);
        const double tfj = time_best_ms([&] { generator_forward(st, z, cache, 2, dirs); }, reps);
        std::printf("%-28s %24.3f ms\n", "generator fwd + 2 tangents", tfj);
        generator_forward(st, z, cache, 2, dirs);
        std::vector<std::vector<double>> gty(2, std::vector<double>(gy.size(), 1e-3));
        const double tb = time_best_ms(
            [&] {
                std::fill(gtheta.begin(), gtheta.end(), 0.0);
                std::fill(gz.begin(), gz.end(), 0.0);
                generator_reverse(st, z, cache, gy.data(), gty, dirs, gtheta.data(), gz.data());
            },
            reps);
        std::printf("%-28s %24.3f ms\n", "generator reverse (full)", tb);
    }
    return 0;
}
