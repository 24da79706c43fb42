#include "dynrec/phantom.hpp"

#include <cmath>

#include "dynrec/archive.hpp"
#include "dynrec/rng.hpp"

namespace dynrec {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// soft ellipse indicator: 1 inside, 0 outside, smoothstep edge about one
// pixel wide so motion is differentiable in the phases
double soft_ellipse(double y, double x, double cy, double cx, double ry, double rx,
                    double edge) {
    const double r = std::sqrt(((y - cy) / ry) * ((y - cy) / ry) +
                               ((x - cx) / rx) * ((x - cx) / rx));
    const double t = (1.0 - r) * std::min(ry, rx) / edge;  // signed distance in edge units
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * (3.0 - 2.0 * t);
}

void paint(double& dst, double value, double alpha) { dst = dst * (1.0 - alpha) + value * alpha; }

bool near_integer_ratio(double a, double b) {
    const double r = a / b;
    return std::abs(r - std::round(r)) < 1e-9;
}

}  // namespace

void PhantomSpec::validate() const {
    require(grid.h >= 8 && grid.w >= 8 && grid.h % 2 == 0 && grid.w % 2 == 0,
            "phantom grid must be even and >= 8");
    require(num_frames >= 1, "num_frames must be >= 1");
    require(cardiac_period > 2.0 && resp_period > 2.0, "periods must exceed 2 frames");
    require(!near_integer_ratio(cardiac_period, resp_period) &&
                !near_integer_ratio(resp_period, cardiac_period),
            "periods must not be integer multiples of one another");
    require(cardiac_amplitude > 0.0 && cardiac_amplitude < 0.3 && resp_amplitude > 0.0 &&
                resp_amplitude < 0.3,
            "amplitudes must lie in (0, 0.3)");
    require(noise_sigma >= 0.0, "noise_sigma must be >= 0");
}

ComplexImage render_phantom_frame(const PhantomSpec& spec, double cardiac_phase,
                                  double resp_phase) {
    const int h = spec.grid.h, w = spec.grid.w;
    const double cy = 0.5 * (h - 1), cx = 0.5 * (w - 1);
    const double resp_shift = spec.resp_amplitude * h * std::sin(resp_phase);
    const double vent_radius = std::max(
        0.13 * h + spec.cardiac_amplitude * h * std::sin(cardiac_phase), 0.02 * h);
    const double edge = 1.2;

    ComplexImage img(spec.grid);
    for (int y = 0; y < h; y++) {
        for (int x = 0; x < w; x++) {
            double mag = 0.06;  // dim tissue background everywhere

            // torso and its contents translate with respiration
            const double ty = cy + resp_shift;
            paint(mag, 0.40, soft_ellipse(y, x, ty, cx, 0.38 * h, 0.30 * w, edge));
            // fixed-size chamber inside the torso
            paint(mag, 0.65,
                  soft_ellipse(y, x, ty + 0.16 * h, cx + 0.12 * w, 0.055 * h, 0.055 * w, edge));
            // ventricle: radius breathes with the cardiac phase
            paint(mag, 0.90,
                  soft_ellipse(y, x, ty - 0.06 * h, cx - 0.08 * w, vent_radius,
                               0.9 * vent_radius, edge));

            // static structures for spatial texture
            paint(mag, 0.30, soft_ellipse(y, x, 0.10 * h, 0.12 * w, 0.045 * h, 0.045 * w, edge));
            paint(mag, 0.50, soft_ellipse(y, x, 0.09 * h, 0.86 * w, 0.040 * h, 0.055 * w, edge));
            paint(mag, 0.55, soft_ellipse(y, x, 0.90 * h, 0.10 * w, 0.050 * h, 0.040 * w, edge));

            // smooth low-order complex phase so frames are genuinely complex
            const double u = (x - cx) / (0.5 * w);
            const double v = (y - cy) / (0.5 * h);
            const double phase = 0.5 * u + 0.25 * v + 0.6 * u * v + 0.3 * (u * u - v * v);
            img.at(y, x) = std::polar(mag, phase);
        }
    }
    return img;
}

PhantomTruth make_phantom(const PhantomSpec& spec) {
    spec.validate();
    PhantomTruth truth;
    truth.spec = spec;
    truth.images.reserve(static_cast<size_t>(spec.num_frames));
    truth.cardiac_phase.resize(static_cast<size_t>(spec.num_frames));
    truth.resp_phase.resize(static_cast<size_t>(spec.num_frames));
    for (int i = 0; i < spec.num_frames; i++) {
        const double cph = std::fmod(kTwoPi * i / spec.cardiac_period, kTwoPi);
        const double rph = std::fmod(kTwoPi * i / spec.resp_period, kTwoPi);
        truth.cardiac_phase[static_cast<size_t>(i)] = cph;
        truth.resp_phase[static_cast<size_t>(i)] = rph;
        truth.images.push_back(render_phantom_frame(spec, cph, rph));
    }
    return truth;
}

MeasurementSet simulate_acquisition(const PhantomTruth& truth, int lines_per_frame,
                                    int num_coils, double noise_sigma, std::uint64_t seed) {
    require(!truth.images.empty(), "phantom truth has no frames");
    require(noise_sigma >= 0.0, "noise_sigma must be >= 0");
    const GridShape grid = truth.spec.grid;
    const int n = static_cast<int>(truth.images.size());

    MeasurementSet mset;
    mset.grid = grid;
    mset.num_coils = num_coils;
    mset.noise_sigma = noise_sigma;
    mset.coils = synth_coil_maps(grid, num_coils, seed);

    auto patterns = make_golden_angle_patterns(grid, n, lines_per_frame, seed);
    Rng noise(Rng::mix(seed, 0x4015e));
    const double scale = noise_sigma / std::sqrt(2.0);
    for (int i = 0; i < n; i++) {
        MeasurementFrame f;
        f.pattern = std::move(patterns[static_cast<size_t>(i)]);
        f.sample_indices = f.pattern.mask_indices();
        f.samples = forward_at(truth.images[static_cast<size_t>(i)], f.sample_indices, mset.coils);
        if (noise_sigma > 0.0)
            for (auto& coil_row : f.samples)
                for (auto& s : coil_row) s += cplx(scale * noise.normal(), scale * noise.normal());
        mset.frames.push_back(std::move(f));
    }
    return mset;
}

namespace {

std::vector<double> complex_to_f64(const std::vector<cplx>& v) {
    std::vector<double> out(v.size() * 2);
    for (size_t i = 0; i < v.size(); i++) {
        out[2 * i] = v[i].real();
        out[2 * i + 1] = v[i].imag();
    }
    return out;
}

}  // namespace

void save_phantom(const PhantomTruth& truth, const std::string& path) {
    const int n = static_cast<int>(truth.images.size());
    const GridShape grid = truth.spec.grid;
    Archive a("phantom_truth");
    a.meta()["grid"] = {grid.h, grid.w};
    a.meta()["num_frames"] = n;
    a.meta()["cardiac_period"] = truth.spec.cardiac_period;
    a.meta()["resp_period"] = truth.spec.resp_period;
    a.meta()["cardiac_amplitude"] = truth.spec.cardiac_amplitude;
    a.meta()["resp_amplitude"] = truth.spec.resp_amplitude;
    a.meta()["noise_sigma"] = truth.spec.noise_sigma;
    a.meta()["seed"] = truth.spec.seed;

    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(n) * grid.pixels() * 2);
    for (const auto& img : truth.images) {
        const auto packed = complex_to_f64(img.data);
        flat.insert(flat.end(), packed.begin(), packed.end());
    }
    a.add_f64("images", flat, {n, grid.h, grid.w, 2});
    a.add_f64("cardiac_phase", truth.cardiac_phase, {n});
    a.add_f64("resp_phase", truth.resp_phase, {n});
    a.save(path);
}

PhantomTruth load_phantom(const std::string& path) {
    Archive a = Archive::load(path);
    if (a.kind() != "phantom_truth") throw std::runtime_error("not a phantom archive: " + path);
    PhantomTruth truth;
    truth.spec.grid = {a.meta().at("grid")[0].get<int>(), a.meta().at("grid")[1].get<int>()};
    truth.spec.num_frames = a.meta().at("num_frames").get<int>();
    truth.spec.cardiac_period = a.meta().at("cardiac_period").get<double>();
    truth.spec.resp_period = a.meta().at("resp_period").get<double>();
    truth.spec.cardiac_amplitude = a.meta().at("cardiac_amplitude").get<double>();
    truth.spec.resp_amplitude = a.meta().at("resp_amplitude").get<double>();
    truth.spec.noise_sigma = a.meta().at("noise_sigma").get<double>();
    truth.spec.seed = a.meta().at("seed").get<std::uint64_t>();

    const auto& flat = a.f64("images");
    const std::int64_t npix = truth.spec.grid.pixels();
    truth.images.resize(static_cast<size_t>(truth.spec.num_frames), ComplexImage(truth.spec.grid));
    for (int i = 0; i < truth.spec.num_frames; i++) {
        auto& img = truth.images[static_cast<size_t>(i)];
        const double* src = flat.data() + static_cast<std::size_t>(i) * npix * 2;
        for (std::int64_t k = 0; k < npix; k++) img.data[k] = cplx(src[2 * k], src[2 * k + 1]);
    }
    truth.cardiac_phase = a.f64("cardiac_phase");
    truth.resp_phase = a.f64("resp_phase");
    return truth;
}

}  // namespace dynrec
