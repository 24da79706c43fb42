#include "dynrec/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

namespace dynrec {

namespace {

// Plan creation is not thread-safe; execution with the new-array interface is.
// Plans are cached per (h, w, sign) and created with FFTW_ESTIMATE so results
// do not depend on runtime timing measurements.
class PlanCache {
public:
    fftw_plan get(int h, int w, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        const auto key = std::make_tuple(h, w, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        // out-of-place plan: new-array execution must match that arrangement
        std::vector<fftw_complex> din(static_cast<size_t>(h) * w);
        std::vector<fftw_complex> dout(static_cast<size_t>(h) * w);
        fftw_plan p = fftw_plan_dft_2d(h, w, din.data(), dout.data(), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache g_plans;

// out[(y + h/2) % h][(x + w/2) % w] = in[y][x], self-inverse for even dims
void fftshift(const cplx* in, int h, int w, cplx* out) {
    const int hh = h / 2, hw = w / 2;
    for (int y = 0; y < h; y++) {
        const int ys = (y + hh) % h;
        for (int x = 0; x < w; x++) out[static_cast<size_t>(ys) * w + ((x + hw) % w)] =
            in[static_cast<size_t>(y) * w + x];
    }
}

}  // namespace

void fft2_centered(const cplx* image, int h, int w, cplx* kspace) {
    if (h % 2 != 0 || w % 2 != 0) throw ValidationError("fft2_centered: dimensions must be even");
    std::vector<cplx> tmp(static_cast<size_t>(h) * w);
    fftw_plan p = g_plans.get(h, w, FFTW_FORWARD);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(image)),
                     reinterpret_cast<fftw_complex*>(tmp.data()));
    const double scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
    for (auto& v : tmp) v *= scale;
    fftshift(tmp.data(), h, w, kspace);
}

void ifft2_centered(const cplx* kspace, int h, int w, cplx* image) {
    if (h % 2 != 0 || w % 2 != 0) throw ValidationError("ifft2_centered: dimensions must be even");
    std::vector<cplx> tmp(static_cast<size_t>(h) * w);
    fftshift(kspace, h, w, tmp.data());
    fftw_plan p = g_plans.get(h, w, FFTW_BACKWARD);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(tmp.data()),
                     reinterpret_cast<fftw_complex*>(image));
    const double scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(h) * w; i++) image[i] *= scale;
}

}  // namespace dynrec
