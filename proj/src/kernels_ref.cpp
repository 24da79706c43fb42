#include "dynrec/kernels.hpp"

#include <cmath>
#include <cstring>

// Naive serial baselines. These deliberately use a scatter-style loop order,
// different from the parallel kernels, so the two paths do not share bugs.

namespace dynrec::refkernels {

namespace {
inline std::int64_t idx3(int c, int y, int x, int h, int w) {
    return (static_cast<std::int64_t>(c) * h + y) * w + x;
}
}  // namespace

void conv3x3_forward(const double* in, int cin, int h, int w, const double* k,
                     const double* bias, int cout, double* out) {
    for (int co = 0; co < cout; co++)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(h) * w; i++)
            out[static_cast<std::int64_t>(co) * h * w + i] = bias ? bias[co] : 0.0;
    // scatter every input pixel into the outputs it contributes to
    for (int ci = 0; ci < cin; ci++) {
        for (int y = 0; y < h; y++) {
            for (int x = 0; x < w; x++) {
                const double v = in[idx3(ci, y, x, h, w)];
                for (int ky = 0; ky < 3; ky++) {
                    const int oy = y - ky + 1;
                    if (oy < 0 || oy >= h) continue;
                    for (int kx = 0; kx < 3; kx++) {
                        const int ox = x - kx + 1;
                        if (ox < 0 || ox >= w) continue;
                        for (int co = 0; co < cout; co++)
                            out[idx3(co, oy, ox, h, w)] +=
                                k[(static_cast<std::int64_t>(co) * cin + ci) * 9 + ky * 3 + kx] * v;
                    }
                }
            }
        }
    }
}

void conv3x3_input_grad(const double* gout, int cout, int h, int w, const double* k,
                        int cin, double* gin) {
    std::memset(gin, 0, sizeof(double) * static_cast<size_t>(cin) * h * w);
    for (int co = 0; co < cout; co++) {
        for (int y = 0; y < h; y++) {
            for (int x = 0; x < w; x++) {
                const double g = gout[idx3(co, y, x, h, w)];
                for (int ky = 0; ky < 3; ky++) {
                    const int iy = y + ky - 1;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < 3; kx++) {
                        const int ix = x + kx - 1;
                        if (ix < 0 || ix >= w) continue;
                        for (int ci = 0; ci < cin; ci++)
                            gin[idx3(ci, iy, ix, h, w)] +=
                                k[(static_cast<std::int64_t>(co) * cin + ci) * 9 + ky * 3 + kx] * g;
                    }
                }
            }
        }
    }
}

void conv3x3_weight_grad(const double* in, int cin, const double* gout, int cout,
                         int h, int w, double* gk, double* gbias) {
    for (int y = 0; y < h; y++) {
        for (int x = 0; x < w; x++) {
            for (int ky = 0; ky < 3; ky++) {
                const int iy = y + ky - 1;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < 3; kx++) {
                    const int ix = x + kx - 1;
                    if (ix < 0 || ix >= w) continue;
                    for (int co = 0; co < cout; co++) {
                        const double g = gout[idx3(co, y, x, h, w)];
                        for (int ci = 0; ci < cin; ci++)
                            gk[(static_cast<std::int64_t>(co) * cin + ci) * 9 + ky * 3 + kx] +=
                                g * in[idx3(ci, iy, ix, h, w)];
                    }
                }
            }
        }
    }
    if (gbias)
        for (int co = 0; co < cout; co++)
            for (std::int64_t i = 0; i < static_cast<std::int64_t>(h) * w; i++)
                gbias[co] += gout[static_cast<std::int64_t>(co) * h * w + i];
}

void upsample2x(const double* in, int c, int h, int w, double* out) {
    const int oh = 2 * h, ow = 2 * w;
    for (int cc = 0; cc < c; cc++)
        for (int y = 0; y < h; y++)
            for (int x = 0; x < w; x++) {
                const double v = in[idx3(cc, y, x, h, w)];
                out[idx3(cc, 2 * y, 2 * x, oh, ow)] = v;
                out[idx3(cc, 2 * y, 2 * x + 1, oh, ow)] = v;
                out[idx3(cc, 2 * y + 1, 2 * x, oh, ow)] = v;
                out[idx3(cc, 2 * y + 1, 2 * x + 1, oh, ow)] = v;
            }
}

void upsample2x_adjoint(const double* gout, int c, int h, int w, double* gin) {
    const int oh = 2 * h, ow = 2 * w;
    std::memset(gin, 0, sizeof(double) * static_cast<size_t>(c) * h * w);
    for (int cc = 0; cc < c; cc++)
        for (int y = 0; y < oh; y++)
            for (int x = 0; x < ow; x++)
                gin[idx3(cc, y / 2, x / 2, h, w)] += gout[idx3(cc, y, x, oh, ow)];
}

void act_forward(int kind, const double* u, std::int64_t n, double* out) {
    for (std::int64_t i = 0; i < n; i++)
        out[i] = (kind == 0) ? std::tanh(u[i]) : (u[i] > 0.0 ? u[i] : 0.1 * u[i]);
}

void dense_forward(const double* w, const double* b, int rows, int cols,
                   const double* v, double* out) {
    for (int r = 0; r < rows; r++) out[r] = b ? b[r] : 0.0;
    for (int c = 0; c < cols; c++)
        for (int r = 0; r < rows; r++)
            out[r] += w[static_cast<std::int64_t>(r) * cols + c] * v[c];
}

}  // namespace dynrec::refkernels
