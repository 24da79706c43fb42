#include "dynrec/kernels.hpp"

#include <cmath>
#include <cstring>

namespace dynrec::kernels {

namespace {
inline std::int64_t idx3(int c, int y, int x, int h, int w) {
    return (static_cast<std::int64_t>(c) * h + y) * w + x;
}
}  // namespace

void conv3x3_forward(const double* in, int cin, int h, int w, const double* k,
                     const double* bias, int cout, double* out) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int co = 0; co < cout; co++) {
        for (int y = 0; y < h; y++) {
            double* orow = out + idx3(co, y, 0, h, w);
            for (int x = 0; x < w; x++) orow[x] = bias ? bias[co] : 0.0;
            for (int ci = 0; ci < cin; ci++) {
                const double* kk = k + (static_cast<std::int64_t>(co) * cin + ci) * 9;
                for (int ky = 0; ky < 3; ky++) {
                    const int yy = y + ky - 1;
                    if (yy < 0 || yy >= h) continue;
                    const double* irow = in + idx3(ci, yy, 0, h, w);
                    for (int kx = 0; kx < 3; kx++) {
                        const double kv = kk[ky * 3 + kx];
                        const int x0 = (kx == 0) ? 1 : 0;
                        const int x1 = (kx == 2) ? w - 1 : w;
                        const int shift = kx - 1;
                        for (int x = x0; x < x1; x++) orow[x] += kv * irow[x + shift];
                    }
                }
            }
        }
    }
}

void conv3x3_input_grad(const double* gout, int cout, int h, int w, const double* k,
                        int cin, double* gin) {
    // gather form: gin[ci][y][x] = sum_{co,ky,kx} k[co][ci][ky][kx] * gout[co][y-ky+1][x-kx+1]
#pragma omp parallel for collapse(2) schedule(static)
    for (int ci = 0; ci < cin; ci++) {
        for (int y = 0; y < h; y++) {
            double* grow = gin + idx3(ci, y, 0, h, w);
            std::memset(grow, 0, sizeof(double) * static_cast<size_t>(w));
            for (int co = 0; co < cout; co++) {
                const double* kk = k + (static_cast<std::int64_t>(co) * cin + ci) * 9;
                for (int ky = 0; ky < 3; ky++) {
                    const int yy = y - ky + 1;
                    if (yy < 0 || yy >= h) continue;
                    const double* grow_out = gout + idx3(co, yy, 0, h, w);
                    for (int kx = 0; kx < 3; kx++) {
                        const double kv = kk[ky * 3 + kx];
                        const int shift = 1 - kx;  // x + shift indexes gout
                        const int x0 = (shift < 0) ? -shift : 0;
                        const int x1 = (shift > 0) ? w - shift : w;
                        for (int x = x0; x < x1; x++) grow[x] += kv * grow_out[x + shift];
                    }
                }
            }
        }
    }
}

void conv3x3_weight_grad(const double* in, int cin, const double* gout, int cout,
                         int h, int w, double* gk, double* gbias) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int co = 0; co < cout; co++) {
        for (int ci = 0; ci < cin; ci++) {
            double acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
            for (int ky = 0; ky < 3; ky++) {
                for (int kx = 0; kx < 3; kx++) {
                    double s = 0.0;
                    for (int y = 0; y < h; y++) {
                        const int yy = y + ky - 1;
                        if (yy < 0 || yy >= h) continue;
                        const double* irow = in + idx3(ci, yy, 0, h, w);
                        const double* grow = gout + idx3(co, y, 0, h, w);
                        const int shift = kx - 1;
                        const int x0 = (kx == 0) ? 1 : 0;
                        const int x1 = (kx == 2) ? w - 1 : w;
                        for (int x = x0; x < x1; x++) s += grow[x] * irow[x + shift];
                    }
                    acc[ky * 3 + kx] = s;
                }
            }
            double* kk = gk + (static_cast<std::int64_t>(co) * cin + ci) * 9;
            for (int i = 0; i < 9; i++) kk[i] += acc[i];
        }
    }
    if (gbias) {
#pragma omp parallel for schedule(static)
        for (int co = 0; co < cout; co++) {
            double s = 0.0;
            const double* g = gout + idx3(co, 0, 0, h, w);
            for (std::int64_t i = 0; i < static_cast<std::int64_t>(h) * w; i++) s += g[i];
            gbias[co] += s;
        }
    }
}

void upsample2x(const double* in, int c, int h, int w, double* out) {
    const int oh = 2 * h, ow = 2 * w;
#pragma omp parallel for collapse(2) schedule(static)
    for (int cc = 0; cc < c; cc++) {
        for (int y = 0; y < oh; y++) {
            const double* irow = in + idx3(cc, y / 2, 0, h, w);
            double* orow = out + idx3(cc, y, 0, oh, ow);
            for (int x = 0; x < ow; x++) orow[x] = irow[x / 2];
        }
    }
}

void upsample2x_adjoint(const double* gout, int c, int h, int w, double* gin) {
    const int oh = 2 * h, ow = 2 * w;
#pragma omp parallel for collapse(2) schedule(static)
    for (int cc = 0; cc < c; cc++) {
        for (int y = 0; y < h; y++) {
            const double* g0 = gout + idx3(cc, 2 * y, 0, oh, ow);
            const double* g1 = gout + idx3(cc, 2 * y + 1, 0, oh, ow);
            double* grow = gin + idx3(cc, y, 0, h, w);
            for (int x = 0; x < w; x++)
                grow[x] = g0[2 * x] + g0[2 * x + 1] + g1[2 * x] + g1[2 * x + 1];
        }
    }
}

void act_forward(int kind, const double* u, std::int64_t n, double* out) {
    if (kind == 0) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; i++) out[i] = std::tanh(u[i]);
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; i++) out[i] = u[i] > 0.0 ? u[i] : 0.1 * u[i];
    }
}

void act_d1(int kind, const double* u, std::int64_t n, double* out) {
    if (kind == 0) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; i++) {
            const double t = std::tanh(u[i]);
            out[i] = 1.0 - t * t;
        }
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; i++) out[i] = u[i] > 0.0 ? 1.0 : 0.1;
    }
}

void act_d2(int kind, const double* u, std::int64_t n, double* out) {
    if (kind == 0) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; i++) {
            const double t = std::tanh(u[i]);
            out[i] = -2.0 * t * (1.0 - t * t);
        }
    } else {
        std::memset(out, 0, sizeof(double) * static_cast<size_t>(n));
    }
}

void dense_forward(const double* w, const double* b, int rows, int cols,
                   const double* v, double* out) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; r++) {
        double s = b ? b[r] : 0.0;
        const double* wr = w + static_cast<std::int64_t>(r) * cols;
        for (int c = 0; c < cols; c++) s += wr[c] * v[c];
        out[r] = s;
    }
}

void dense_backward(const double* w, int rows, int cols, const double* v,
                    const double* gout, double* gv, double* gw, double* gb) {
    if (gv) {
#pragma omp parallel for schedule(static)
        for (int c = 0; c < cols; c++) {
            double s = 0.0;
            for (int r = 0; r < rows; r++) s += w[static_cast<std::int64_t>(r) * cols + c] * gout[r];
            gv[c] = s;
        }
    }
    if (gw) {
#pragma omp parallel for schedule(static)
        for (int r = 0; r < rows; r++) {
            double* gwr = gw + static_cast<std::int64_t>(r) * cols;
            for (int c = 0; c < cols; c++) gwr[c] += gout[r] * v[c];
        }
    }
    if (gb)
        for (int r = 0; r < rows; r++) gb[r] += gout[r];
}

}  // namespace dynrec::kernels
