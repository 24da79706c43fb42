#pragma once

#include <cstdint>

namespace dynrec {

/// OpenMP-parallel tensor kernels used by the generator. Layout for all
/// (c, h, w) tensors is channel-major row-major: idx = (c*h + y)*w + x.
/// Convolutions are 3x3 with zero padding ("same" size).
///
/// Parallel loops assign disjoint output elements to threads and keep the
/// per-element accumulation order fixed, so results are bitwise identical
/// for any thread count.
namespace kernels {

/// out[co] = bias[co] + sum_ci k[co][ci] (*) in[ci]
void conv3x3_forward(const double* in, int cin, int h, int w, const double* k,
                     const double* bias, int cout, double* out);

/// gin = K^T backprop of gout; overwrites gin.
void conv3x3_input_grad(const double* gout, int cout, int h, int w, const double* k,
                        int cin, double* gin);

/// Accumulates (+=) weight and bias gradients. gbias may be null.
void conv3x3_weight_grad(const double* in, int cin, const double* gout, int cout,
                         int h, int w, double* gk, double* gbias);

/// Nearest-neighbor 2x upsample: out is (c, 2h, 2w).
void upsample2x(const double* in, int c, int h, int w, double* out);

/// Adjoint of upsample2x: 2x2 block sum. gout is (c, 2h, 2w), gin is (c, h, w); overwrites gin.
void upsample2x_adjoint(const double* gout, int c, int h, int w, double* gin);

// Elementwise activation and its derivatives. kind 0 = tanh, 1 = leaky ReLU (slope 0.1).
void act_forward(int kind, const double* u, std::int64_t n, double* out);
void act_d1(int kind, const double* u, std::int64_t n, double* out);
void act_d2(int kind, const double* u, std::int64_t n, double* out);

/// out = W v + b with W row-major (rows x cols); b may be null.
void dense_forward(const double* w, const double* b, int rows, int cols,
                   const double* v, double* out);

/// gv = W^T gout (overwrites); gw += gout v^T; gb += gout. Any output may be null.
void dense_backward(const double* w, int rows, int cols, const double* v,
                    const double* gout, double* gv, double* gw, double* gb);

}  // namespace kernels

/// Serial reference implementations with independent loop structure; used to
/// validate the parallel kernels and as the baseline in the benchmark tool.
namespace refkernels {

void conv3x3_forward(const double* in, int cin, int h, int w, const double* k,
                     const double* bias, int cout, double* out);
void conv3x3_input_grad(const double* gout, int cout, int h, int w, const double* k,
                        int cin, double* gin);
void conv3x3_weight_grad(const double* in, int cin, const double* gout, int cout,
                         int h, int w, double* gk, double* gbias);
void upsample2x(const double* in, int c, int h, int w, double* out);
void upsample2x_adjoint(const double* gout, int c, int h, int w, double* gin);
void act_forward(int kind, const double* u, std::int64_t n, double* out);
void dense_forward(const double* w, const double* b, int rows, int cols,
                   const double* v, double* out);

}  // namespace refkernels

}  // namespace dynrec
