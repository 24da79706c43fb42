#pragma once

#include "dynrec/common.hpp"

namespace dynrec {

/// Unitary centered 2-D DFT. The frequency grid is fftshifted so DC sits at
/// (h/2, w/2), matching the sampling-mask convention. Both directions scale
/// by 1/sqrt(h*w), so inverse == adjoint and round trips are exact to
/// rounding. Dimensions must be even.
void fft2_centered(const cplx* image, int h, int w, cplx* kspace);
void ifft2_centered(const cplx* kspace, int h, int w, cplx* image);

}  // namespace dynrec
