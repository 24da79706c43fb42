#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynrec {

using cplx = std::complex<double>;

/// Thrown for invalid user-supplied configuration or arguments.
/// The CLI maps this to a distinct exit code from runtime failures.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when the training loop encounters a non-finite cost.
struct TrainingDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridShape {
    int h = 0;
    int w = 0;
    bool operator==(const GridShape&) const = default;
    std::int64_t pixels() const { return static_cast<std::int64_t>(h) * w; }
};

/// Complex 2-D frame, row-major (y * w + x).
struct ComplexImage {
    GridShape shape;
    std::vector<cplx> data;

    ComplexImage() = default;
    explicit ComplexImage(GridShape s) : shape(s), data(static_cast<size_t>(s.pixels())) {}

    cplx& at(int y, int x) { return data[static_cast<size_t>(y) * shape.w + x]; }
    const cplx& at(int y, int x) const { return data[static_cast<size_t>(y) * shape.w + x]; }
};

using ImageSeries = std::vector<ComplexImage>;

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

}  // namespace dynrec
