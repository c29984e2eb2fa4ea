#pragma once

#include <complex>
#include <cstddef>

namespace tdotag::fft {

/// Out-of-place forward DFT, X_k = sum_n x_n exp(-2 pi i k n / N).
/// Plans are cached per size; safe to call from several threads at once.
void forward(const std::complex<double>* in, std::complex<double>* out, std::size_t n);

} // namespace tdotag::fft
