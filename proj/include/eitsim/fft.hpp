#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace eit {

// Unnormalized DFT. Forward uses e^{-2 pi i jk/N}, inverse e^{+2 pi i jk/N}.
// Plans are cached per thread and per size; results do not depend on which
// thread runs the transform.
void fft_forward(std::vector<std::complex<double>>& data);
void fft_inverse(std::vector<std::complex<double>>& data);

std::size_t next_pow2(std::size_t n);

}  // namespace eit
