#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace vibench {

/// In-place forward DFT of arbitrary length. Radix-2 when the size is a
/// power of two, Bluestein otherwise. No scaling on the forward transform.
void fft(std::vector<std::complex<double>>& x);

/// Inverse DFT with 1/N scaling.
void ifft(std::vector<std::complex<double>>& x);

/// DFT of a real signal, returning bins 0..floor(N/2) inclusive.
std::vector<std::complex<double>> rfft_one_sided(const std::vector<double>& x);

} // namespace vibench
