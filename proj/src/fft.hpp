#pragma once

#include <complex>
#include <vector>

namespace ndsense::detail {

/// In-place forward complex DFT (unnormalized, e^{-i...} sign).
void fft_forward(std::vector<std::complex<double>>& data);

/// Real-input forward DFT; returns the n/2+1 non-negative frequency bins.
std::vector<std::complex<double>> rfft(const std::vector<double>& data);

}  // namespace ndsense::detail
