#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace drysep {

// In-place iterative radix-2 transform. Size must be a power of two.
// The inverse includes the 1/N factor.
void fft(std::vector<std::complex<double>>& data, bool inverse);

bool is_power_of_two(size_t n);
size_t next_power_of_two(size_t n);

// Full linear convolution (length a+b-1) via zero-padded FFT.
std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace drysep
