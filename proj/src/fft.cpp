#include "drysep/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace drysep {

bool is_power_of_two(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

size_t next_power_of_two(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft(std::vector<std::complex<double>>& data, bool inverse) {
  const size_t n = data.size();
  if (!is_power_of_two(n)) throw std::invalid_argument("fft: size must be a power of two");
  if (n == 1) return;

  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = data[i + k];
        const std::complex<double> v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : data) v *= scale;
  }
}

std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  const size_t out_len = a.size() + b.size() - 1;
  const size_t n = next_power_of_two(out_len);

  // pack both real sequences into one complex transform
  std::vector<std::complex<double>> buf(n, {0.0, 0.0});
  for (size_t i = 0; i < a.size(); ++i) buf[i].real(a[i]);
  for (size_t i = 0; i < b.size(); ++i) buf[i].imag(b[i]);
  fft(buf, false);

  std::vector<std::complex<double>> prod(n);
  for (size_t k = 0; k < n; ++k) {
    const size_t kc = (n - k) & (n - 1);
    const std::complex<double> x = buf[k];
    const std::complex<double> xc = std::conj(buf[kc]);
    const std::complex<double> fa = 0.5 * (x + xc);
    const std::complex<double> fb = std::complex<double>(0.0, -0.5) * (x - xc);
    prod[k] = fa * fb;
  }
  fft(prod, true);

  std::vector<double> out(out_len);
  for (size_t i = 0; i < out_len; ++i) out[i] = prod[i].real();
  return out;
}

}  // namespace drysep
