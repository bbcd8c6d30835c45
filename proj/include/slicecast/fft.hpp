#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace slicecast::fft {

using cplx = std::complex<double>;

// Forward/inverse DFT at the exact input length. Power-of-two sizes run
// radix-2 Cooley-Tukey; anything else goes through Bluestein's chirp-z, so
// circular identities hold at the native length without padding artifacts.
std::vector<cplx> dft(std::vector<cplx> x);
std::vector<cplx> idft(std::vector<cplx> x);

// Real transform: returns n/2+1 bins. irfft reconstructs the remaining bins
// by conjugate symmetry. Requires n >= 2.
std::vector<cplx> rfft(const std::vector<double>& x);
std::vector<double> irfft(const std::vector<cplx>& bins, std::size_t n);

// Circular autocorrelation R[tau] = (1/L) * sum_t x[t] * x[(t+tau) mod L],
// computed as the inverse transform of the power spectrum.
std::vector<double> autocorrelation(const std::vector<double>& x);

// Circular cross-correlation R[tau] = (1/L) * sum_t q[t] * k[(t+tau) mod L].
std::vector<double> cross_correlation(const std::vector<double>& q, const std::vector<double>& k);

}  // namespace slicecast::fft
