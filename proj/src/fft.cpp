#include "slicecast/fft.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <utility>

namespace slicecast::fft {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place radix-2, |sign| = direction (-1 forward, +1 inverse, unscaled).
void fft_pow2(std::vector<cplx>& x, int sign) {
    const std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * kTwoPi / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const cplx u = x[i + j];
                const cplx v = x[i + j + len / 2] * w;
                x[i + j] = u + v;
                x[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

struct BluesteinPlan {
    std::size_t n = 0;
    std::size_t m = 0;                  // padded power-of-two length
    std::vector<cplx> chirp;            // w[k] = exp(-i*pi*k^2/n)
    std::vector<cplx> chirp_fft;        // FFT of the zero-padded conjugate chirp
};

const BluesteinPlan& bluestein_plan(std::size_t n) {
    thread_local std::unordered_map<std::size_t, BluesteinPlan> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    BluesteinPlan plan;
    plan.n = n;
    plan.m = next_pow2(2 * n - 1);
    plan.chirp.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument small and exact.
        const std::size_t k2 = (k * k) % (2 * n);
        const double ang = -kTwoPi * 0.5 * static_cast<double>(k2) / static_cast<double>(n);
        plan.chirp[k] = cplx(std::cos(ang), std::sin(ang));
    }
    std::vector<cplx> b(plan.m, cplx(0.0, 0.0));
    b[0] = std::conj(plan.chirp[0]);
    for (std::size_t k = 1; k < n; ++k) {
        b[k] = std::conj(plan.chirp[k]);
        b[plan.m - k] = std::conj(plan.chirp[k]);
    }
    fft_pow2(b, -1);
    plan.chirp_fft = std::move(b);
    return cache.emplace(n, std::move(plan)).first->second;
}

// Arbitrary-length forward DFT via the chirp-z transform.
std::vector<cplx> bluestein(const std::vector<cplx>& x) {
    const std::size_t n = x.size();
    const BluesteinPlan& plan = bluestein_plan(n);

    std::vector<cplx> a(plan.m, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * plan.chirp[k];
    fft_pow2(a, -1);
    for (std::size_t k = 0; k < plan.m; ++k) a[k] *= plan.chirp_fft[k];
    fft_pow2(a, 1);
    const double inv_m = 1.0 / static_cast<double>(plan.m);
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * inv_m * plan.chirp[k];
    return out;
}

}  // namespace

std::vector<cplx> dft(std::vector<cplx> x) {
    if (x.size() < 2) throw std::invalid_argument("fft: length must be >= 2");
    if (is_pow2(x.size())) {
        fft_pow2(x, -1);
        return x;
    }
    return bluestein(x);
}

std::vector<cplx> idft(std::vector<cplx> x) {
    if (x.size() < 2) throw std::invalid_argument("fft: length must be >= 2");
    const std::size_t n = x.size();
    for (auto& v : x) v = std::conj(v);
    x = dft(std::move(x));
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& v : x) v = std::conj(v) * inv_n;
    return x;
}

std::vector<cplx> rfft(const std::vector<double>& x) {
    if (x.size() < 2) throw std::invalid_argument("rfft: length must be >= 2");
    std::vector<cplx> cx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) cx[i] = cplx(x[i], 0.0);
    cx = dft(std::move(cx));
    cx.resize(x.size() / 2 + 1);
    return cx;
}

std::vector<double> irfft(const std::vector<cplx>& bins, std::size_t n) {
    if (n < 2) throw std::invalid_argument("irfft: length must be >= 2");
    if (bins.size() != n / 2 + 1) throw std::invalid_argument("irfft: bin count does not match length");
    std::vector<cplx> full(n);
    for (std::size_t i = 0; i <= n / 2; ++i) full[i] = bins[i];
    for (std::size_t i = n / 2 + 1; i < n; ++i) full[i] = std::conj(bins[n - i]);
    full = idft(std::move(full));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = full[i].real();
    return out;
}

std::vector<double> autocorrelation(const std::vector<double>& x) {
    const std::size_t n = x.size();
    auto bins = rfft(x);
    for (auto& b : bins) b = cplx(std::norm(b), 0.0);
    auto r = irfft(bins, n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& v : r) v *= inv_n;
    return r;
}

std::vector<double> cross_correlation(const std::vector<double>& q, const std::vector<double>& k) {
    if (q.size() != k.size()) throw std::invalid_argument("cross_correlation: length mismatch");
    const std::size_t n = q.size();
    auto qb = rfft(q);
    auto kb = rfft(k);
    for (std::size_t i = 0; i < qb.size(); ++i) qb[i] = std::conj(qb[i]) * kb[i];
    auto r = irfft(qb, n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& v : r) v *= inv_n;
    return r;
}

}  // namespace slicecast::fft
