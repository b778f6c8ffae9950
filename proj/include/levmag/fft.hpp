#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "levmag/constants.hpp"
#include "levmag/errors.hpp"

namespace levmag::fft {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 transform. sign = -1 forward, +1 inverse
/// (inverse is unnormalized).
inline void radix2(std::vector<cplx>& a, int sign) {
    const std::size_t n = a.size();
    if (!is_pow2(n)) throw invalid_input("fft::radix2: length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * constants::pi / static_cast<double>(len);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

/// Forward DFT of arbitrary length (Bluestein chirp-z for non powers of two).
inline std::vector<cplx> dft(const std::vector<cplx>& input) {
    const std::size_t n = input.size();
    if (n == 0) return {};
    if (is_pow2(n)) {
        std::vector<cplx> a = input;
        radix2(a, -1);
        return a;
    }
    // Bluestein: x_k * chirp convolved with conjugate chirp.
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    std::vector<cplx> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2/2 mod n kept exact via unsigned arithmetic on 2n
        const double ang = constants::pi * static_cast<double>((k * k) % (2 * n)) /
                           static_cast<double>(n);
        chirp[k] = cplx(std::cos(ang), -std::sin(ang));
    }
    std::vector<cplx> a(m, cplx(0, 0)), b(m, cplx(0, 0));
    for (std::size_t k = 0; k < n; ++k) a[k] = input[k] * chirp[k];
    b[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
    radix2(a, -1);
    radix2(b, -1);
    for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
    radix2(a, +1);
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * chirp[k] / static_cast<double>(m);
    return out;
}

/// Forward DFT of a real sequence.
inline std::vector<cplx> dft_real(const std::vector<double>& x) {
    std::vector<cplx> a(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = cplx(x[i], 0.0);
    return dft(a);
}

} // namespace levmag::fft
