#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace fraclap {

using cplx = std::complex<double>;

/// In-place d-dimensional DFT on an N^d array stored with axis 0 slowest.
/// Forward: X(k) = sum_n x(n) e^{-2 pi i k.n / N}; inverse includes the 1/N^d factor.
inline void fft_nd(std::vector<cplx>& data, std::size_t N, std::size_t d, bool inverse) {
    Eigen::FFT<double> fft;
    std::vector<cplx> in(N), out(N);
    std::size_t stride = 1;
    for (std::size_t axis = 0; axis < d; ++axis) {
        // axis d-1 has stride 1; axis d-1-axis handled here
        const std::size_t block = stride * N;
        for (std::size_t base = 0; base < data.size(); base += block)
            for (std::size_t off = 0; off < stride; ++off) {
                for (std::size_t i = 0; i < N; ++i) in[i] = data[base + off + i * stride];
                if (inverse) fft.inv(out, in);
                else fft.fwd(out, in);
                for (std::size_t i = 0; i < N; ++i) data[base + off + i * stride] = out[i];
            }
        stride *= N;
    }
}

} // namespace fraclap
