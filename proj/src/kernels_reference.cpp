#include "milrisk/kernels.hpp"

namespace milrisk::kernels::reference {

void conv1d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> w,
                    std::span<const double> b, std::span<double> out) {
    for (std::size_t f = 0; f < s.out_channels; ++f) {
        for (std::size_t o = 0; o < s.out_length; ++o) {
            double acc = b[f];
            for (std::size_t c = 0; c < s.in_channels; ++c) {
                for (std::size_t j = 0; j < s.kernel; ++j) {
                    const long i = static_cast<long>(o * s.stride + j) - static_cast<long>(s.pad_left);
                    if (i < 0 || i >= static_cast<long>(s.in_length)) {
                        continue;
                    }
                    acc += w[(f * s.in_channels + c) * s.kernel + j] * in[c * s.in_length + static_cast<std::size_t>(i)];
                }
            }
            out[f * s.out_length + o] = acc;
        }
    }
}

void conv1d_backward(const ConvShape& s, std::span<const double> in, std::span<const double> w,
                     std::span<const double> dout, std::span<double> dw, std::span<double> db,
                     std::span<double> din) {
    for (std::size_t f = 0; f < s.out_channels; ++f) {
        for (std::size_t o = 0; o < s.out_length; ++o) {
            const double g = dout[f * s.out_length + o];
            db[f] += g;
            for (std::size_t c = 0; c < s.in_channels; ++c) {
                for (std::size_t j = 0; j < s.kernel; ++j) {
                    const long i = static_cast<long>(o * s.stride + j) - static_cast<long>(s.pad_left);
                    if (i < 0 || i >= static_cast<long>(s.in_length)) {
                        continue;
                    }
                    const std::size_t wi = (f * s.in_channels + c) * s.kernel + j;
                    const std::size_t xi = c * s.in_length + static_cast<std::size_t>(i);
                    dw[wi] += g * in[xi];
                    if (!din.empty()) {
                        din[xi] += g * w[wi];
                    }
                }
            }
        }
    }
}

void maxpool_forward(const PoolShape& s, std::span<const double> in, std::span<double> out,
                     std::span<std::uint32_t> argmax) {
    for (std::size_t c = 0; c < s.channels; ++c) {
        for (std::size_t o = 0; o < s.out_length; ++o) {
            std::size_t best = o * s.stride;
            for (std::size_t t = 0; t < s.width; ++t) {
                const std::size_t i = o * s.stride + t;
                if (in[c * s.in_length + i] > in[c * s.in_length + best]) {
                    best = i;
                }
            }
            out[c * s.out_length + o] = in[c * s.in_length + best];
            argmax[c * s.out_length + o] = static_cast<std::uint32_t>(best);
        }
    }
}

void maxpool_backward(const PoolShape& s, std::span<const std::uint32_t> argmax, std::span<const double> dout,
                      std::span<double> din) {
    for (std::size_t idx = 0; idx < s.channels * s.out_length; ++idx) {
        din[(idx / s.out_length) * s.in_length + argmax[idx]] += dout[idx];
    }
}

void dense_forward(std::size_t rows, std::size_t cols, std::span<const double> w, std::span<const double> b,
                   std::span<const double> x, std::span<double> out) {
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = b[r];
        for (std::size_t i = 0; i < cols; ++i) {
            acc += w[r * cols + i] * x[i];
        }
        out[r] = acc;
    }
}

void dense_backward(std::size_t rows, std::size_t cols, std::span<const double> w, std::span<const double> x,
                    std::span<const double> dout, std::span<double> dw, std::span<double> db,
                    std::span<double> dx) {
    for (std::size_t r = 0; r < rows; ++r) {
        db[r] += dout[r];
        for (std::size_t i = 0; i < cols; ++i) {
            dw[r * cols + i] += dout[r] * x[i];
            if (!dx.empty()) {
                dx[i] += w[r * cols + i] * dout[r];
            }
        }
    }
}

}  // namespace milrisk::kernels::reference
