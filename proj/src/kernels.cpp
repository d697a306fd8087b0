#include "milrisk/kernels.hpp"

#include <algorithm>

namespace milrisk::kernels {

namespace {

// Below this many multiply-adds a kernel stays on the calling thread. Inside
// the per-instance parallel loops of training this is always the case.
constexpr std::size_t kParallelWork = 1u << 18;

// Taps j with 0 <= o*stride + j - pad_left < in_length.
inline void tap_range(const ConvShape& s, std::size_t o, std::size_t& lo, std::size_t& hi) {
    const std::ptrdiff_t origin = static_cast<std::ptrdiff_t>(o * s.stride) - static_cast<std::ptrdiff_t>(s.pad_left);
    lo = origin < 0 ? static_cast<std::size_t>(-origin) : 0;
    const std::ptrdiff_t room = static_cast<std::ptrdiff_t>(s.in_length) - origin;
    hi = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(room, 0, static_cast<std::ptrdiff_t>(s.kernel)));
}

}  // namespace

ConvShape same_conv(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
                    std::size_t in_length) {
    ConvShape s;
    s.in_channels = in_channels;
    s.out_channels = out_channels;
    s.kernel = kernel;
    s.stride = stride;
    s.in_length = in_length;
    s.out_length = (in_length + stride - 1) / stride;
    s.pad_left = (kernel - 1) / 2;
    return s;
}

PoolShape valid_pool(std::size_t channels, std::size_t width, std::size_t stride, std::size_t in_length) {
    PoolShape s{channels, width, stride, in_length, 0};
    s.out_length = in_length < width ? 0 : (in_length - width) / stride + 1;
    return s;
}

void conv1d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> w,
                    std::span<const double> b, std::span<double> out) {
    const std::size_t total = s.out_channels * s.out_length;
    const bool parallel = total * s.in_channels * s.kernel >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
    for (std::size_t idx = 0; idx < total; ++idx) {
        const std::size_t f = idx / s.out_length;
        const std::size_t o = idx % s.out_length;
        std::size_t lo = 0;
        std::size_t hi = 0;
        tap_range(s, o, lo, hi);
        const std::size_t origin = o * s.stride + lo - s.pad_left;
        double acc = b[f];
        for (std::size_t c = 0; c < s.in_channels; ++c) {
            const double* wp = w.data() + (f * s.in_channels + c) * s.kernel;
            const double* xp = in.data() + c * s.in_length + origin;
            for (std::size_t j = lo; j < hi; ++j) {
                acc += wp[j] * xp[j - lo];
            }
        }
        out[idx] = acc;
    }
}

void conv1d_backward(const ConvShape& s, std::span<const double> in, std::span<const double> w,
                     std::span<const double> dout, std::span<double> dw, std::span<double> db,
                     std::span<double> din) {
    const bool parallel = s.out_channels * s.out_length * s.in_channels * s.kernel >= kParallelWork;

    for (std::size_t f = 0; f < s.out_channels; ++f) {
        double acc = 0.0;
        for (std::size_t o = 0; o < s.out_length; ++o) {
            acc += dout[f * s.out_length + o];
        }
        db[f] += acc;
    }

    // One weight per iteration: dw[f][c][j] = sum_o dout[f][o] * in[c][o*stride + j - pad].
    const std::size_t weights = s.weight_count();
#pragma omp parallel for schedule(static) if (parallel)
    for (std::size_t idx = 0; idx < weights; ++idx) {
        const std::size_t j = idx % s.kernel;
        const std::size_t c = (idx / s.kernel) % s.in_channels;
        const std::size_t f = idx / (s.kernel * s.in_channels);
        const double* g = dout.data() + f * s.out_length;
        const double* x = in.data() + c * s.in_length;
        double acc = 0.0;
        for (std::size_t o = 0; o < s.out_length; ++o) {
            const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(o * s.stride + j) - static_cast<std::ptrdiff_t>(s.pad_left);
            if (i >= 0 && i < static_cast<std::ptrdiff_t>(s.in_length)) {
                acc += g[o] * x[i];
            }
        }
        dw[idx] += acc;
    }

    if (din.empty()) {
        return;
    }
    // One input position per iteration: gather over the outputs that read it.
    const std::size_t inputs = s.in_channels * s.in_length;
#pragma omp parallel for schedule(static) if (parallel)
    for (std::size_t idx = 0; idx < inputs; ++idx) {
        const std::size_t c = idx / s.in_length;
        const std::size_t i = idx % s.in_length;
        const std::size_t shifted = i + s.pad_left;  // = o*stride + j
        const std::size_t o_hi = std::min(s.out_length - 1, shifted / s.stride);
        const std::size_t o_lo = shifted + 1 > s.kernel ? (shifted + 1 - s.kernel + s.stride - 1) / s.stride : 0;
        double acc = 0.0;
        for (std::size_t f = 0; f < s.out_channels; ++f) {
            const double* wp = w.data() + (f * s.in_channels + c) * s.kernel;
            const double* g = dout.data() + f * s.out_length;
            for (std::size_t o = o_lo; o <= o_hi && o_lo <= o_hi; ++o) {
                acc += wp[shifted - o * s.stride] * g[o];
            }
        }
        din[idx] += acc;
    }
}

void maxpool_forward(const PoolShape& s, std::span<const double> in, std::span<double> out,
                     std::span<std::uint32_t> argmax) {
    const std::size_t total = s.channels * s.out_length;
#pragma omp parallel for schedule(static) if (total * s.width >= kParallelWork)
    for (std::size_t idx = 0; idx < total; ++idx) {
        const std::size_t c = idx / s.out_length;
        const std::size_t o = idx % s.out_length;
        const double* x = in.data() + c * s.in_length;
        std::size_t best = o * s.stride;
        for (std::size_t t = 1; t < s.width; ++t) {
            if (x[o * s.stride + t] > x[best]) {
                best = o * s.stride + t;
            }
        }
        out[idx] = x[best];
        argmax[idx] = static_cast<std::uint32_t>(best);
    }
}

void maxpool_backward(const PoolShape& s, std::span<const std::uint32_t> argmax, std::span<const double> dout,
                      std::span<double> din) {
    // Scatter with collisions across overlapping windows; parallel over channels only.
#pragma omp parallel for schedule(static) if (s.channels * s.out_length >= kParallelWork)
    for (std::size_t c = 0; c < s.channels; ++c) {
        for (std::size_t o = 0; o < s.out_length; ++o) {
            const std::size_t idx = c * s.out_length + o;
            din[c * s.in_length + argmax[idx]] += dout[idx];
        }
    }
}

void dense_forward(std::size_t rows, std::size_t cols, std::span<const double> w, std::span<const double> b,
                   std::span<const double> x, std::span<double> out) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w.data() + r * cols;
        double acc = 0.0;
        for (std::size_t i = 0; i < cols; ++i) {
            acc += wr[i] * x[i];
        }
        out[r] = acc + b[r];
    }
}

void dense_backward(std::size_t rows, std::size_t cols, std::span<const double> w, std::span<const double> x,
                    std::span<const double> dout, std::span<double> dw, std::span<double> db,
                    std::span<double> dx) {
    const bool parallel = rows * cols >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
    for (std::size_t r = 0; r < rows; ++r) {
        const double g = dout[r];
        double* dwr = dw.data() + r * cols;
        for (std::size_t i = 0; i < cols; ++i) {
            dwr[i] += g * x[i];
        }
        db[r] += g;
    }
    if (dx.empty()) {
        return;
    }
#pragma omp parallel for schedule(static) if (parallel)
    for (std::size_t i = 0; i < cols; ++i) {
        double acc = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            acc += w[r * cols + i] * dout[r];
        }
        dx[i] += acc;
    }
}

}  // namespace milrisk::kernels
