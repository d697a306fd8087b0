#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Dense compute kernels for the instance classifiers. Layouts are
// channel-major: activations [channel][position], conv weights
// [out_channel][in_channel][tap], dense weights [out][in]. Backward kernels
// accumulate (+=) into their gradient outputs.
//
// The top-level kernels parallelize with OpenMP over independent output
// elements, so every element is produced by one thread in a fixed order and
// results do not depend on the thread count. `reference::` holds the plain
// serial versions the parallel ones are tested and benchmarked against.

namespace milrisk::kernels {

struct ConvShape {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t in_length = 0;
    std::size_t out_length = 0;
    std::size_t pad_left = 0;

    std::size_t weight_count() const { return out_channels * in_channels * kernel; }
};

/// "Same" padding: output length ceil(in/stride), kernel-1 zeros in total,
/// floor of half on the left.
ConvShape same_conv(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
                    std::size_t in_length);

struct PoolShape {
    std::size_t channels = 1;
    std::size_t width = 1;
    std::size_t stride = 1;
    std::size_t in_length = 0;
    std::size_t out_length = 0;
};

/// Valid pooling: output length (in - width) / stride + 1, or 0 if in < width.
PoolShape valid_pool(std::size_t channels, std::size_t width, std::size_t stride, std::size_t in_length);

void conv1d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> w,
                    std::span<const double> b, std::span<double> out);

/// `din` may be empty when the input gradient is not needed.
void conv1d_backward(const ConvShape& s, std::span<const double> in, std::span<const double> w,
                     std::span<const double> dout, std::span<double> dw, std::span<double> db,
                     std::span<double> din);

/// Max over each window; `argmax` receives the input position (first maximum).
void maxpool_forward(const PoolShape& s, std::span<const double> in, std::span<double> out,
                     std::span<std::uint32_t> argmax);

void maxpool_backward(const PoolShape& s, std::span<const std::uint32_t> argmax, std::span<const double> dout,
                      std::span<double> din);

void dense_forward(std::size_t rows, std::size_t cols, std::span<const double> w, std::span<const double> b,
                   std::span<const double> x, std::span<double> out);

/// `dx` may be empty.
void dense_backward(std::size_t rows, std::size_t cols, std::span<const double> w, std::span<const double> x,
                    std::span<const double> dout, std::span<double> dw, std::span<double> db,
                    std::span<double> dx);

namespace reference {

void conv1d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> w,
                    std::span<const double> b, std::span<double> out);
void conv1d_backward(const ConvShape& s, std::span<const double> in, std::span<const double> w,
                     std::span<const double> dout, std::span<double> dw, std::span<double> db,
                     std::span<double> din);
void maxpool_forward(const PoolShape& s, std::span<const double> in, std::span<double> out,
                     std::span<std::uint32_t> argmax);
void maxpool_backward(const PoolShape& s, std::span<const std::uint32_t> argmax, std::span<const double> dout,
                      std::span<double> din);
void dense_forward(std::size_t rows, std::size_t cols, std::span<const double> w, std::span<const double> b,
                   std::span<const double> x, std::span<double> out);
void dense_backward(std::size_t rows, std::size_t cols, std::span<const double> w, std::span<const double> x,
                    std::span<const double> dout, std::span<double> dw, std::span<double> db,
                    std::span<double> dx);

}  // namespace reference

}  // namespace milrisk::kernels
