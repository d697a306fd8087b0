// OpenMP kernels against the serial reference at the classifier's shapes.
// Arg(k) is the number of beats per instance at 128 Hz.

#include "milrisk/kernels.hpp"
#include "milrisk/model.hpp"
#include "milrisk/rng.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace milrisk;
namespace kn = milrisk::kernels;

struct ConvCase {
    kn::ConvShape shape;
    std::vector<double> in, w, b, out, dout, dw, db, din;

    explicit ConvCase(int beats, bool second_layer) {
        const auto arch = ArchitectureDescriptor::make(Variant::CNN, beats);
        shape = second_layer ? arch.conv2 : arch.conv1;
        Rng rng(7);
        auto fill = [&](std::vector<double>& v, std::size_t n) {
            v.resize(n);
            for (double& x : v) x = rng.uniform(-1.0, 1.0);
        };
        fill(in, shape.in_channels * shape.in_length);
        fill(w, shape.weight_count());
        fill(b, shape.out_channels);
        fill(dout, shape.out_channels * shape.out_length);
        out.assign(dout.size(), 0.0);
        dw.assign(w.size(), 0.0);
        db.assign(b.size(), 0.0);
        din.assign(in.size(), 0.0);
    }
};

template <bool Parallel>
void conv_forward(benchmark::State& state) {
    ConvCase c(static_cast<int>(state.range(0)), false);
    for (auto _ : state) {
        if constexpr (Parallel) {
            kn::conv1d_forward(c.shape, c.in, c.w, c.b, c.out);
        } else {
            kn::reference::conv1d_forward(c.shape, c.in, c.w, c.b, c.out);
        }
        benchmark::DoNotOptimize(c.out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.out.size() * c.shape.kernel));
}

template <bool Parallel>
void conv_backward(benchmark::State& state) {
    ConvCase c(static_cast<int>(state.range(0)), true);
    for (auto _ : state) {
        if constexpr (Parallel) {
            kn::conv1d_backward(c.shape, c.in, c.w, c.dout, c.dw, c.db, c.din);
        } else {
            kn::reference::conv1d_backward(c.shape, c.in, c.w, c.dout, c.dw, c.db, c.din);
        }
        benchmark::DoNotOptimize(c.dw.data());
        benchmark::DoNotOptimize(c.din.data());
    }
}

template <bool Parallel>
void maxpool(benchmark::State& state) {
    const auto arch = ArchitectureDescriptor::make(Variant::CNN, static_cast<int>(state.range(0)));
    const auto& s = arch.pool1;
    Rng rng(3);
    std::vector<double> in(s.channels * s.in_length);
    for (double& x : in) x = rng.uniform(-1.0, 1.0);
    std::vector<double> out(s.channels * s.out_length);
    std::vector<std::uint32_t> arg(out.size());
    for (auto _ : state) {
        if constexpr (Parallel) {
            kn::maxpool_forward(s, in, out, arg);
        } else {
            kn::reference::maxpool_forward(s, in, out, arg);
        }
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void dense(benchmark::State& state) {
    // The FC3 hidden layer: 3 rows over the whole instance.
    const std::size_t rows = 3;
    const std::size_t cols = static_cast<std::size_t>(state.range(0)) * 128;
    Rng rng(5);
    std::vector<double> w(rows * cols), x(cols), b(rows), out(rows);
    for (double& v : w) v = rng.uniform(-1.0, 1.0);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto _ : state) {
        if constexpr (Parallel) {
            kn::dense_forward(rows, cols, w, b, x, out);
        } else {
            kn::reference::dense_forward(rows, cols, w, b, x, out);
        }
        benchmark::DoNotOptimize(out.data());
    }
}

void bench_forward(benchmark::State& state) {
    const auto arch = ArchitectureDescriptor::make(Variant::CNN, static_cast<int>(state.range(0)));
    const ModelParams params = init_params(arch, 1);
    Rng rng(2);
    std::vector<double> x(arch.input_length);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    ForwardCache cache;
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(params, x, cache));
    }
}

}  // namespace

BENCHMARK(conv_forward<true>)->Name("conv_forward/openmp")->DenseRange(1, 4);
BENCHMARK(conv_forward<false>)->Name("conv_forward/reference")->DenseRange(1, 4);
BENCHMARK(conv_backward<true>)->Name("conv_backward/openmp")->DenseRange(1, 4);
BENCHMARK(conv_backward<false>)->Name("conv_backward/reference")->DenseRange(1, 4);
BENCHMARK(maxpool<true>)->Name("maxpool/openmp")->DenseRange(1, 4);
BENCHMARK(maxpool<false>)->Name("maxpool/reference")->DenseRange(1, 4);
BENCHMARK(dense<true>)->Name("dense/openmp")->DenseRange(1, 4);
BENCHMARK(dense<false>)->Name("dense/reference")->DenseRange(1, 4);
BENCHMARK(bench_forward)->Name("cnn_forward")->DenseRange(1, 4);

BENCHMARK_MAIN();
