#include "milrisk/model.hpp"
#include "milrisk/error.hpp"
#include "milrisk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace milrisk {

namespace {

void require_length(const ModelParams& params, std::size_t length) {
    if (length != params.arch.input_length) {
        throw Error(ErrorKind::ShapeMismatch, "instance length " + std::to_string(length) + " but model expects " +
                                                  std::to_string(params.arch.input_length));
    }
}

void require_variant(const ModelParams& params, bool ok, const char* op) {
    if (!ok) {
        throw Error(ErrorKind::ShapeMismatch,
                    std::string(op) + " called with a " + std::string(to_string(params.arch.variant)) + " model");
    }
}

double head_logit(const Layer& head, std::span<const double> features) {
    double z = 0.0;
    kernels::dense_forward(1, features.size(), head.weights, head.bias, features, std::span<double>(&z, 1));
    return z;
}

}  // namespace

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::CNN: return "CNN";
        case Variant::LR: return "LR";
        case Variant::FC2: return "FC2";
        case Variant::FC3: return "FC3";
        case Variant::SET: return "SET";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    for (Variant v : {Variant::CNN, Variant::LR, Variant::FC2, Variant::FC3, Variant::SET}) {
        if (name == to_string(v)) {
            return v;
        }
    }
    throw Error(ErrorKind::Config, "unknown variant '" + std::string(name) + "' (CNN, LR, FC2, FC3, SET)");
}

ArchitectureDescriptor ArchitectureDescriptor::make(Variant variant, int beats, int sample_rate_hz) {
    if (beats < kMinBeatsPerInstance || beats > kMaxBeatsPerInstance) {
        throw Error(ErrorKind::Config, "beats per instance must be in [1, 4], got " + std::to_string(beats));
    }
    if (sample_rate_hz < 8) {
        throw Error(ErrorKind::Config, "sample rate too low for the classifier");
    }
    ArchitectureDescriptor a;
    a.variant = variant;
    a.beats = beats;
    a.sample_rate_hz = sample_rate_hz;
    a.input_length = static_cast<std::size_t>(beats) * window_length(sample_rate_hz);
    const auto one_second = static_cast<std::size_t>(sample_rate_hz);
    switch (variant) {
        case Variant::CNN:
        case Variant::SET:
            a.conv1 = kernels::same_conv(1, kConvFilters, one_second, kConvStride, a.input_length);
            a.pool1 = kernels::valid_pool(kConvFilters, kPoolWidth, kPoolStride, a.conv1.out_length);
            a.conv2 = kernels::same_conv(kConvFilters, kConvFilters, one_second / 2, kConvStride, a.pool1.out_length);
            a.pool2 = kernels::valid_pool(kConvFilters, kPoolWidth, kPoolStride, a.conv2.out_length);
            a.head_inputs = a.embedding_length();
            break;
        case Variant::LR:
            a.head_inputs = a.input_length;
            break;
        case Variant::FC2:
        case Variant::FC3:
            a.hidden = variant == Variant::FC2 ? 2 : 3;
            a.head_inputs = a.hidden;
            break;
    }
    a.validate();
    return a;
}

std::vector<LayerShape> ArchitectureDescriptor::layer_shapes() const {
    auto u32 = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
    std::vector<LayerShape> shapes;
    if (has_trunk()) {
        shapes.push_back({{u32(conv1.out_channels), u32(conv1.in_channels), u32(conv1.kernel)}, u32(conv1.out_channels)});
        shapes.push_back({{u32(conv2.out_channels), u32(conv2.in_channels), u32(conv2.kernel)}, u32(conv2.out_channels)});
    }
    if (hidden > 0) {
        shapes.push_back({{u32(hidden), u32(input_length)}, u32(hidden)});
    }
    shapes.push_back({{1, u32(head_inputs)}, 1});
    return shapes;
}

void ArchitectureDescriptor::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::ShapeMismatch, what); };
    if (input_length == 0) {
        fail("empty input");
    }
    if (has_trunk()) {
        if (conv1.in_length != input_length || conv1.in_channels != 1) fail("conv1 input mismatch");
        if (pool1.in_length != conv1.out_length || pool1.channels != conv1.out_channels) fail("pool1 input mismatch");
        if (conv2.in_length != pool1.out_length || conv2.in_channels != pool1.channels) fail("conv2 input mismatch");
        if (pool2.in_length != conv2.out_length || pool2.channels != conv2.out_channels) fail("pool2 input mismatch");
        if (pool2.out_length == 0) fail("trunk output is empty");
        if (head_inputs != embedding_length()) fail("head input mismatch");
    } else if (hidden > 0) {
        if (head_inputs != hidden) fail("head input mismatch");
    } else if (head_inputs != input_length) {
        fail("head input mismatch");
    }
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) {
        n += l.weights.size() + l.bias.size();
    }
    return n;
}

bool ModelParams::all_finite() const {
    bool ok = true;
    for_each([&](double v) { ok = ok && std::isfinite(v); });
    return ok;
}

ModelParams ModelParams::zeros_like() const {
    ModelParams z = *this;
    z.set_zero();
    return z;
}

void ModelParams::set_zero() {
    for_each([](double& v) { v = 0.0; });
}

void ModelParams::add(const ModelParams& other) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& a = layers[l];
        const auto& b = other.layers[l];
        for (std::size_t i = 0; i < a.weights.size(); ++i) a.weights[i] += b.weights[i];
        for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += b.bias[i];
    }
}

void ModelParams::scale(double factor) {
    for_each([factor](double& v) { v *= factor; });
}

ModelParams init_params(const ArchitectureDescriptor& arch, std::uint64_t seed) {
    arch.validate();
    ModelParams p;
    p.arch = arch;
    p.seed = seed;
    Rng rng(seed);
    for (const auto& shape : arch.layer_shapes()) {
        Layer layer;
        layer.weight_shape = shape.weight_shape;
        const std::size_t count = std::accumulate(shape.weight_shape.begin(), shape.weight_shape.end(), std::size_t{1},
                                                  std::multiplies<>());
        // Conv [out][in][taps] and dense [out][in]: fan_in = in*taps, fan_out = out*taps.
        const std::size_t taps = shape.weight_shape.size() == 3 ? shape.weight_shape[2] : 1;
        const double fan_in = static_cast<double>(shape.weight_shape[1] * taps);
        const double fan_out = static_cast<double>(shape.weight_shape[0] * taps);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        layer.weights.resize(count);
        for (double& w : layer.weights) {
            w = rng.uniform(-limit, limit);
        }
        layer.bias.assign(shape.bias_length, 0.0);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

double sigmoid(double logit) {
    const double z = std::clamp(logit, -kLogitClamp, kLogitClamp);
    // 1/(1+e^-z) rounds to 1.0 for z above ~36.7; keep the result below 1.
    return std::min(1.0 / (1.0 + std::exp(-z)), std::nextafter(1.0, 0.0));
}

void trunk_forward(const ModelParams& params, std::span<const double> x, ForwardCache& cache) {
    const auto& a = params.arch;
    require_variant(params, a.has_trunk(), "trunk_forward");
    require_length(params, x.size());
    cache.input = x;
    cache.conv1.resize(a.conv1.out_channels * a.conv1.out_length);
    cache.pool1.resize(a.pool1.channels * a.pool1.out_length);
    cache.arg1.resize(cache.pool1.size());
    cache.conv2.resize(a.conv2.out_channels * a.conv2.out_length);
    cache.pool2.resize(a.pool2.channels * a.pool2.out_length);
    cache.arg2.resize(cache.pool2.size());

    const Layer& c1 = params.layers[0];
    const Layer& c2 = params.layers[1];
    kernels::conv1d_forward(a.conv1, x, c1.weights, c1.bias, cache.conv1);
    kernels::maxpool_forward(a.pool1, cache.conv1, cache.pool1, cache.arg1);
    kernels::conv1d_forward(a.conv2, cache.pool1, c2.weights, c2.bias, cache.conv2);
    kernels::maxpool_forward(a.pool2, cache.conv2, cache.pool2, cache.arg2);
}

double forward(const ModelParams& params, std::span<const double> x, ForwardCache& cache) {
    const auto& a = params.arch;
    require_variant(params, is_instance_level(a.variant), "forward");
    require_length(params, x.size());
    cache.input = x;
    switch (a.variant) {
        case Variant::CNN:
            trunk_forward(params, x, cache);
            cache.logit = head_logit(params.layers[2], cache.pool2);
            break;
        case Variant::LR:
            cache.logit = head_logit(params.layers[0], x);
            break;
        case Variant::FC2:
        case Variant::FC3: {
            const Layer& h = params.layers[0];
            cache.hidden.resize(a.hidden);
            kernels::dense_forward(a.hidden, a.input_length, h.weights, h.bias, x, cache.hidden);
            for (double& v : cache.hidden) {
                v = std::tanh(v);
            }
            cache.logit = head_logit(params.layers[1], cache.hidden);
            break;
        }
        case Variant::SET:
            break;
    }
    cache.prob = sigmoid(cache.logit);
    return cache.prob;
}

double forward(const ModelParams& params, std::span<const double> x) {
    ForwardCache cache;
    return forward(params, x, cache);
}

double cnn_forward(const ModelParams& params, std::span<const double> x, ForwardCache& cache) {
    require_variant(params, params.arch.variant == Variant::CNN, "cnn_forward");
    return forward(params, x, cache);
}

double lr_forward(const ModelParams& params, std::span<const double> x) {
    require_variant(params, params.arch.variant == Variant::LR, "lr_forward");
    return forward(params, x);
}

double fc_forward(const ModelParams& params, std::span<const double> x) {
    require_variant(params, params.arch.variant == Variant::FC2 || params.arch.variant == Variant::FC3, "fc_forward");
    return forward(params, x);
}

double set_forward(const ModelParams& params, std::span<const Instance> instances, SetCache& cache) {
    require_variant(params, params.arch.variant == Variant::SET, "set_forward");
    if (instances.empty()) {
        throw Error(ErrorKind::EmptyBag, "set_forward on an empty bag");
    }
    const std::size_t n = instances.size();
    cache.items.resize(n);
    cache.order.resize(n);
    std::iota(cache.order.begin(), cache.order.end(), std::size_t{0});
    std::stable_sort(cache.order.begin(), cache.order.end(), [&](std::size_t l, std::size_t r) {
        return instances[l].start_beat < instances[r].start_beat;
    });
    for (std::size_t i = 0; i < n; ++i) {
        require_length(params, instances[i].values.size());
    }
#pragma omp parallel for schedule(static) if (n >= 8)
    for (std::size_t i = 0; i < n; ++i) {
        trunk_forward(params, instances[i].values, cache.items[i]);
    }
    const std::size_t e = params.arch.embedding_length();
    cache.pooled.assign(e, 0.0);
    for (std::size_t i : cache.order) {
        const auto& emb = cache.items[i].pool2;
        for (std::size_t j = 0; j < e; ++j) {
            cache.pooled[j] += emb[j];
        }
    }
    for (double& v : cache.pooled) {
        v /= static_cast<double>(n);
    }
    cache.logit = head_logit(params.layers[2], cache.pooled);
    cache.prob = sigmoid(cache.logit);
    return cache.prob;
}

double set_forward(const ModelParams& params, const InstanceBag& bag) {
    SetCache cache;
    return set_forward(params, bag.instances, cache);
}

}  // namespace milrisk
