#pragma once

#include "milrisk/instances.hpp"
#include "milrisk/kernels.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace milrisk {

/// Instance classifier families. SET scores whole bags with a learned
/// mean-pooling head; the others score single instances.
enum class Variant : std::uint8_t { CNN = 0, LR = 1, FC2 = 2, FC3 = 3, SET = 4 };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);
inline bool is_instance_level(Variant v) { return v != Variant::SET; }

inline constexpr std::size_t kConvFilters = 2;
inline constexpr std::size_t kConvStride = 2;
inline constexpr std::size_t kPoolWidth = 4;
inline constexpr std::size_t kPoolStride = 1;
inline constexpr double kLogitClamp = 40.0;

struct LayerShape {
    std::vector<std::uint32_t> weight_shape;
    std::uint32_t bias_length = 0;
};

/// Shape metadata for one variant at a given instance length. Conv kernels
/// span one second and half a second of signal.
struct ArchitectureDescriptor {
    Variant variant = Variant::CNN;
    int beats = 2;
    int sample_rate_hz = 128;
    std::size_t input_length = 0;

    kernels::ConvShape conv1;
    kernels::PoolShape pool1;
    kernels::ConvShape conv2;
    kernels::PoolShape pool2;
    std::size_t hidden = 0;      // FC2/FC3 width
    std::size_t head_inputs = 0;  // length fed to the sigmoid unit

    static ArchitectureDescriptor make(Variant variant, int beats, int sample_rate_hz = 128);

    bool has_trunk() const { return variant == Variant::CNN || variant == Variant::SET; }
    std::size_t embedding_length() const { return pool2.channels * pool2.out_length; }
    std::vector<LayerShape> layer_shapes() const;

    /// Throws ShapeMismatch if consecutive layers disagree on lengths.
    void validate() const;
};

/// One weight array plus its bias vector.
struct Layer {
    std::vector<std::uint32_t> weight_shape;
    std::vector<double> weights;
    std::vector<double> bias;
};

/// All learnable parameters of one classifier. Gradients and Adam moments use
/// the same type.
struct ModelParams {
    ArchitectureDescriptor arch;
    std::vector<Layer> layers;
    std::uint64_t seed = 0;

    std::size_t parameter_count() const;
    bool all_finite() const;

    ModelParams zeros_like() const;
    void set_zero();
    void add(const ModelParams& other);
    void scale(double factor);

    /// Visit every scalar in a fixed order (layer, weights then bias).
    template <typename F>
    void for_each(F&& f) {
        for (auto& layer : layers) {
            for (double& v : layer.weights) f(v);
            for (double& v : layer.bias) f(v);
        }
    }
    template <typename F>
    void for_each(F&& f) const {
        for (const auto& layer : layers) {
            for (double v : layer.weights) f(v);
            for (double v : layer.bias) f(v);
        }
    }
};

/// Glorot-uniform weights, zero biases, reproducible from `seed`.
ModelParams init_params(const ArchitectureDescriptor& arch, std::uint64_t seed);

/// Sigmoid of the logit clamped to [-40, 40].
double sigmoid(double logit);

/// Activations kept for backpropagation.
struct ForwardCache {
    std::span<const double> input;
    std::vector<double> conv1, pool1, conv2, pool2;
    std::vector<std::uint32_t> arg1, arg2;
    std::vector<double> hidden;
    double logit = 0.0;
    double prob = 0.5;
};

/// Conv/pool trunk up to the flattened embedding (left in cache.pool2).
void trunk_forward(const ModelParams& params, std::span<const double> x, ForwardCache& cache);

/// Instance-level forward for CNN/LR/FC variants.
double forward(const ModelParams& params, std::span<const double> x, ForwardCache& cache);
double forward(const ModelParams& params, std::span<const double> x);

double cnn_forward(const ModelParams& params, std::span<const double> x, ForwardCache& cache);
double lr_forward(const ModelParams& params, std::span<const double> x);
double fc_forward(const ModelParams& params, std::span<const double> x);

struct SetCache {
    std::vector<ForwardCache> items;
    std::vector<std::size_t> order;  // summation order (by start beat)
    std::vector<double> pooled;
    double logit = 0.0;
    double prob = 0.5;
};

/// Mean-pooled trunk embeddings -> dense -> sigmoid. Embeddings are summed in
/// ascending start-beat order, so the result does not depend on input order.
double set_forward(const ModelParams& params, std::span<const Instance> instances, SetCache& cache);
double set_forward(const ModelParams& params, const InstanceBag& bag);

// Model file, little-endian: "MIL1", u8 variant, u8 beats, u32 input_length,
// u8 layer count, then per layer: u8 rank, rank x u32 weight dims, u32 bias
// length, weights as f64 (row-major), bias as f64.
void write_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams read_model(const std::filesystem::path& path, int sample_rate_hz = 128);

}  // namespace milrisk
