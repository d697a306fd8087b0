#include "milrisk/binary.hpp"
#include "milrisk/error.hpp"
#include "milrisk/model.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace milrisk {

namespace {

constexpr char kMagic[4] = {'M', 'I', 'L', '1'};

template <typename T>
T read_field(std::istream& in, const std::filesystem::path& path) {
    T v{};
    if (!binary::get(in, v)) {
        throw Error(ErrorKind::Format, path.string() + ": truncated model file");
    }
    return v;
}

}  // namespace

void write_model(const std::filesystem::path& path, const ModelParams& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write model " + path.string());
    }
    out.write(kMagic, 4);
    binary::put(out, static_cast<std::uint8_t>(params.arch.variant));
    binary::put(out, static_cast<std::uint8_t>(params.arch.beats));
    binary::put(out, static_cast<std::uint32_t>(params.arch.input_length));
    binary::put(out, static_cast<std::uint8_t>(params.layers.size()));
    for (const auto& layer : params.layers) {
        binary::put(out, static_cast<std::uint8_t>(layer.weight_shape.size()));
        for (std::uint32_t d : layer.weight_shape) {
            binary::put(out, d);
        }
        binary::put(out, static_cast<std::uint32_t>(layer.bias.size()));
        for (double w : layer.weights) {
            binary::put(out, w);
        }
        for (double b : layer.bias) {
            binary::put(out, b);
        }
    }
    if (!out) {
        throw Error(ErrorKind::Io, "failed writing model " + path.string());
    }
}

ModelParams read_model(const std::filesystem::path& path, int sample_rate_hz) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open model " + path.string());
    }
    char magic[4];
    if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
        throw Error(ErrorKind::Format, path.string() + " is not a MIL1 model file");
    }
    const auto tag = read_field<std::uint8_t>(in, path);
    if (tag > static_cast<std::uint8_t>(Variant::SET)) {
        throw Error(ErrorKind::Format, path.string() + ": unknown variant tag " + std::to_string(tag));
    }
    const auto beats = read_field<std::uint8_t>(in, path);
    const auto input_length = read_field<std::uint32_t>(in, path);
    const auto layer_count = read_field<std::uint8_t>(in, path);

    if (beats < kMinBeatsPerInstance || beats > kMaxBeatsPerInstance || input_length % beats != 0 ||
        input_length / beats != window_length(sample_rate_hz)) {
        throw Error(ErrorKind::Format, path.string() + ": inconsistent beats/input length");
    }
    ModelParams p;
    p.arch = ArchitectureDescriptor::make(static_cast<Variant>(tag), beats, sample_rate_hz);
    const auto expected = p.arch.layer_shapes();
    if (layer_count != expected.size()) {
        throw Error(ErrorKind::Format, path.string() + ": layer count does not match the variant");
    }
    for (std::size_t l = 0; l < layer_count; ++l) {
        Layer layer;
        const auto rank = read_field<std::uint8_t>(in, path);
        for (std::uint8_t d = 0; d < rank; ++d) {
            layer.weight_shape.push_back(read_field<std::uint32_t>(in, path));
        }
        const auto bias_len = read_field<std::uint32_t>(in, path);
        if (layer.weight_shape != expected[l].weight_shape || bias_len != expected[l].bias_length) {
            throw Error(ErrorKind::Format, path.string() + ": layer " + std::to_string(l) + " has an unexpected shape");
        }
        const std::size_t count = std::accumulate(layer.weight_shape.begin(), layer.weight_shape.end(),
                                                  std::size_t{1}, std::multiplies<>());
        layer.weights.resize(count);
        for (double& w : layer.weights) {
            w = read_field<double>(in, path);
        }
        layer.bias.resize(bias_len);
        for (double& b : layer.bias) {
            b = read_field<double>(in, path);
        }
        p.layers.push_back(std::move(layer));
    }
    if (!p.all_finite()) {
        throw Error(ErrorKind::Format, path.string() + ": non-finite parameter");
    }
    return p;
}

}  // namespace milrisk
