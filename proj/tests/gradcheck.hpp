#pragma once

// Backprop vs central finite differences of the long-double oracle loss.

#include "milrisk/rng.hpp"
#include "milrisk/training.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace gradcheck {

struct Result {
    double max_rel_error = 0.0;
    std::size_t parameters = 0;
};

inline constexpr double kStep = 1e-6;

/// One seeded draw: random params (biases included), random input(s) in
/// [-1, 1] and a random label. SET draws a bag of three instances.
inline Result check_draw(milrisk::Variant variant, std::uint64_t seed, int beats = 2) {
    using namespace milrisk;
    Rng rng(seed);
    const auto arch = ArchitectureDescriptor::make(variant, beats);
    ModelParams params = init_params(arch, rng.next());
    for (auto& layer : params.layers) {
        for (double& b : layer.bias) b = rng.uniform(-0.1, 0.1);
    }
    const int y = rng.uniform() < 0.5 ? 0 : 1;
    const std::size_t bag_size = variant == Variant::SET ? 3 : 1;
    std::vector<std::vector<double>> xs(bag_size, std::vector<double>(arch.input_length));
    for (auto& x : xs) {
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
    }

    ModelParams grads = params.zeros_like();
    if (variant == Variant::SET) {
        std::vector<Instance> bag;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            bag.push_back({"x", beats, xs[i], i});
        }
        SetCache cache;
        set_forward(params, bag, cache);
        set_backward(params, cache, y, grads);
    } else {
        ForwardCache cache;
        forward(params, xs[0], cache);
        backward(params, cache, y, grads);
    }

    auto loss = [&]() -> oracle::Real {
        const oracle::Real z = variant == Variant::SET ? oracle::set_logit<oracle::Real>(params, xs)
                                                       : oracle::instance_logit<oracle::Real>(params, xs[0]);
        return oracle::bce_from_logit(z, y);
    };

    Result r;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        for (int part = 0; part < 2; ++part) {
            auto& values = part == 0 ? params.layers[l].weights : params.layers[l].bias;
            const auto& analytic = part == 0 ? grads.layers[l].weights : grads.layers[l].bias;
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double saved = values[i];
                const double hi = saved + kStep;
                const double lo = saved - kStep;
                values[i] = hi;
                const oracle::Real up = loss();
                values[i] = lo;
                const oracle::Real down = loss();
                values[i] = saved;
                const double numeric =
                    static_cast<double>((up - down) / (static_cast<oracle::Real>(hi) - static_cast<oracle::Real>(lo)));
                r.max_rel_error = std::max(r.max_rel_error, oracle::rel_error(analytic[i], numeric));
                ++r.parameters;
            }
        }
    }
    return r;
}

}  // namespace gradcheck
