#include "milrisk/error.hpp"
#include "milrisk/model.hpp"
#include "milrisk/rng.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace milrisk;

namespace {

const Variant kAll[] = {Variant::CNN, Variant::LR, Variant::FC2, Variant::FC3, Variant::SET};

std::vector<double> random_input(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    return x;
}

ModelParams zero_params(Variant v, int beats = 2) {
    auto p = init_params(ArchitectureDescriptor::make(v, beats), 1);
    p.set_zero();
    return p;
}

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no milrisk::Error thrown";
    return ErrorKind::Config;
}

}  // namespace

TEST(Architecture, CnnShapeChainForTwoBeats) {
    const auto a = ArchitectureDescriptor::make(Variant::CNN, 2);
    EXPECT_EQ(a.input_length, 256u);
    EXPECT_EQ(a.conv1.out_length, 128u);
    EXPECT_EQ(a.pool1.out_length, 125u);
    EXPECT_EQ(a.conv2.out_length, 63u);
    EXPECT_EQ(a.pool2.out_length, 60u);
    EXPECT_EQ(a.embedding_length(), 120u);
    EXPECT_NO_THROW(a.validate());
}

TEST(Architecture, EveryVariantAndLengthIsConsistent) {
    for (Variant v : kAll) {
        for (int k = 1; k <= 4; ++k) {
            const auto a = ArchitectureDescriptor::make(v, k);
            EXPECT_EQ(a.input_length, static_cast<std::size_t>(128 * k));
            EXPECT_NO_THROW(a.validate());
        }
    }
    EXPECT_EQ(kind_of([] { ArchitectureDescriptor::make(Variant::CNN, 0); }), ErrorKind::Config);
    EXPECT_EQ(kind_of([] { ArchitectureDescriptor::make(Variant::CNN, 5); }), ErrorKind::Config);
    auto broken = ArchitectureDescriptor::make(Variant::CNN, 2);
    broken.pool1.in_length = 100;
    EXPECT_EQ(kind_of([&] { broken.validate(); }), ErrorKind::ShapeMismatch);
}

TEST(Architecture, LayerShapes) {
    const auto cnn = ArchitectureDescriptor::make(Variant::CNN, 2).layer_shapes();
    ASSERT_EQ(cnn.size(), 3u);
    EXPECT_EQ(cnn[0].weight_shape, std::vector<std::uint32_t>({2, 1, 128}));
    EXPECT_EQ(cnn[1].weight_shape, std::vector<std::uint32_t>({2, 2, 64}));
    EXPECT_EQ(cnn[2].weight_shape, std::vector<std::uint32_t>({1, 120}));
    EXPECT_EQ(cnn[0].bias_length, 2u);
    EXPECT_EQ(cnn[1].bias_length, 2u);
    EXPECT_EQ(cnn[2].bias_length, 1u);

    const auto fc3 = ArchitectureDescriptor::make(Variant::FC3, 2);
    EXPECT_EQ(fc3.hidden, 3u);
    EXPECT_EQ(fc3.layer_shapes()[0].weight_shape, std::vector<std::uint32_t>({3, 256}));
    EXPECT_EQ(ArchitectureDescriptor::make(Variant::FC2, 2).hidden, 2u);
    EXPECT_EQ(ArchitectureDescriptor::make(Variant::LR, 3).layer_shapes()[0].weight_shape,
              std::vector<std::uint32_t>({1, 384}));
}

TEST(InitParams, DeterministicGlorotWithZeroBias) {
    for (Variant v : kAll) {
        const auto arch = ArchitectureDescriptor::make(v, 2);
        const auto a = init_params(arch, 42);
        const auto b = init_params(arch, 42);
        const auto c = init_params(arch, 43);
        ASSERT_EQ(a.layers.size(), b.layers.size());
        bool differs = false;
        for (std::size_t l = 0; l < a.layers.size(); ++l) {
            EXPECT_EQ(a.layers[l].weights, b.layers[l].weights);
            differs |= a.layers[l].weights != c.layers[l].weights;
            for (double bias : a.layers[l].bias) EXPECT_EQ(bias, 0.0);
            const auto& shape = a.layers[l].weight_shape;
            // fan_in = inputs x taps, fan_out = outputs x taps
            double taps = shape.size() == 3 ? shape[2] : 1.0;
            double fan_in = (shape.size() == 3 ? shape[1] : shape[1]) * taps;
            double fan_out = shape[0] * taps;
            const double limit = std::sqrt(6.0 / (fan_in + fan_out));
            for (double w : a.layers[l].weights) {
                EXPECT_LE(std::abs(w), limit);
            }
        }
        EXPECT_TRUE(differs);
        EXPECT_TRUE(a.all_finite());
        EXPECT_EQ(a.seed, 42u);
    }
}

TEST(Forward, ZeroParamsGiveOneHalf) {
    const auto x = random_input(1, 256);
    for (Variant v : {Variant::CNN, Variant::LR, Variant::FC2, Variant::FC3}) {
        EXPECT_EQ(forward(zero_params(v), x), 0.5) << to_string(v);
    }
    InstanceBag bag{"b", {{"b", 2, x, 0}, {"b", 2, random_input(2, 256), 1}}, {}};
    EXPECT_EQ(set_forward(zero_params(Variant::SET), bag), 0.5);
}

TEST(Forward, CnnMatchesDirectSummationOracle) {
    const auto params = init_params(ArchitectureDescriptor::make(Variant::CNN, 2), 7);
    const auto x = random_input(99, 256);
    ForwardCache cache;
    const double p = cnn_forward(params, x, cache);
    const auto emb = oracle::trunk<long double>(params, x);
    ASSERT_EQ(cache.pool2.size(), emb.size());
    for (std::size_t i = 0; i < emb.size(); ++i) {
        EXPECT_NEAR(cache.pool2[i], static_cast<double>(emb[i]), 1e-12);
    }
    const long double z = oracle::instance_logit<long double>(params, x);
    EXPECT_NEAR(cache.logit, static_cast<double>(z), 1e-12);
    EXPECT_NEAR(p, static_cast<double>(oracle::sigmoid(z)), 1e-12);
}

TEST(Forward, LrMatchesDotProduct) {
    auto params = zero_params(Variant::LR);
    auto x = random_input(3, 256);
    params.layers[0].weights[17] = 1.0;
    x[17] = 0.0;
    EXPECT_EQ(lr_forward(params, x), 0.5);

    params = init_params(ArchitectureDescriptor::make(Variant::LR, 2), 5);
    params.layers[0].bias[0] = 0.3;
    x = random_input(4, 256);
    const long double z = oracle::instance_logit<long double>(params, x);
    EXPECT_NEAR(lr_forward(params, x), static_cast<double>(oracle::sigmoid(z)), 1e-15);
}

TEST(Forward, FcMatchesMatrixVectorOracle) {
    for (Variant v : {Variant::FC2, Variant::FC3}) {
        auto params = init_params(ArchitectureDescriptor::make(v, 2), 6);
        for (auto& layer : params.layers) {
            for (double& b : layer.bias) b = 0.05;
        }
        const auto x = random_input(5, 256);
        const long double z = oracle::instance_logit<long double>(params, x);
        EXPECT_NEAR(fc_forward(params, x), static_cast<double>(oracle::sigmoid(z)), 1e-12);
    }
}

TEST(Forward, ShapeAndVariantErrors) {
    const auto cnn = init_params(ArchitectureDescriptor::make(Variant::CNN, 2), 1);
    const auto short_x = random_input(1, 128);
    EXPECT_EQ(kind_of([&] { forward(cnn, short_x); }), ErrorKind::ShapeMismatch);
    EXPECT_EQ(kind_of([&] { lr_forward(cnn, random_input(1, 256)); }), ErrorKind::ShapeMismatch);
    EXPECT_EQ(kind_of([&] { fc_forward(cnn, random_input(1, 256)); }), ErrorKind::ShapeMismatch);
    const auto set = init_params(ArchitectureDescriptor::make(Variant::SET, 2), 1);
    EXPECT_EQ(kind_of([&] { forward(set, random_input(1, 256)); }), ErrorKind::ShapeMismatch);
    EXPECT_EQ(kind_of([&] { set_forward(set, InstanceBag{"e", {}, {}}); }), ErrorKind::EmptyBag);
    EXPECT_EQ(kind_of([&] { set_forward(set, InstanceBag{"e", {{"e", 1, short_x, 0}}, {}}); }),
              ErrorKind::ShapeMismatch);
}

TEST(Forward, Deterministic) {
    const auto params = init_params(ArchitectureDescriptor::make(Variant::CNN, 3), 2);
    const auto x = random_input(6, 384);
    EXPECT_EQ(forward(params, x), forward(params, x));
}

TEST(Sigmoid, ClampedAndOpenInterval) {
    EXPECT_EQ(sigmoid(0.0), 0.5);
    EXPECT_GT(sigmoid(-1e6), 0.0);
    EXPECT_LT(sigmoid(1e6), 1.0);
    EXPECT_EQ(sigmoid(1e6), sigmoid(40.0));
    EXPECT_EQ(sigmoid(-1e6), sigmoid(-40.0));
    EXPECT_LT(sigmoid(30.0), sigmoid(35.0));
}

TEST(SetForward, RepeatedInstanceEqualsSingleton) {
    const auto params = init_params(ArchitectureDescriptor::make(Variant::SET, 2), 11);
    const auto x = random_input(8, 256);
    InstanceBag one{"s", {{"s", 2, x, 0}}, {}};
    InstanceBag five{"s", {}, {}};
    for (std::size_t i = 0; i < 5; ++i) five.instances.push_back({"s", 2, x, i});
    EXPECT_NEAR(set_forward(params, five), set_forward(params, one), 1e-15);
}

TEST(SetForward, PermutationInvariantBitwise) {
    auto params = init_params(ArchitectureDescriptor::make(Variant::SET, 2), 12);
    InstanceBag bag{"s", {}, {}};
    for (std::size_t i = 0; i < 7; ++i) bag.instances.push_back({"s", 2, random_input(20 + i, 256), i});
    const double base = set_forward(params, bag);
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        rng.shuffle(std::span<Instance>(bag.instances));
        EXPECT_EQ(set_forward(params, bag), base);
    }
    std::vector<std::vector<double>> xs;
    std::sort(bag.instances.begin(), bag.instances.end(),
              [](const Instance& a, const Instance& b) { return a.start_beat < b.start_beat; });
    for (const auto& inst : bag.instances) xs.push_back(inst.values);
    EXPECT_NEAR(base, static_cast<double>(oracle::sigmoid(oracle::set_logit<long double>(params, xs))), 1e-12);
}

TEST(ModelFile, RoundTripIsBitwise) {
    const auto dir = std::filesystem::temp_directory_path();
    for (Variant v : kAll) {
        auto params = init_params(ArchitectureDescriptor::make(v, 3), 21);
        for (auto& layer : params.layers) {
            for (double& b : layer.bias) b = 0.125;
        }
        const auto path = dir / ("milrisk_model_" + std::string(to_string(v)) + ".mil");
        write_model(path, params);
        const auto back = read_model(path);
        EXPECT_EQ(back.arch.variant, v);
        EXPECT_EQ(back.arch.beats, 3);
        ASSERT_EQ(back.layers.size(), params.layers.size());
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            EXPECT_EQ(back.layers[l].weight_shape, params.layers[l].weight_shape);
            EXPECT_EQ(back.layers[l].weights, params.layers[l].weights);
            EXPECT_EQ(back.layers[l].bias, params.layers[l].bias);
        }
        std::ifstream in(path, std::ios::binary);
        char head[11];
        in.read(head, sizeof(head));
        EXPECT_EQ(std::string(head, 4), "MIL1");
        EXPECT_EQ(static_cast<int>(head[4]), static_cast<int>(v));
        EXPECT_EQ(static_cast<int>(head[5]), 3);
        EXPECT_EQ(static_cast<unsigned char>(head[6]) | (static_cast<unsigned char>(head[7]) << 8), 384);
        EXPECT_EQ(static_cast<std::size_t>(head[10]), params.layers.size());
        std::filesystem::remove(path);
    }
}

TEST(ModelFile, CorruptFilesRejected) {
    const auto path = std::filesystem::temp_directory_path() / "milrisk_corrupt.mil";
    write_model(path, init_params(ArchitectureDescriptor::make(Variant::LR, 2), 1));
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 8);
    EXPECT_EQ(kind_of([&] { read_model(path); }), ErrorKind::Format);
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << "NOPE";
    }
    EXPECT_EQ(kind_of([&] { read_model(path); }), ErrorKind::Format);
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write("MIL1\x09\x02", 6);
    }
    EXPECT_EQ(kind_of([&] { read_model(path); }), ErrorKind::Format);
    std::filesystem::remove(path);
    EXPECT_EQ(kind_of([&] { read_model(path); }), ErrorKind::Io);
}

TEST(ModelParams, Arithmetic) {
    auto a = init_params(ArchitectureDescriptor::make(Variant::FC2, 1), 3);
    auto z = a.zeros_like();
    EXPECT_EQ(z.parameter_count(), a.parameter_count());
    EXPECT_EQ(a.parameter_count(), 2u * 128 + 2 + 2 + 1);
    z.add(a);
    z.scale(2.0);
    std::vector<double> av, zv;
    a.for_each([&](double v) { av.push_back(v); });
    z.for_each([&](double v) { zv.push_back(v); });
    for (std::size_t i = 0; i < av.size(); ++i) EXPECT_EQ(zv[i], 2.0 * av[i]);
    z.layers[0].weights[0] = NAN;
    EXPECT_FALSE(z.all_finite());
}
