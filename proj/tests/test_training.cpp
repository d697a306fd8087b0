#include "milrisk/error.hpp"
#include "milrisk/rng.hpp"
#include "milrisk/training.hpp"

#include "gradcheck.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace milrisk;

namespace {

// Bags whose instances carry a constant offset of +/-0.3 under uniform noise.
struct Separable {
    std::vector<InstanceBag> bags;
    std::vector<int> labels;
};

Separable separable(std::size_t n_pos, std::size_t n_neg, std::size_t per_bag, std::uint64_t seed, int beats = 2) {
    Rng rng(seed);
    Separable s;
    const std::size_t len = static_cast<std::size_t>(beats) * window_length(128);
    for (std::size_t b = 0; b < n_pos + n_neg; ++b) {
        const int y = b < n_pos ? 1 : 0;
        InstanceBag bag;
        bag.patient_id = "B" + std::to_string(b);
        for (std::size_t i = 0; i < per_bag; ++i) {
            std::vector<double> x(len);
            for (double& v : x) v = rng.uniform(-0.5, 0.5) + (y == 1 ? 0.3 : -0.3);
            bag.instances.push_back({bag.patient_id, beats, std::move(x), i * static_cast<std::size_t>(beats)});
        }
        s.bags.push_back(std::move(bag));
        s.labels.push_back(y);
    }
    return s;
}

bool same_params(const ModelParams& a, const ModelParams& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        if (a.layers[l].weights != b.layers[l].weights || a.layers[l].bias != b.layers[l].bias) return false;
    }
    return true;
}

}  // namespace

TEST(Bce, Examples) {
    EXPECT_NEAR(bce_loss(0.5, 1), std::numbers::ln2, 1e-15);
    EXPECT_NEAR(bce_loss(0.5, 0), std::numbers::ln2, 1e-15);
    EXPECT_NEAR(bce_loss(1.0, 1), 1e-12, 1e-16);
    EXPECT_NEAR(bce_loss(0.9, 0), 2.302585092994046, 1e-12);
    EXPECT_TRUE(std::isfinite(bce_loss(0.0, 1)));
    EXPECT_NEAR(bce_loss(0.0, 1), -std::log(1e-12), 1e-9);
}

TEST(Backward, LrGradientIsResidualTimesInput) {
    const auto arch = ArchitectureDescriptor::make(Variant::LR, 2);
    const ModelParams params = init_params(arch, 5);
    Rng rng(6);
    std::vector<double> x(arch.input_length);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (int y : {0, 1}) {
        ForwardCache cache;
        const double p = forward(params, x, cache);
        ModelParams g = params.zeros_like();
        backward(params, cache, y, g);
        for (std::size_t j = 0; j < x.size(); ++j) {
            ASSERT_EQ(g.layers[0].weights[j], (p - y) * x[j]) << j;
        }
        EXPECT_EQ(g.layers[0].bias[0], p - y);
    }
}

TEST(Backward, SaturatedCorrectPredictionHasNoGradient) {
    const auto arch = ArchitectureDescriptor::make(Variant::CNN, 2);
    ModelParams params = init_params(arch, 9);
    params.layers[2].bias[0] = 100.0;  // logit clamps, p rounds to just below 1
    std::vector<double> x(arch.input_length, 0.1);
    ForwardCache cache;
    forward(params, x, cache);
    ModelParams g = params.zeros_like();
    backward(params, cache, 1, g);
    g.for_each([](double v) { EXPECT_LE(std::abs(v), 1e-10); });
}

TEST(Backward, MatchesFiniteDifferences) {
    for (Variant v : {Variant::CNN, Variant::LR, Variant::FC2, Variant::FC3, Variant::SET}) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            const auto r = gradcheck::check_draw(v, seed);
            EXPECT_GT(r.parameters, 0u);
            EXPECT_LE(r.max_rel_error, 1e-5) << to_string(v) << " seed " << seed;
        }
    }
}

TEST(Backward, AccumulatesIntoExistingGradients) {
    const auto arch = ArchitectureDescriptor::make(Variant::FC2, 1);
    const ModelParams params = init_params(arch, 2);
    std::vector<double> x(arch.input_length, 0.25);
    ForwardCache cache;
    forward(params, x, cache);
    ModelParams once = params.zeros_like();
    backward(params, cache, 1, once);
    ModelParams twice = params.zeros_like();
    backward(params, cache, 1, twice);
    backward(params, cache, 1, twice);
    once.scale(2.0);
    EXPECT_TRUE(same_params(once, twice));
}

TEST(Adam, ZeroGradientLeavesParamsButCountsStep) {
    const ModelParams start = init_params(ArchitectureDescriptor::make(Variant::LR, 1), 3);
    ModelParams p = start;
    OptimizerState state = OptimizerState::for_params(p);
    adam_step(p, p.zeros_like(), state, TrainConfig{});
    EXPECT_TRUE(same_params(p, start));
    EXPECT_EQ(state.step, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    const ModelParams start = init_params(ArchitectureDescriptor::make(Variant::LR, 1), 3);
    ModelParams p = start;
    ModelParams g = p.zeros_like();
    Rng rng(4);
    g.for_each([&](double& v) { v = rng.uniform(-2.0, 2.0); });
    OptimizerState state = OptimizerState::for_params(p);
    TrainConfig cfg;
    adam_step(p, g, state, cfg);
    for (std::size_t i = 0; i < p.layers[0].weights.size(); ++i) {
        const double gi = g.layers[0].weights[i];
        const double step = start.layers[0].weights[i] - p.layers[0].weights[i];
        EXPECT_NEAR(step, cfg.learning_rate * (gi > 0 ? 1.0 : -1.0), 1e-6);
    }
}

TEST(Adam, TwoStepsFollowTheRecurrence) {
    ModelParams p = init_params(ArchitectureDescriptor::make(Variant::FC2, 1), 8);
    const ModelParams start = p;
    ModelParams g1 = p.zeros_like();
    ModelParams g2 = p.zeros_like();
    Rng rng(10);
    g1.for_each([&](double& v) { v = rng.uniform(-1.0, 1.0); });
    g2.for_each([&](double& v) { v = rng.uniform(-1.0, 1.0); });
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    OptimizerState state = OptimizerState::for_params(p);
    adam_step(p, g1, state, cfg);
    adam_step(p, g2, state, cfg);

    const auto& w0 = start.layers[0].weights;
    for (std::size_t i = 0; i < w0.size(); ++i) {
        const double a = g1.layers[0].weights[i];
        const double b = g2.layers[0].weights[i];
        double m = (1 - cfg.beta1) * a;
        double v = (1 - cfg.beta2) * a * a;
        double w = w0[i] - cfg.learning_rate * (m / (1 - cfg.beta1)) /
                               (std::sqrt(v / (1 - cfg.beta2)) + cfg.epsilon);
        m = cfg.beta1 * m + (1 - cfg.beta1) * b;
        v = cfg.beta2 * v + (1 - cfg.beta2) * b * b;
        w -= cfg.learning_rate * (m / (1 - cfg.beta1 * cfg.beta1)) /
             (std::sqrt(v / (1 - cfg.beta2 * cfg.beta2)) + cfg.epsilon);
        EXPECT_NEAR(p.layers[0].weights[i], w, 1e-12) << i;
    }
    EXPECT_EQ(state.step, 2);
}

TEST(Adam, ShapeMismatch) {
    ModelParams p = init_params(ArchitectureDescriptor::make(Variant::LR, 1), 1);
    const ModelParams other = init_params(ArchitectureDescriptor::make(Variant::LR, 2), 1);
    OptimizerState state = OptimizerState::for_params(p);
    try {
        adam_step(p, other, state, TrainConfig{});
        FAIL() << "expected ShapeMismatch";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
    }
}

TEST(BalancedBatches, FewPositivesFillHalfOfEveryBatch) {
    std::vector<int> labels(6400 + 3, 0);
    labels[10] = labels[2000] = labels[6000] = 1;
    const auto batches = balanced_batches(labels, 128, 77);
    ASSERT_EQ(batches.size(), 100u);
    std::multiset<std::size_t> negatives;
    for (const auto& b : batches) {
        ASSERT_EQ(b.size(), 128u);
        std::size_t pos = 0;
        for (std::size_t i : b) {
            if (labels[i] == 1) {
                ++pos;
            } else {
                negatives.insert(i);
            }
        }
        EXPECT_EQ(pos, 64u);
    }
    EXPECT_EQ(negatives.size(), 6400u);
    EXPECT_EQ(std::set<std::size_t>(negatives.begin(), negatives.end()).size(), 6400u);
}

TEST(BalancedBatches, LastBatchIsPartial) {
    std::vector<int> labels(100, 0);
    labels[0] = labels[1] = 1;
    const auto batches = balanced_batches(labels, 64, 1);
    ASSERT_EQ(batches.size(), 4u);  // 98 negatives, 32 per batch
    EXPECT_EQ(batches.back().size(), 4u);
}

TEST(BalancedBatches, SeedDeterminesOrder) {
    std::vector<int> labels(500, 0);
    for (std::size_t i = 0; i < labels.size(); i += 7) labels[i] = 1;
    EXPECT_EQ(balanced_batches(labels, 32, 5), balanced_batches(labels, 32, 5));
    EXPECT_NE(balanced_batches(labels, 32, 5), balanced_batches(labels, 32, 6));
}

TEST(BalancedBatches, NeedsBothClasses) {
    const std::vector<int> labels(10, 0);
    try {
        balanced_batches(labels, 8, 1);
        FAIL() << "expected OneClassOnly";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::OneClassOnly);
    }
}

TEST(Train, ZeroEpochsReturnsInitialParams) {
    const auto data = separable(4, 6, 3, 1);
    TrainConfig cfg;
    cfg.max_epochs = 0;
    cfg.seed = 42;
    const auto r = train(Variant::CNN, data.bags, data.labels, cfg);
    EXPECT_TRUE(r.history.empty());
    const auto expected = init_params(ArchitectureDescriptor::make(Variant::CNN, 2), derive_seed(42, 0));
    EXPECT_TRUE(same_params(r.params, expected));
}

TEST(Train, LrLossDecreasesOnSeparableData) {
    const auto data = separable(10, 30, 20, 2);
    TrainConfig cfg;
    cfg.max_epochs = 5;
    cfg.early_stop_patience = 10;
    cfg.batch_size = 32;
    const auto r = train(Variant::LR, data.bags, data.labels, cfg);
    ASSERT_EQ(r.history.size(), 5u);
    for (std::size_t e = 1; e < r.history.size(); ++e) {
        EXPECT_LT(r.history[e].train_loss, r.history[e - 1].train_loss) << "epoch " << e + 1;
    }
    EXPECT_EQ(r.history.back().val_auc, 1.0);
}

TEST(Train, IsDeterministic) {
    const auto data = separable(6, 12, 8, 3);
    TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.batch_size = 16;
    for (Variant v : {Variant::CNN, Variant::SET}) {
        const auto a = train(v, data.bags, data.labels, cfg);
        const auto b = train(v, data.bags, data.labels, cfg);
        EXPECT_TRUE(same_params(a.params, b.params)) << to_string(v);
        ASSERT_EQ(a.history.size(), b.history.size());
        for (std::size_t e = 0; e < a.history.size(); ++e) {
            EXPECT_EQ(a.history[e].train_loss, b.history[e].train_loss);
        }
    }
}

TEST(Train, RejectsSingleClass) {
    auto data = separable(0, 5, 2, 4);
    try {
        train(Variant::LR, data.bags, data.labels, TrainConfig{});
        FAIL() << "expected OneClassOnly";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::OneClassOnly);
    }
}

TEST(Train, NonFiniteInputStopsTraining) {
    auto data = separable(3, 3, 2, 5);
    for (auto& bag : data.bags) {
        bag.instances[0].values[0] = std::numeric_limits<double>::quiet_NaN();
    }
    TrainConfig cfg;
    cfg.validation_fraction = 0.0;
    try {
        train(Variant::LR, data.bags, data.labels, cfg);
        FAIL() << "expected NonFiniteLoss";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonFiniteLoss);
        EXPECT_EQ(exit_code(e.kind()), 3);
    }
}

TEST(Train, RejectsMixedInstanceLengths) {
    auto a = separable(2, 2, 2, 6, 1);
    auto b = separable(2, 2, 2, 7, 2);
    a.bags.push_back(b.bags.front());
    a.labels.push_back(1);
    try {
        train(Variant::LR, a.bags, a.labels, TrainConfig{});
        FAIL() << "expected ShapeMismatch";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
    }
}
