#include "milrisk/aggregate.hpp"
#include "milrisk/error.hpp"
#include "milrisk/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace milrisk;

namespace {

const AggregatorSpec kDefault{};

AggregatorSpec median(double q) { return {AggregatorKind::TopFractionMedian, q}; }
AggregatorSpec mean(double q) { return {AggregatorKind::TopFractionMean, q}; }

std::vector<double> uniform_vector(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform();
    return v;
}

InstanceBag bag_of(std::size_t n, std::size_t length, Rng& rng) {
    InstanceBag bag;
    bag.patient_id = "p";
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(length);
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        bag.instances.push_back({"p", 1, std::move(x), i});
    }
    return bag;
}

std::vector<RiskScore> risk(const std::vector<double>& s) {
    std::vector<RiskScore> out;
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back({"p" + std::to_string(i), 90, s[i], false});
    return out;
}

std::size_t flagged(const std::vector<RiskScore>& r) {
    return static_cast<std::size_t>(std::count_if(r.begin(), r.end(), [](const RiskScore& s) { return s.high_risk; }));
}

}  // namespace

TEST(TopCount, CeilingWithFloor) {
    EXPECT_EQ(top_count(10, 0.2), 2u);
    EXPECT_EQ(top_count(7, 0.2), 2u);
    EXPECT_EQ(top_count(30, 0.1), 3u);
    EXPECT_EQ(top_count(1, 0.2), 1u);
    EXPECT_EQ(top_count(3, 0.01), 1u);
    EXPECT_EQ(top_count(9, 1.0), 9u);
}

TEST(Aggregate, Examples) {
    const std::vector<double> v{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    EXPECT_NEAR(aggregate_scores(v, kDefault), 0.95, 1e-15);
    EXPECT_NEAR(aggregate_scores(std::vector<double>(13, 0.37), kDefault), 0.37, 1e-15);
    const std::vector<double> seven{0.05, 0.9, 0.1, 0.3, 0.8, 0.2, 0.4};
    EXPECT_NEAR(aggregate_scores(seven, kDefault), 0.85, 1e-15);
    EXPECT_NEAR(aggregate_scores(seven, median(0.5)), 0.6, 1e-15);  // top 4: .9 .8 .4 .3
}

TEST(Aggregate, FullFractionIsPlainMean) {
    Rng rng(3);
    const auto v = uniform_vector(rng, 50);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double sum = 0.0;
    for (double x : sorted) sum += x;
    EXPECT_EQ(aggregate_scores(v, mean(1.0)), sum / 50.0);
}

TEST(Aggregate, MatchesOracle) {
    Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = 1 + rng.below(200);
        const auto v = uniform_vector(rng, n);
        for (const auto& spec : {kDefault, mean(0.1), mean(0.5), median(0.2), median(1.0)}) {
            ASSERT_EQ(aggregate_scores(v, spec),
                      oracle::top_fraction(v, spec.fraction, spec.kind == AggregatorKind::TopFractionMedian))
                << "trial " << trial << " " << spec.label();
        }
    }
}

TEST(Aggregate, MonotoneInEachInput) {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        auto v = uniform_vector(rng, 1 + rng.below(40));
        const double before = aggregate_scores(v, kDefault);
        v[rng.below(v.size())] += rng.uniform(0.0, 0.5);
        EXPECT_GE(aggregate_scores(v, kDefault), before);
    }
}

TEST(Aggregate, PermutationInvariantAndBounded) {
    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        auto v = uniform_vector(rng, 1 + rng.below(60));
        const double a = aggregate_scores(v, kDefault);
        rng.shuffle(std::span<double>(v));
        EXPECT_EQ(aggregate_scores(v, kDefault), a);
        EXPECT_LE(a, *std::max_element(v.begin(), v.end()));
        EXPECT_GE(a, *std::min_element(v.begin(), v.end()));
    }
}

TEST(Aggregate, EmptyInputIsAnError) {
    try {
        aggregate_scores({}, kDefault);
        FAIL() << "expected EmptyScores";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyScores);
    }
}

TEST(Aggregate, ParseAndLabel) {
    EXPECT_EQ(kDefault.label(), "top20_mean");
    EXPECT_EQ(parse_aggregator("median", 0.5).label(), "top50_median");
    EXPECT_THROW(parse_aggregator("max", 0.2), Error);
    EXPECT_THROW(parse_aggregator("mean", 0.0), Error);
    EXPECT_THROW(parse_aggregator("mean", 1.5), Error);
}

TEST(ScorePatient, ZeroModelGivesOneHalf) {
    const auto arch = ArchitectureDescriptor::make(Variant::LR, 1);
    ModelParams params = init_params(arch, 1);
    params.set_zero();
    Rng rng(2);
    const auto r = score_patient(bag_of(9, arch.input_length, rng), params, kDefault, 30);
    EXPECT_EQ(r.score, 0.5);
    EXPECT_EQ(r.horizon_days, 30);
    EXPECT_EQ(r.patient_id, "p");
}

TEST(ScorePatient, SingletonBagIsTheInstanceProbability) {
    const auto arch = ArchitectureDescriptor::make(Variant::CNN, 1);
    const ModelParams params = init_params(arch, 4);
    Rng rng(3);
    const auto bag = bag_of(1, arch.input_length, rng);
    EXPECT_EQ(score_patient(bag, params, kDefault, 90).score, forward(params, bag.instances[0].values));
}

TEST(ScorePatient, TenInstancesMatchOracle) {
    const auto arch = ArchitectureDescriptor::make(Variant::CNN, 1);
    const ModelParams params = init_params(arch, 8);
    Rng rng(4);
    const auto bag = bag_of(10, arch.input_length, rng);
    std::vector<double> probs;
    for (const auto& inst : bag.instances) {
        probs.push_back(static_cast<double>(oracle::sigmoid(oracle::instance_logit<oracle::Real>(params, inst.values))));
    }
    EXPECT_NEAR(score_patient(bag, params, kDefault, 90).score, oracle::top_fraction(probs, 0.2, false), 1e-12);
    EXPECT_EQ(instance_probabilities(bag, params).size(), 10u);
}

TEST(ScorePatient, EmptyBag) {
    const ModelParams params = init_params(ArchitectureDescriptor::make(Variant::LR, 1), 1);
    InstanceBag bag;
    bag.patient_id = "e";
    EXPECT_THROW(score_patient(bag, params, kDefault, 90), Error);
}

TEST(Percentile, LinearInterpolation) {
    EXPECT_EQ(percentile_linear({1, 2, 3, 4, 5}, 0.75), 4.0);
    EXPECT_EQ(percentile_linear({4, 1, 3, 2}, 0.75), 3.25);
    EXPECT_EQ(percentile_linear({7}, 0.75), 7.0);
}

TEST(HighRisk, EightDistinctScoresFlagTwo) {
    const auto r = designate_high_risk(risk({0.8, 0.1, 0.7, 0.2, 0.6, 0.3, 0.5, 0.4}));
    EXPECT_EQ(flagged(r), 2u);
    EXPECT_TRUE(r[0].high_risk);
    EXPECT_TRUE(r[2].high_risk);
}

TEST(HighRisk, IdenticalScoresFlagNobody) {
    EXPECT_EQ(flagged(designate_high_risk(risk(std::vector<double>(20, 0.3)))), 0u);
}

TEST(HighRisk, QuarterOfDistinctScores) {
    for (std::size_t n : {4u, 40u, 400u}) {
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<double>((i * 7919) % n);
        EXPECT_EQ(flagged(designate_high_risk(risk(s))), n / 4) << n;
    }
}

TEST(HighRisk, CohortOf1247) {
    std::vector<double> s(1247);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i) / 1247.0;
    EXPECT_EQ(flagged(designate_high_risk(risk(s))), 312u);
    // A tie straddling the 75th percentile drops one patient below the strict threshold.
    s[935] = s[934];
    EXPECT_EQ(flagged(designate_high_risk(risk(s))), 311u);
}

TEST(HighRisk, TooFewPatients) {
    try {
        designate_high_risk(risk({0.1, 0.2, 0.3}));
        FAIL() << "expected TooFewPatients";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooFewPatients);
    }
}
