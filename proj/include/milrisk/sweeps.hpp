#pragma once

#include "milrisk/aggregate.hpp"
#include "milrisk/cohort.hpp"
#include "milrisk/eval.hpp"
#include "milrisk/training.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace milrisk {

struct ExperimentConfig {
    int beats = 2;
    int n_splits = 5;
    double test_fraction = 0.25;
    std::uint64_t seed = 1;
    TrainConfig train;
    AggregatorSpec aggregator;
    std::size_t instance_cap = kDefaultInstanceCap;

    void validate() const;
};

/// One trained and evaluated train/test split.
struct SplitRun {
    int split = 0;
    int horizon = 0;
    Variant variant = Variant::CNN;
    int beats = 0;
    double positive_fraction = 1.0;
    SplitPlan plan;                              // indices into `eligible`
    std::vector<std::size_t> eligible;           // cohort indices with a label and instances
    std::vector<std::size_t> test_patients;      // cohort indices
    std::vector<int> test_labels;
    std::vector<std::vector<double>> test_instance_probs;  // empty for SET
    std::vector<double> test_scores;             // with the experiment aggregator
    TrainResult training;
};

/// Stratified split `s` of the eligible patients (seeded from cfg.seed),
/// training on the train side and scoring the test side. With
/// positive_fraction < 1 the training positives are subsampled first.
SplitRun run_split(const Cohort& cohort, std::span<const InstanceBag> bags, Variant variant, int horizon, int split,
                   const ExperimentConfig& cfg, double positive_fraction = 1.0);

std::vector<SplitRun> run_splits(const Cohort& cohort, std::span<const InstanceBag> bags, Variant variant, int horizon,
                                 const ExperimentConfig& cfg, double positive_fraction = 1.0);

/// Per-(split, horizon) metrics.
struct EvalRow {
    int split = 0;
    int horizon = 0;
    Variant variant = Variant::CNN;
    int beats = 0;
    std::string aggregator;
    double positive_fraction = 1.0;
    double auc = 0.0;
    OddsRatio odds;
    std::size_t n_test = 0;
    std::size_t flagged = 0;
};

using EvalReport = std::vector<EvalRow>;

/// AUC, high-risk designation and odds ratio for one run's test scores.
EvalRow evaluate_scores(const SplitRun& run, std::span<const double> scores, const std::string& aggregator_label);
EvalRow evaluate_run(const SplitRun& run, const ExperimentConfig& cfg);

/// All splits for each horizon.
EvalReport evaluate_cohort(const Cohort& cohort, Variant variant, std::span<const int> horizons,
                           const ExperimentConfig& cfg);

/// Mean and sample standard deviation of AUC across splits for one setting.
struct SweepCell {
    std::string sweep;
    int horizon = 0;
    Variant variant = Variant::CNN;
    int beats = 0;
    std::string aggregator;
    double positive_fraction = 1.0;
    std::vector<double> aucs;
    double auc_mean = 0.0;
    double auc_sd = 0.0;
};

SweepCell summarize(const std::string& sweep, std::span<const SplitRun> runs, std::span<const double> aucs,
                    const std::string& aggregator_label);

/// Retrains every variant at every k in `ks` (each in [1, 4]).
std::vector<SweepCell> sweep_instance_length(const Cohort& cohort, std::span<const Variant> variants,
                                             std::span<const int> ks, int horizon, const ExperimentConfig& cfg);

/// Re-aggregates cached instance probabilities of trained runs; no retraining.
std::vector<SweepCell> sweep_aggregator(std::span<const SplitRun> runs, std::span<const AggregatorSpec> specs);

/// Retrains with each fraction of the training positives (patients, seeded,
/// without replacement). The test sides are unchanged.
std::vector<SweepCell> sweep_positive_fraction(const Cohort& cohort, std::span<const InstanceBag> bags, Variant variant,
                                               std::span<const double> fractions, int horizon,
                                               const ExperimentConfig& cfg);

/// The four aggregators compared in the robustness study.
std::vector<AggregatorSpec> robustness_aggregators();

void write_eval_report_csv(const std::filesystem::path& path, std::span<const EvalRow> rows);
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepCell> cells);

}  // namespace milrisk
