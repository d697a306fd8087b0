#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace milrisk {

/// Mann-Whitney AUC: fraction of positive/negative pairs ranked correctly,
/// ties counting one half. Computed from mid-ranks in exact integer
/// arithmetic. Labels are 0/1.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// 2x2 table of risk group against outcome.
struct OddsRatio {
    double value = 1.0;
    std::int64_t a = 0;  // high risk, event
    std::int64_t b = 0;  // high risk, no event
    std::int64_t c = 0;  // low risk, event
    std::int64_t d = 0;  // low risk, no event
    bool corrected = false;  // Haldane-Anscombe +0.5 applied
};

OddsRatio odds_ratio(std::span<const bool> high_risk, std::span<const int> labels);
OddsRatio odds_ratio_from_counts(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);

/// Train/test partition of a cohort, as indices into the labels it was built from.
struct SplitPlan {
    std::uint64_t seed = 0;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    double train_incidence = 0.0;
    double test_incidence = 0.0;
};

/// Shuffles each class with the seeded generator and sends round(f * n)
/// patients to test, round(f * n_pos) of them positive (halves round up).
/// Both orders are restored to ascending index.
SplitPlan stratified_split(std::span<const int> labels, std::uint64_t seed, double test_fraction);

/// Inner hold-out used by training: like stratified_split but needs only two
/// patients per class and keeps at least one of each class on both sides.
SplitPlan holdout_split(std::span<const int> labels, std::uint64_t seed, double fraction);

std::size_t round_half_up(double x);

}  // namespace milrisk
