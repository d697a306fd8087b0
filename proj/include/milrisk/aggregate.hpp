#pragma once

#include "milrisk/instances.hpp"
#include "milrisk/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace milrisk {

enum class AggregatorKind { TopFractionMean, TopFractionMedian };

/// Collective-assumption aggregator: a statistic over the top fraction of
/// instance probabilities. The default is the mean of the top 20%.
struct AggregatorSpec {
    AggregatorKind kind = AggregatorKind::TopFractionMean;
    double fraction = 0.2;

    std::string label() const;  // e.g. "top20_mean"
    void validate() const;
};

AggregatorSpec parse_aggregator(std::string_view kind, double fraction);

/// Number of top values selected: ceil(fraction * n), at least 1.
std::size_t top_count(std::size_t n, double fraction);

/// Mean (or median) of the ceil(q*N) largest probabilities. The mean sums the
/// selected values in descending order.
double aggregate_scores(std::span<const double> instance_probs, const AggregatorSpec& spec);

struct RiskScore {
    std::string patient_id;
    int horizon_days = 0;
    double score = 0.0;
    bool high_risk = false;
};

/// Classifier output for every instance of the bag, in bag order.
std::vector<double> instance_probabilities(const InstanceBag& bag, const ModelParams& params);

/// Instance-level variants aggregate; SET models score the bag directly.
RiskScore score_patient(const InstanceBag& bag, const ModelParams& params, const AggregatorSpec& spec,
                        int horizon_days);

/// Percentile with linear interpolation between order statistics
/// (position q * (n - 1)).
double percentile_linear(std::vector<double> values, double q);

/// Flags scores strictly above the cohort's 75th percentile.
std::vector<RiskScore> designate_high_risk(std::vector<RiskScore> scores);

}  // namespace milrisk
