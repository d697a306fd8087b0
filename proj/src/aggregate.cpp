#include "milrisk/aggregate.hpp"
#include "milrisk/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace milrisk {

std::string AggregatorSpec::label() const {
    std::ostringstream os;
    os << "top" << std::lround(fraction * 100.0) << (kind == AggregatorKind::TopFractionMean ? "_mean" : "_median");
    return os.str();
}

void AggregatorSpec::validate() const {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw Error(ErrorKind::Config, "aggregator fraction must be in (0, 1]");
    }
}

AggregatorSpec parse_aggregator(std::string_view kind, double fraction) {
    AggregatorSpec spec;
    if (kind == "mean") {
        spec.kind = AggregatorKind::TopFractionMean;
    } else if (kind == "median") {
        spec.kind = AggregatorKind::TopFractionMedian;
    } else {
        throw Error(ErrorKind::Config, "aggregator must be 'mean' or 'median', got '" + std::string(kind) + "'");
    }
    spec.fraction = fraction;
    spec.validate();
    return spec;
}

std::size_t top_count(std::size_t n, double fraction) {
    // The tolerance keeps products like 0.1 * 30 from rounding up past an integer.
    const double raw = std::ceil(fraction * static_cast<double>(n) - 1e-9);
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, n);
}

double aggregate_scores(std::span<const double> instance_probs, const AggregatorSpec& spec) {
    if (instance_probs.empty()) {
        throw Error(ErrorKind::EmptyScores, "no instance probabilities to aggregate");
    }
    spec.validate();
    const std::size_t m = top_count(instance_probs.size(), spec.fraction);
    std::vector<double> v(instance_probs.begin(), instance_probs.end());
    std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end(), std::greater<>());
    v.resize(m);
    if (spec.kind == AggregatorKind::TopFractionMedian) {
        // v is descending; the median is symmetric so order does not matter.
        return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
    }
    double sum = 0.0;
    for (double p : v) {
        sum += p;
    }
    return sum / static_cast<double>(m);
}

std::vector<double> instance_probabilities(const InstanceBag& bag, const ModelParams& params) {
    std::vector<double> probs(bag.size());
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < bag.size(); ++i) {
        ForwardCache cache;
        probs[i] = forward(params, bag.instances[i].values, cache);
    }
    return probs;
}

RiskScore score_patient(const InstanceBag& bag, const ModelParams& params, const AggregatorSpec& spec,
                        int horizon_days) {
    if (bag.instances.empty()) {
        throw Error(ErrorKind::EmptyBag, "patient '" + bag.patient_id + "' has no instances");
    }
    RiskScore r{bag.patient_id, horizon_days, 0.0, false};
    if (params.arch.variant == Variant::SET) {
        r.score = set_forward(params, bag);
    } else {
        r.score = aggregate_scores(instance_probabilities(bag, params), spec);
    }
    return r;
}

double percentile_linear(std::vector<double> values, double q) {
    if (values.empty()) {
        throw Error(ErrorKind::EmptyScores, "percentile of an empty set");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<RiskScore> designate_high_risk(std::vector<RiskScore> scores) {
    if (scores.size() < 4) {
        throw Error(ErrorKind::TooFewPatients, "high-risk designation needs at least 4 patients");
    }
    std::vector<double> values;
    values.reserve(scores.size());
    for (const auto& s : scores) {
        values.push_back(s.score);
    }
    const double threshold = percentile_linear(std::move(values), 0.75);
    for (auto& s : scores) {
        s.high_risk = s.score > threshold;
    }
    return scores;
}

}  // namespace milrisk
