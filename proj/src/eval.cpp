#include "milrisk/eval.hpp"
#include "milrisk/error.hpp"
#include "milrisk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace milrisk {

namespace {

struct ClassIndices {
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
};

ClassIndices by_class(std::span<const int> labels) {
    ClassIndices c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] == 1 ? c.pos : c.neg).push_back(i);
    }
    return c;
}

double incidence(std::span<const int> labels, const std::vector<std::size_t>& idx) {
    if (idx.empty()) {
        return 0.0;
    }
    std::size_t pos = 0;
    for (std::size_t i : idx) {
        pos += labels[i] == 1 ? 1 : 0;
    }
    return static_cast<double>(pos) / static_cast<double>(idx.size());
}

SplitPlan assemble(std::span<const int> labels, std::uint64_t seed, ClassIndices cls, std::size_t test_pos,
                   std::size_t test_neg) {
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(cls.pos));
    rng.shuffle(std::span<std::size_t>(cls.neg));
    SplitPlan plan;
    plan.seed = seed;
    plan.test.assign(cls.pos.begin(), cls.pos.begin() + static_cast<std::ptrdiff_t>(test_pos));
    plan.test.insert(plan.test.end(), cls.neg.begin(), cls.neg.begin() + static_cast<std::ptrdiff_t>(test_neg));
    plan.train.assign(cls.pos.begin() + static_cast<std::ptrdiff_t>(test_pos), cls.pos.end());
    plan.train.insert(plan.train.end(), cls.neg.begin() + static_cast<std::ptrdiff_t>(test_neg), cls.neg.end());
    std::sort(plan.test.begin(), plan.test.end());
    std::sort(plan.train.begin(), plan.train.end());
    plan.train_incidence = incidence(labels, plan.train);
    plan.test_incidence = incidence(labels, plan.test);
    return plan;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw Error(ErrorKind::ShapeMismatch, "scores and labels differ in length");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return scores[l] < scores[r]; });

    // Twice the mid-rank of a tie group spanning 1-based ranks [i+1, j] is i+1+j.
    std::int64_t rank_sum_x2 = 0;
    std::int64_t n_pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        const auto twice_mid = static_cast<std::int64_t>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] == 1) {
                rank_sum_x2 += twice_mid;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw Error(ErrorKind::OneClassOnly, "AUC needs both classes");
    }
    // Twice the Mann-Whitney U of the positives, and of the negatives.
    const std::int64_t u_pos_x2 = rank_sum_x2 - n_pos * (n_pos + 1);
    const std::int64_t pairs_x2 = 2 * n_pos * n_neg;
    const std::int64_t u_neg_x2 = pairs_x2 - u_pos_x2;
    const double pairs = static_cast<double>(pairs_x2);
    // Dividing the smaller count keeps auc(s, y) + auc(s, 1 - y) == 1 exactly.
    if (u_pos_x2 > u_neg_x2) {
        return 1.0 - static_cast<double>(u_neg_x2) / pairs;
    }
    return static_cast<double>(u_pos_x2) / pairs;
}

OddsRatio odds_ratio_from_counts(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    OddsRatio r{1.0, a, b, c, d, false};
    double fa = static_cast<double>(a);
    double fb = static_cast<double>(b);
    double fc = static_cast<double>(c);
    double fd = static_cast<double>(d);
    if (a == 0 || b == 0 || c == 0 || d == 0) {
        fa += 0.5;
        fb += 0.5;
        fc += 0.5;
        fd += 0.5;
        r.corrected = true;
    }
    r.value = (fa * fd) / (fb * fc);
    return r;
}

OddsRatio odds_ratio(std::span<const bool> high_risk, std::span<const int> labels) {
    if (high_risk.size() != labels.size()) {
        throw Error(ErrorKind::ShapeMismatch, "flags and labels differ in length");
    }
    std::int64_t a = 0, b = 0, c = 0, d = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool event = labels[i] == 1;
        if (high_risk[i]) {
            (event ? a : b) += 1;
        } else {
            (event ? c : d) += 1;
        }
    }
    if (a + b == 0 || c + d == 0) {
        throw Error(ErrorKind::EmptyGroup, "odds ratio needs patients in both risk groups");
    }
    return odds_ratio_from_counts(a, b, c, d);
}

std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9));
}

SplitPlan stratified_split(std::span<const int> labels, std::uint64_t seed, double test_fraction) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error(ErrorKind::Config, "test_fraction must be in (0, 1)");
    }
    ClassIndices cls = by_class(labels);
    if (cls.pos.size() < 4 || cls.neg.size() < 4) {
        throw Error(ErrorKind::TooFewPatients, "stratified split needs at least 4 patients per class");
    }
    const std::size_t total = round_half_up(test_fraction * static_cast<double>(labels.size()));
    const std::size_t test_pos =
        std::clamp<std::size_t>(round_half_up(test_fraction * static_cast<double>(cls.pos.size())), 1, cls.pos.size() - 1);
    const std::size_t test_neg = std::clamp<std::size_t>(total - std::min(total, test_pos), 1, cls.neg.size() - 1);
    return assemble(labels, seed, std::move(cls), test_pos, test_neg);
}

SplitPlan holdout_split(std::span<const int> labels, std::uint64_t seed, double fraction) {
    ClassIndices cls = by_class(labels);
    if (cls.pos.size() < 2 || cls.neg.size() < 2) {
        throw Error(ErrorKind::TooFewPatients, "hold-out split needs at least 2 patients per class");
    }
    auto share = [fraction](std::size_t n) {
        return std::clamp<std::size_t>(round_half_up(fraction * static_cast<double>(n)), 1, n - 1);
    };
    const std::size_t test_pos = share(cls.pos.size());
    const std::size_t test_neg = share(cls.neg.size());
    return assemble(labels, seed, std::move(cls), test_pos, test_neg);
}

}  // namespace milrisk
