#include "milrisk/sweeps.hpp"
#include "milrisk/error.hpp"
#include "milrisk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>

namespace milrisk {

namespace {

// Seed streams derived from ExperimentConfig::seed.
constexpr std::uint64_t kSplitStream = 10;
constexpr std::uint64_t kTrainStream = 100;
constexpr std::uint64_t kSubsampleStream = 200;

std::vector<std::size_t> subsample_positives(std::vector<std::size_t> train, std::span<const int> labels,
                                             double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw Error(ErrorKind::Config, "positive fraction must be in (0, 1]");
    }
    std::vector<std::size_t> pos;
    std::vector<std::size_t> kept;
    for (std::size_t i : train) {
        (labels[i] == 1 ? pos : kept).push_back(i);
    }
    const std::size_t keep = round_half_up(fraction * static_cast<double>(pos.size()));
    if (keep < 1) {
        throw Error(ErrorKind::Config, "positive fraction " + std::to_string(fraction) + " leaves no positive patient");
    }
    if (keep == pos.size()) {
        return train;
    }
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(pos));
    kept.insert(kept.end(), pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(keep));
    std::sort(kept.begin(), kept.end());
    return kept;
}

double sample_sd(std::span<const double> v, double mean) {
    if (v.size() < 2) {
        return 0.0;
    }
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

void ExperimentConfig::validate() const {
    if (beats < kMinBeatsPerInstance || beats > kMaxBeatsPerInstance) {
        throw Error(ErrorKind::Config, "beats per instance must be in [1, 4], got " + std::to_string(beats));
    }
    if (n_splits < 1) {
        throw Error(ErrorKind::Config, "n_splits must be at least 1");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error(ErrorKind::Config, "test_fraction must be in (0, 1)");
    }
    if (instance_cap < 1) {
        throw Error(ErrorKind::Config, "instance_cap must be at least 1");
    }
    train.validate();
    aggregator.validate();
}

SplitRun run_split(const Cohort& cohort, std::span<const InstanceBag> bags, Variant variant, int horizon, int split,
                   const ExperimentConfig& cfg, double positive_fraction) {
    cfg.validate();
    if (bags.size() != cohort.patients.size()) {
        throw Error(ErrorKind::ShapeMismatch, "bags are not aligned with the cohort");
    }
    SplitRun run;
    run.split = split;
    run.horizon = horizon;
    run.variant = variant;
    run.positive_fraction = positive_fraction;

    std::vector<int> labels;
    for (std::size_t i = 0; i < bags.size(); ++i) {
        const Label l = bags[i].label(horizon);
        if (l == Label::Excluded || bags[i].instances.empty()) {
            continue;
        }
        run.eligible.push_back(i);
        labels.push_back(l == Label::Positive ? 1 : 0);
    }
    run.plan = stratified_split(labels, derive_seed(cfg.seed, kSplitStream + static_cast<std::uint64_t>(split)),
                                cfg.test_fraction);
    const auto train_side = positive_fraction < 1.0
                                ? subsample_positives(run.plan.train, labels, positive_fraction,
                                                      derive_seed(cfg.seed, kSubsampleStream + static_cast<std::uint64_t>(split)))
                                : run.plan.train;

    std::vector<InstanceBag> train_bags;
    std::vector<int> train_labels;
    for (std::size_t t : train_side) {
        train_bags.push_back(bags[run.eligible[t]]);
        train_labels.push_back(labels[t]);
    }
    run.beats = train_bags.front().instances.front().beats;

    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, kTrainStream + static_cast<std::uint64_t>(split));
    tc.aggregator = cfg.aggregator;
    run.training = train(variant, train_bags, train_labels, tc);

    for (std::size_t t : run.plan.test) {
        const std::size_t patient = run.eligible[t];
        run.test_patients.push_back(patient);
        run.test_labels.push_back(labels[t]);
        if (variant == Variant::SET) {
            run.test_scores.push_back(set_forward(run.training.params, bags[patient]));
        } else {
            auto probs = instance_probabilities(bags[patient], run.training.params);
            run.test_scores.push_back(aggregate_scores(probs, cfg.aggregator));
            run.test_instance_probs.push_back(std::move(probs));
        }
    }
    return run;
}

std::vector<SplitRun> run_splits(const Cohort& cohort, std::span<const InstanceBag> bags, Variant variant, int horizon,
                                 const ExperimentConfig& cfg, double positive_fraction) {
    std::vector<SplitRun> runs;
    for (int s = 0; s < cfg.n_splits; ++s) {
        runs.push_back(run_split(cohort, bags, variant, horizon, s, cfg, positive_fraction));
    }
    return runs;
}

EvalRow evaluate_scores(const SplitRun& run, std::span<const double> scores, const std::string& aggregator_label) {
    EvalRow row;
    row.split = run.split;
    row.horizon = run.horizon;
    row.variant = run.variant;
    row.beats = run.beats;
    row.aggregator = run.variant == Variant::SET ? "learned_mean_pool" : aggregator_label;
    row.positive_fraction = run.positive_fraction;
    row.auc = roc_auc(scores, run.test_labels);
    row.n_test = scores.size();

    std::vector<RiskScore> risk;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        risk.push_back({"", run.horizon, scores[i], false});
    }
    risk = designate_high_risk(std::move(risk));
    std::vector<char> flags_storage;
    for (const auto& r : risk) {
        flags_storage.push_back(r.high_risk ? 1 : 0);
        row.flagged += r.high_risk ? 1 : 0;
    }
    std::unique_ptr<bool[]> flags(new bool[flags_storage.size()]);
    for (std::size_t i = 0; i < flags_storage.size(); ++i) {
        flags[i] = flags_storage[i] != 0;
    }
    row.odds = odds_ratio(std::span<const bool>(flags.get(), flags_storage.size()), run.test_labels);
    return row;
}

EvalRow evaluate_run(const SplitRun& run, const ExperimentConfig& cfg) {
    return evaluate_scores(run, run.test_scores, cfg.aggregator.label());
}

EvalReport evaluate_cohort(const Cohort& cohort, Variant variant, std::span<const int> horizons,
                           const ExperimentConfig& cfg) {
    cfg.validate();
    const auto bags = build_bags(cohort, cfg.beats, cfg.instance_cap);
    EvalReport report;
    for (int h : horizons) {
        for (int s = 0; s < cfg.n_splits; ++s) {
            report.push_back(evaluate_run(run_split(cohort, bags, variant, h, s, cfg), cfg));
        }
    }
    return report;
}

SweepCell summarize(const std::string& sweep, std::span<const SplitRun> runs, std::span<const double> aucs,
                    const std::string& aggregator_label) {
    if (runs.empty()) {
        throw Error(ErrorKind::Config, "no runs to summarize");
    }
    SweepCell cell;
    cell.sweep = sweep;
    cell.horizon = runs.front().horizon;
    cell.variant = runs.front().variant;
    cell.beats = runs.front().beats;
    cell.aggregator = runs.front().variant == Variant::SET ? "learned_mean_pool" : aggregator_label;
    cell.positive_fraction = runs.front().positive_fraction;
    cell.aucs.assign(aucs.begin(), aucs.end());
    cell.auc_mean = std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
    cell.auc_sd = sample_sd(aucs, cell.auc_mean);
    return cell;
}

namespace {

std::vector<double> run_aucs(std::span<const SplitRun> runs) {
    std::vector<double> aucs;
    for (const auto& r : runs) {
        aucs.push_back(roc_auc(r.test_scores, r.test_labels));
    }
    return aucs;
}

}  // namespace

std::vector<SweepCell> sweep_instance_length(const Cohort& cohort, std::span<const Variant> variants,
                                             std::span<const int> ks, int horizon, const ExperimentConfig& cfg) {
    for (int k : ks) {
        if (k < kMinBeatsPerInstance || k > kMaxBeatsPerInstance) {
            throw Error(ErrorKind::Config, "instance length sweep: k must be in [1, 4], got " + std::to_string(k));
        }
    }
    std::vector<SweepCell> cells;
    for (Variant v : variants) {
        for (int k : ks) {
            ExperimentConfig c = cfg;
            c.beats = k;
            const auto bags = build_bags(cohort, k, c.instance_cap);
            const auto runs = run_splits(cohort, bags, v, horizon, c);
            cells.push_back(summarize("instance_length", runs, run_aucs(runs), c.aggregator.label()));
        }
    }
    return cells;
}

std::vector<SweepCell> sweep_aggregator(std::span<const SplitRun> runs, std::span<const AggregatorSpec> specs) {
    for (const auto& r : runs) {
        if (r.variant == Variant::SET || r.test_instance_probs.size() != r.test_labels.size()) {
            throw Error(ErrorKind::Config, "aggregator sweep needs instance-level runs with cached probabilities");
        }
    }
    std::vector<SweepCell> cells;
    for (const auto& spec : specs) {
        std::vector<double> aucs;
        for (const auto& r : runs) {
            std::vector<double> scores;
            for (const auto& probs : r.test_instance_probs) {
                scores.push_back(aggregate_scores(probs, spec));
            }
            aucs.push_back(roc_auc(scores, r.test_labels));
        }
        cells.push_back(summarize("aggregator", runs, aucs, spec.label()));
    }
    return cells;
}

std::vector<SweepCell> sweep_positive_fraction(const Cohort& cohort, std::span<const InstanceBag> bags, Variant variant,
                                               std::span<const double> fractions, int horizon,
                                               const ExperimentConfig& cfg) {
    std::vector<SweepCell> cells;
    for (double f : fractions) {
        const auto runs = run_splits(cohort, bags, variant, horizon, cfg, f);
        cells.push_back(summarize("positive_fraction", runs, run_aucs(runs), cfg.aggregator.label()));
    }
    return cells;
}

std::vector<AggregatorSpec> robustness_aggregators() {
    return {{AggregatorKind::TopFractionMean, 0.1},
            {AggregatorKind::TopFractionMean, 0.2},
            {AggregatorKind::TopFractionMean, 0.5},
            {AggregatorKind::TopFractionMedian, 0.2}};
}

void write_eval_report_csv(const std::filesystem::path& path, std::span<const EvalRow> rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out.precision(17);
    out << "split,horizon,variant,beats,aggregator,positive_fraction,auc,odds_ratio,or_corrected,a,b,c,d,n_test,flagged\n";
    for (const auto& r : rows) {
        out << r.split << ',' << r.horizon << ',' << to_string(r.variant) << ',' << r.beats << ',' << r.aggregator
            << ',' << r.positive_fraction << ',' << r.auc << ',' << r.odds.value << ',' << (r.odds.corrected ? 1 : 0)
            << ',' << r.odds.a << ',' << r.odds.b << ',' << r.odds.c << ',' << r.odds.d << ',' << r.n_test << ','
            << r.flagged << '\n';
    }
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepCell> cells) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out.precision(17);
    out << "sweep,horizon,variant,beats,aggregator,positive_fraction,auc_mean,auc_sd,n_splits\n";
    for (const auto& c : cells) {
        out << c.sweep << ',' << c.horizon << ',' << to_string(c.variant) << ',' << c.beats << ',' << c.aggregator
            << ',' << c.positive_fraction << ',' << c.auc_mean << ',' << c.auc_sd << ',' << c.aucs.size() << '\n';
    }
}

}  // namespace milrisk
