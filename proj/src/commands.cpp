#include "milrisk/commands.hpp"
#include "milrisk/cohort.hpp"
#include "milrisk/error.hpp"
#include "milrisk/signal_io.hpp"

#include <fstream>
#include <iostream>

namespace milrisk {

namespace {

Cohort load(const RunConfig& cfg) {
    auto cohort = load_cohort(cfg.manifest, cfg.text_sample_rate_hz);
    for (const auto& s : cohort.skipped) {
        std::cerr << "skipped " << s << '\n';
    }
    if (cohort.patients.empty()) {
        throw Error(ErrorKind::NoInstances, "no patient in " + cfg.manifest.string() + " survived preprocessing");
    }
    std::cerr << "loaded " << cohort.patients.size() << " patients from " << cfg.manifest.string() << '\n';
    return cohort;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out.precision(17);
    return out;
}

}  // namespace

void cmd_synth(const RunConfig& cfg) {
    cfg.validate();
    const auto paths = write_corpus(cfg.synth, cfg.corpus_dir);
    std::cerr << "wrote " << cfg.synth.n_patients << " patients to " << paths.manifest.string() << '\n';
}

void cmd_preprocess(const RunConfig& cfg) {
    cfg.validate();
    const auto cohort = load(cfg);
    const auto dir = cfg.output_dir / "preprocessed";
    std::filesystem::create_directories(dir);
    auto summary = open_out(dir / "summary.csv");
    summary << "patient_id,beats,ectopic,normalization_divisor\n";
    for (const auto& p : cohort.patients) {
        const auto& id = p.clean.patient_id;
        write_ecg1(dir / (id + ".ecg1"), p.clean.sample_rate_hz, p.clean.samples);
        write_annotations_csv(dir / (id + ".beats.csv"), p.beats);
        summary << id << ',' << p.beats.size() << ',' << (p.beats.size() - p.beats.usable_count()) << ','
                << p.clean.normalization_divisor << '\n';
    }
    std::cerr << "wrote " << dir.string() << '\n';
}

void cmd_train(const RunConfig& cfg) {
    cfg.validate();
    const auto cohort = load(cfg);
    const auto& exp = cfg.experiment;
    const auto bags = build_bags(cohort, exp.beats, exp.instance_cap);
    std::vector<InstanceBag> train_bags;
    std::vector<int> labels;
    for (const auto& bag : bags) {
        const Label l = bag.label(cfg.horizon_days);
        if (l == Label::Excluded || bag.instances.empty()) continue;
        train_bags.push_back(bag);
        labels.push_back(l == Label::Positive ? 1 : 0);
    }
    TrainConfig tc = exp.train;
    tc.seed = exp.seed;
    tc.aggregator = exp.aggregator;
    const auto result = train(cfg.variant, train_bags, labels, tc);

    std::filesystem::create_directories(cfg.output_dir);
    if (cfg.model_file.has_parent_path()) {
        std::filesystem::create_directories(cfg.model_file.parent_path());
    }
    write_model(cfg.model_file, result.params);
    write_history_csv(cfg.output_dir / "history.csv", result.history);
    std::cerr << "trained " << to_string(cfg.variant) << " on " << train_bags.size() << " patients, best epoch "
              << result.best_epoch << ", wrote " << cfg.model_file.string() << '\n';
}

void cmd_score(const RunConfig& cfg) {
    cfg.validate();
    const auto cohort = load(cfg);
    const auto params = read_model(cfg.model_file, cohort.patients.front().clean.sample_rate_hz);
    if (params.arch.beats != cfg.experiment.beats) {
        throw Error(ErrorKind::ShapeMismatch, "model " + cfg.model_file.string() + " expects k = " +
                                                  std::to_string(params.arch.beats) + " beats per instance, config has k = " +
                                                  std::to_string(cfg.experiment.beats));
    }
    const auto bags = build_bags(cohort, cfg.experiment.beats, cfg.experiment.instance_cap);
    std::vector<RiskScore> scores;
    for (const auto& bag : bags) {
        if (bag.instances.empty()) {
            std::cerr << "skipped " << bag.patient_id << ": no instances\n";
            continue;
        }
        scores.push_back(score_patient(bag, params, cfg.experiment.aggregator, cfg.horizon_days));
    }
    scores = designate_high_risk(std::move(scores));
    std::filesystem::create_directories(cfg.output_dir);
    auto out = open_out(cfg.output_dir / "scores.csv");
    out << "patient_id,horizon,score,high_risk\n";
    for (const auto& s : scores) {
        out << s.patient_id << ',' << s.horizon_days << ',' << s.score << ',' << (s.high_risk ? 1 : 0) << '\n';
    }
    std::cerr << "scored " << scores.size() << " patients\n";
}

void cmd_eval(const RunConfig& cfg) {
    cfg.validate();
    const auto cohort = load(cfg);
    const auto report = evaluate_cohort(cohort, cfg.variant, cfg.eval_horizons, cfg.experiment);
    std::filesystem::create_directories(cfg.output_dir);
    write_eval_report_csv(cfg.output_dir / "report.csv", report);
    std::cerr << "wrote " << report.size() << " rows to " << (cfg.output_dir / "report.csv").string() << '\n';
}

void cmd_sweep(const RunConfig& cfg) {
    cfg.validate();
    const auto cohort = load(cfg);
    const auto& exp = cfg.experiment;
    std::vector<SweepCell> cells;
    switch (cfg.sweep) {
        case SweepKind::InstanceLength:
            cells = sweep_instance_length(cohort, cfg.sweep_variants, cfg.sweep_beats, cfg.horizon_days, exp);
            break;
        case SweepKind::Aggregator: {
            if (!is_instance_level(cfg.variant)) {
                throw Error(ErrorKind::Config, "aggregator sweep needs an instance-level variant, not SET");
            }
            const auto bags = build_bags(cohort, exp.beats, exp.instance_cap);
            const auto runs = run_splits(cohort, bags, cfg.variant, cfg.horizon_days, exp);
            cells = sweep_aggregator(runs, robustness_aggregators());
            break;
        }
        case SweepKind::PositiveFraction: {
            const auto bags = build_bags(cohort, exp.beats, exp.instance_cap);
            cells = sweep_positive_fraction(cohort, bags, cfg.variant, cfg.sweep_fractions, cfg.horizon_days, exp);
            break;
        }
    }
    std::filesystem::create_directories(cfg.output_dir);
    const auto path = cfg.output_dir / ("sweep_" + to_string(cfg.sweep) + ".csv");
    write_sweep_csv(path, cells);
    std::cerr << "wrote " << cells.size() << " rows to " << path.string() << '\n';
}

}  // namespace milrisk
