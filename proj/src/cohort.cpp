#include "milrisk/cohort.hpp"
#include "milrisk/error.hpp"
#include "milrisk/signal_io.hpp"

#include <optional>

namespace milrisk {

Cohort build_cohort(const std::vector<SignalRecord>& signals, const std::vector<OutcomeRecord>& outcomes) {
    if (signals.size() != outcomes.size()) {
        throw Error(ErrorKind::ShapeMismatch, "one outcome per signal is required");
    }
    std::vector<std::optional<Preprocessed>> done(signals.size());
    std::vector<std::string> errors(signals.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < signals.size(); ++i) {
        try {
            done[i] = preprocess(signals[i]);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    }
    Cohort cohort;
    for (std::size_t i = 0; i < signals.size(); ++i) {
        if (!done[i]) {
            cohort.skipped.push_back(signals[i].patient_id + ": " + errors[i]);
            continue;
        }
        cohort.patients.push_back({outcomes[i], std::move(done[i]->clean), std::move(done[i]->beats)});
    }
    return cohort;
}

Cohort load_cohort(const std::filesystem::path& manifest, int text_sample_rate_hz) {
    const auto rows = read_manifest(manifest);
    std::vector<SignalRecord> signals;
    std::vector<OutcomeRecord> outcomes;
    for (const auto& row : rows) {
        signals.push_back(load_signal(resolve_signal_path(manifest, row), row.patient_id, text_sample_rate_hz));
        outcomes.push_back(row.outcome);
    }
    return build_cohort(signals, outcomes);
}

Cohort cohort_from_generated(const std::vector<GeneratedPatient>& patients) {
    std::vector<SignalRecord> signals;
    std::vector<OutcomeRecord> outcomes;
    for (const auto& p : patients) {
        signals.push_back(p.signal);
        outcomes.push_back(p.outcome);
    }
    return build_cohort(signals, outcomes);
}

std::vector<InstanceBag> build_bags(const Cohort& cohort, int k, std::size_t cap) {
    if (k < kMinBeatsPerInstance || k > kMaxBeatsPerInstance) {
        throw Error(ErrorKind::Config, "beats per instance must be in [1, 4], got " + std::to_string(k));
    }
    std::vector<InstanceBag> bags(cohort.patients.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < bags.size(); ++i) {
        const auto& p = cohort.patients[i];
        try {
            bags[i] = make_bag(p.clean, p.beats, p.outcome, k, cap);
        } catch (const Error&) {
            // Only NoInstances can occur here; k was checked above.
            bags[i].patient_id = p.clean.patient_id;
            for (int d : kHorizonsDays) {
                bags[i].labels[d] = derive_label(p.outcome, d);
            }
        }
    }
    return bags;
}

}  // namespace milrisk
