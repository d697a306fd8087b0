#pragma once

#include "milrisk/instances.hpp"
#include "milrisk/signal.hpp"
#include "milrisk/synthgen.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace milrisk {

/// A preprocessed patient.
struct PatientRecord {
    OutcomeRecord outcome;
    CleanSignal clean;
    BeatAnnotations beats;
};

struct Cohort {
    std::vector<PatientRecord> patients;
    std::vector<std::string> skipped;  // "id: reason" for signals that failed preprocessing
};

/// Preprocesses every signal (in parallel); failures are recorded in `skipped`.
Cohort build_cohort(const std::vector<SignalRecord>& signals, const std::vector<OutcomeRecord>& outcomes);

Cohort load_cohort(const std::filesystem::path& manifest, int text_sample_rate_hz = 128);
Cohort cohort_from_generated(const std::vector<GeneratedPatient>& patients);

/// One bag per patient, index-aligned with the cohort. Patients without a run
/// of k usable beats get an empty bag.
std::vector<InstanceBag> build_bags(const Cohort& cohort, int k, std::size_t cap = kDefaultInstanceCap);

}  // namespace milrisk
