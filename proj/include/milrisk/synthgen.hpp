#pragma once

#include "milrisk/instances.hpp"
#include "milrisk/signal.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace milrisk {

/// Gaussian bump in seconds relative to the R peak, amplitude in mV.
struct Wave {
    double center_s = 0.0;
    double width_s = 0.01;
    double amplitude_mv = 0.0;
};

/// P, Q, R, S and T waves rendered on a one-second window with the R peak at
/// the centre sample.
struct BeatTemplate {
    std::array<Wave, 5> waves;

    static BeatTemplate normal();
    /// Inverted T wave and a widened R wave.
    static BeatTemplate abnormal();

    std::vector<double> render(int sample_rate_hz) const;
};

struct CohortSpec {
    std::size_t n_patients = 200;
    double prevalence = 0.10;
    double abnormal_rate_positive = 0.30;
    double abnormal_rate_negative = 0.02;
    double bpm_min = 60.0;
    double bpm_max = 90.0;
    double rr_jitter = 0.05;       // +/- fraction of the mean RR interval
    double duration_s = 60.0;
    double noise_sigma_mv = 0.05;
    double wander_amplitude_mv = 0.2;
    double wander_frequency_hz = 0.3;
    int sample_rate_hz = 128;
    int event_horizon_days = 30;   // positives die on a day in [1, this]
    std::uint64_t seed = 1;

    void validate() const;
};

struct GeneratedPatient {
    SignalRecord signal;
    std::vector<std::size_t> true_peaks;
    std::vector<bool> abnormal;
    OutcomeRecord outcome;
};

/// One synthetic patient. Beats follow a jittered RR sequence; each beat is
/// abnormal with the rate for its label; white noise and sinusoidal baseline
/// wander are added on top.
GeneratedPatient generate_patient(const CohortSpec& spec, bool positive, std::uint64_t seed, std::string patient_id);

/// round(prevalence * n) positives at seeded positions; patient i uses the
/// child seed derive_seed(spec.seed, i + 1).
std::vector<GeneratedPatient> generate_cohort(const CohortSpec& spec);

struct CorpusPaths {
    std::filesystem::path manifest;
    std::filesystem::path ground_truth;
};

/// Writes `signals/<id>.ecg1`, `manifest.csv` and `ground_truth.csv`
/// (`patient_id,peak_index,is_abnormal`) under `dir`.
CorpusPaths write_corpus(const CohortSpec& spec, const std::filesystem::path& dir);

}  // namespace milrisk
