#include "milrisk/synthgen.hpp"
#include "milrisk/error.hpp"
#include "milrisk/rng.hpp"
#include "milrisk/signal_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace milrisk {

namespace {

std::string patient_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "P%04zu", i);
    return buf;
}

}  // namespace

BeatTemplate BeatTemplate::normal() {
    return {{{
        {-0.20, 0.025, 0.15},   // P
        {-0.03, 0.010, -0.12},  // Q
        {0.00, 0.012, 1.00},    // R
        {0.03, 0.010, -0.25},   // S
        {0.25, 0.040, 0.30},    // T
    }}};
}

BeatTemplate BeatTemplate::abnormal() {
    BeatTemplate t = normal();
    t.waves[2].width_s = 0.020;
    t.waves[4].amplitude_mv = -0.30;
    return t;
}

std::vector<double> BeatTemplate::render(int sample_rate_hz) const {
    const auto w = window_length(sample_rate_hz);
    std::vector<double> out(w, 0.0);
    const double centre = static_cast<double>(w / 2);
    for (std::size_t j = 0; j < w; ++j) {
        const double t = (static_cast<double>(j) - centre) / sample_rate_hz;
        double v = 0.0;
        for (const Wave& wave : waves) {
            const double z = (t - wave.center_s) / wave.width_s;
            v += wave.amplitude_mv * std::exp(-0.5 * z * z);
        }
        out[j] = v;
    }
    return out;
}

void CohortSpec::validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::Config, what); };
    if (n_patients < 1) bad("synthetic cohort needs at least one patient");
    if (!(prevalence > 0.0 && prevalence < 1.0)) bad("prevalence must be in (0, 1)");
    if (!(abnormal_rate_negative >= 0.0 && abnormal_rate_positive <= 1.0)) bad("abnormal rates must be in [0, 1]");
    if (!(abnormal_rate_positive > abnormal_rate_negative)) bad("positive abnormal rate must exceed the negative one");
    if (!(bpm_min > 0.0 && bpm_max >= bpm_min)) bad("bpm range is invalid");
    if (!(rr_jitter >= 0.0 && rr_jitter < 0.5)) bad("rr_jitter must be in [0, 0.5)");
    if (!(duration_s > 0.0)) bad("duration must be positive");
    if (!(noise_sigma_mv >= 0.0) || !(wander_amplitude_mv >= 0.0) || !(wander_frequency_hz >= 0.0)) {
        bad("noise and wander parameters must be non-negative");
    }
    if (sample_rate_hz < 8) bad("sample rate too low");
    if (event_horizon_days < 1) bad("event horizon must be at least one day");
}

GeneratedPatient generate_patient(const CohortSpec& spec, bool positive, std::uint64_t seed, std::string patient_id) {
    spec.validate();
    Rng rng(seed);
    const int fs = spec.sample_rate_hz;
    const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * fs));
    const std::vector<double> normal = BeatTemplate::normal().render(fs);
    const std::vector<double> abnormal = BeatTemplate::abnormal().render(fs);
    const std::size_t w = normal.size();
    const std::size_t half = w / 2;

    GeneratedPatient out;
    out.signal = {patient_id, fs, std::vector<double>(n, 0.0)};
    out.outcome.patient_id = patient_id;

    const double bpm = rng.uniform(spec.bpm_min, spec.bpm_max);
    const double rr = 60.0 / bpm;
    const double rate = positive ? spec.abnormal_rate_positive : spec.abnormal_rate_negative;
    for (double t = rr / 2.0;; t += rr * (1.0 + spec.rr_jitter * rng.uniform(-1.0, 1.0))) {
        const auto p = static_cast<std::size_t>(std::llround(t * fs));
        if (p >= n) {
            break;
        }
        const bool is_abnormal = rng.uniform() < rate;
        const auto& beat = is_abnormal ? abnormal : normal;
        for (std::size_t j = 0; j < w; ++j) {
            if (p + j < half || p + j - half >= n) {
                continue;
            }
            out.signal.samples[p + j - half] += beat[j];
        }
        out.true_peaks.push_back(p);
        out.abnormal.push_back(is_abnormal);
    }

    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        out.signal.samples[i] += spec.noise_sigma_mv * rng.normal() +
                                 spec.wander_amplitude_mv * std::sin(2.0 * std::numbers::pi * spec.wander_frequency_hz * t + phase);
    }

    if (positive) {
        out.outcome.event = true;
        out.outcome.event_day = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(spec.event_horizon_days)));
    } else {
        out.outcome.event = false;
        out.outcome.censor_day = 400 + static_cast<int>(rng.below(366));
    }
    return out;
}

std::vector<GeneratedPatient> generate_cohort(const CohortSpec& spec) {
    spec.validate();
    const auto n_pos = static_cast<std::size_t>(std::floor(spec.prevalence * static_cast<double>(spec.n_patients) + 0.5));
    std::vector<char> positive(spec.n_patients, 0);
    std::fill(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
    Rng rng(derive_seed(spec.seed, 0));
    rng.shuffle(std::span<char>(positive));

    std::vector<GeneratedPatient> out(spec.n_patients);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < spec.n_patients; ++i) {
        out[i] = generate_patient(spec, positive[i] != 0, derive_seed(spec.seed, i + 1), patient_name(i));
    }
    return out;
}

CorpusPaths write_corpus(const CohortSpec& spec, const std::filesystem::path& dir) {
    const auto patients = generate_cohort(spec);
    std::filesystem::create_directories(dir / "signals");
    CorpusPaths paths{dir / "manifest.csv", dir / "ground_truth.csv"};

    std::vector<ManifestRow> rows;
    std::ofstream truth(paths.ground_truth, std::ios::trunc);
    if (!truth) {
        throw Error(ErrorKind::Io, "cannot write " + paths.ground_truth.string());
    }
    truth << "patient_id,peak_index,is_abnormal\n";
    for (const auto& p : patients) {
        const std::filesystem::path rel = std::filesystem::path("signals") / (p.signal.patient_id + ".ecg1");
        write_ecg1(dir / rel, p.signal.sample_rate_hz, p.signal.samples);
        rows.push_back({p.signal.patient_id, rel, p.outcome});
        for (std::size_t j = 0; j < p.true_peaks.size(); ++j) {
            truth << p.signal.patient_id << ',' << p.true_peaks[j] << ',' << (p.abnormal[j] ? 1 : 0) << '\n';
        }
    }
    write_manifest(paths.manifest, rows);
    return paths;
}

}  // namespace milrisk
