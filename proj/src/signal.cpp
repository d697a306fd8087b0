#include "milrisk/signal.hpp"
#include "milrisk/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace milrisk {

namespace {

constexpr double kRefractorySeconds = 0.2;
constexpr double kIntegrationSeconds = 0.15;
constexpr double kRefineSeconds = 0.1;
constexpr double kThresholdFactor = 0.5;
constexpr std::size_t kRecentPeaks = 8;
constexpr double kEctopicTolerance = 0.2;
constexpr std::size_t kEctopicNeighbours = 10;

std::size_t refractory_samples(int fs) {
    return static_cast<std::size_t>(std::lround(kRefractorySeconds * fs));
}

// Up to `count` intervals nearest to `self`, excluding it, drawn from [lo, hi).
std::vector<double> neighbour_intervals(const std::vector<double>& intervals, std::size_t self,
                                        std::size_t lo, std::size_t hi, std::size_t count) {
    std::vector<double> out;
    out.reserve(count);
    std::size_t left = self;
    std::size_t right = self + 1;
    bool take_left = true;
    while (out.size() < count && (left > lo || right < hi)) {
        if (take_left && left > lo) {
            out.push_back(intervals[--left]);
        } else if (!take_left && right < hi) {
            out.push_back(intervals[right++]);
        } else if (left > lo) {
            out.push_back(intervals[--left]);
        } else {
            out.push_back(intervals[right++]);
        }
        take_left = !take_left;
    }
    return out;
}

}  // namespace

void SignalRecord::validate() const {
    if (sample_rate_hz <= 0) {
        throw Error(ErrorKind::Format, "sample rate must be positive for '" + patient_id + "'");
    }
    if (samples.empty()) {
        throw Error(ErrorKind::Format, "signal '" + patient_id + "' has no samples");
    }
    for (double s : samples) {
        if (!std::isfinite(s)) {
            throw Error(ErrorKind::Format, "signal '" + patient_id + "' contains a non-finite sample");
        }
    }
}

std::size_t BeatAnnotations::usable_count() const {
    return static_cast<std::size_t>(std::count(ectopic_flags.begin(), ectopic_flags.end(), false));
}

std::size_t odd_window(double seconds, int fs) {
    const auto half = static_cast<std::size_t>(std::floor(seconds * fs / 2.0));
    return 2 * half + 1;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    const double upper = values[mid];
    if (n % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(), values.begin() + mid);
    return 0.5 * (lower + upper);
}

std::vector<double> running_median(std::span<const double> x, std::size_t window) {
    const std::size_t n = x.size();
    const std::size_t half = window / 2;
    std::vector<double> out(n);
    if (n == 0) {
        return out;
    }
    // Sorted copy of the current window; insertion and removal are O(window).
    std::vector<double> sorted;
    sorted.reserve(window + 1);
    for (std::size_t j = 0; j <= std::min(half, n - 1); ++j) {
        sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), x[j]), x[j]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t m = sorted.size();
        out[i] = (m % 2 == 1) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        if (i + half + 1 < n) {
            const double v = x[i + half + 1];
            sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), v), v);
        }
        if (i >= half) {
            const double v = x[i - half];
            sorted.erase(std::lower_bound(sorted.begin(), sorted.end(), v));
        }
    }
    return out;
}

SignalRecord remove_baseline_wander(const SignalRecord& signal) {
    const int fs = signal.sample_rate_hz;
    const std::size_t short_window = odd_window(0.2, fs);
    const std::size_t long_window = odd_window(0.6, fs);
    if (signal.samples.size() < long_window) {
        throw Error(ErrorKind::SignalTooShort,
                    "baseline removal needs at least " + std::to_string(long_window) + " samples");
    }
    const std::vector<double> stage1 = running_median(signal.samples, short_window);
    const std::vector<double> baseline = running_median(stage1, long_window);

    SignalRecord out{signal.patient_id, fs, signal.samples};
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        out.samples[i] -= baseline[i];
    }
    return out;
}

BeatAnnotations detect_r_peaks(const SignalRecord& signal) {
    signal.validate();
    if (signal.samples.size() < static_cast<std::size_t>(2 * signal.sample_rate_hz)) {
        throw Error(ErrorKind::SignalTooShort, "peak detection needs at least 2 s of signal");
    }
    const SignalRecord base = remove_baseline_wander(signal);
    return detect_r_peaks_baseline_free(base.samples, signal.sample_rate_hz);
}

BeatAnnotations detect_r_peaks_baseline_free(std::span<const double> x, int fs) {
    const std::size_t n = x.size();
    if (n < static_cast<std::size_t>(2 * fs)) {
        throw Error(ErrorKind::SignalTooShort, "peak detection needs at least 2 s of signal");
    }

    std::vector<double> energy(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double d = x[i] - x[i - 1];
        energy[i] = d * d;
    }

    // Centred moving-window integration.
    const std::size_t win = odd_window(kIntegrationSeconds, fs);
    const std::size_t half = win / 2;
    std::vector<double> integrated(n, 0.0);
    {
        std::vector<double> prefix(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            prefix[i + 1] = prefix[i] + energy[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = i >= half ? i - half : 0;
            const std::size_t hi = std::min(n, i + half + 1);
            integrated[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(win);
        }
    }

    const double global_max = *std::max_element(integrated.begin(), integrated.end());
    if (!(global_max > 0.0)) {
        throw Error(ErrorKind::NoPeaksFound, "signal has no slope energy");
    }
    // Learning phase: the first 2 s seed the running peak estimate; if they are
    // silent, fall back to the global maximum.
    const auto learn_end = integrated.begin() + 2 * fs;
    double seed_peak = *std::max_element(integrated.begin(), learn_end);
    if (seed_peak < 0.05 * global_max) {
        seed_peak = global_max;
    }

    const std::size_t refractory = refractory_samples(fs);
    std::deque<double> recent{seed_peak};
    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double v = integrated[i];
        if (!(v > integrated[i - 1] && v >= integrated[i + 1])) {
            continue;
        }
        const double mean = std::accumulate(recent.begin(), recent.end(), 0.0) /
                            static_cast<double>(recent.size());
        if (v <= kThresholdFactor * mean) {
            continue;
        }
        if (!candidates.empty() && i - candidates.back() < refractory) {
            if (v > integrated[candidates.back()]) {
                candidates.back() = i;
                recent.back() = v;
            }
            continue;
        }
        candidates.push_back(i);
        recent.push_back(v);
        if (recent.size() > kRecentPeaks) {
            recent.pop_front();
        }
    }
    if (candidates.empty()) {
        throw Error(ErrorKind::NoPeaksFound, "adaptive threshold never crossed");
    }

    const auto reach = static_cast<std::size_t>(std::lround(kRefineSeconds * fs));
    std::vector<std::size_t> refined;
    refined.reserve(candidates.size());
    for (std::size_t c : candidates) {
        const std::size_t lo = c >= reach ? c - reach : 0;
        const std::size_t hi = std::min(n - 1, c + reach);
        std::size_t best = lo;
        for (std::size_t j = lo + 1; j <= hi; ++j) {
            if (x[j] > x[best]) {
                best = j;
            }
        }
        refined.push_back(best);
    }
    std::sort(refined.begin(), refined.end());

    // Refinement can pull two detections together; keep the taller one.
    BeatAnnotations ann;
    for (std::size_t p : refined) {
        if (!ann.peak_indices.empty() && p - ann.peak_indices.back() < refractory) {
            if (x[p] > ann.peak_amplitudes.back()) {
                ann.peak_indices.back() = p;
                ann.peak_amplitudes.back() = x[p];
            }
            continue;
        }
        ann.peak_indices.push_back(p);
        ann.peak_amplitudes.push_back(x[p]);
    }
    ann.ectopic_flags.assign(ann.peak_indices.size(), false);
    return ann;
}

BeatAnnotations flag_ectopic_beats(BeatAnnotations ann, const SignalRecord& signal) {
    const std::size_t count = ann.size();
    if (count < 3) {
        return ann;
    }
    ann.ectopic_flags.resize(count, false);

    // intervals[j] ends at beat j; intervals[0] is unused.
    std::vector<double> intervals(count, 0.0);
    for (std::size_t j = 1; j < count; ++j) {
        intervals[j] = static_cast<double>(ann.peak_indices[j] - ann.peak_indices[j - 1]);
    }
    for (std::size_t j = 1; j < count; ++j) {
        const double local = median(neighbour_intervals(intervals, j, 1, count, kEctopicNeighbours));
        if (std::abs(intervals[j] - local) > kEctopicTolerance * local) {
            ann.ectopic_flags[j] = true;
        }
    }

    const std::size_t half = static_cast<std::size_t>(signal.sample_rate_hz) / 2;
    const std::size_t n = signal.samples.size();
    for (std::size_t j = 0; j < count; ++j) {
        const std::size_t p = ann.peak_indices[j];
        if (p < half || p + half > n) {
            ann.ectopic_flags[j] = true;
        }
    }
    return ann;
}

CleanSignal normalize_amplitude(const SignalRecord& signal, const BeatAnnotations& ann) {
    std::vector<double> amplitudes;
    for (std::size_t j = 0; j < ann.size(); ++j) {
        if (!ann.ectopic_flags[j]) {
            amplitudes.push_back(ann.peak_amplitudes[j]);
        }
    }
    if (amplitudes.empty()) {
        throw Error(ErrorKind::DegenerateAmplitude,
                    "no non-ectopic peaks in '" + signal.patient_id + "'");
    }
    const double divisor = median(std::move(amplitudes));
    if (!(divisor > 1e-12)) {
        throw Error(ErrorKind::DegenerateAmplitude,
                    "median R amplitude " + std::to_string(divisor) + " in '" + signal.patient_id + "'");
    }
    CleanSignal out{signal.patient_id, signal.sample_rate_hz, signal.samples, divisor};
    for (double& s : out.samples) {
        s /= divisor;
    }
    return out;
}

Preprocessed preprocess(const SignalRecord& signal) {
    signal.validate();
    if (signal.samples.size() < static_cast<std::size_t>(2 * signal.sample_rate_hz)) {
        throw Error(ErrorKind::SignalTooShort, "signal '" + signal.patient_id + "' is shorter than 2 s");
    }
    const SignalRecord base = remove_baseline_wander(signal);
    BeatAnnotations beats = detect_r_peaks_baseline_free(base.samples, base.sample_rate_hz);
    beats = flag_ectopic_beats(std::move(beats), base);
    CleanSignal clean = normalize_amplitude(base, beats);
    return {std::move(clean), std::move(beats)};
}

}  // namespace milrisk
