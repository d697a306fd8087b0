#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace milrisk {

/// One patient's single-lead waveform in millivolts.
struct SignalRecord {
    std::string patient_id;
    int sample_rate_hz = 128;
    std::vector<double> samples;

    /// Throws Format if the rate is not positive, the record is empty, or a
    /// sample is not finite.
    void validate() const;
};

/// Detected beats. The three sequences always have equal length.
struct BeatAnnotations {
    std::vector<std::size_t> peak_indices;
    std::vector<double> peak_amplitudes;
    std::vector<bool> ectopic_flags;

    std::size_t size() const { return peak_indices.size(); }
    std::size_t usable_count() const;
};

/// Baseline-free, amplitude-normalized signal. The median non-ectopic peak
/// amplitude of `samples` is 1.
struct CleanSignal {
    std::string patient_id;
    int sample_rate_hz = 128;
    std::vector<double> samples;
    double normalization_divisor = 1.0;
};

/// Odd window length covering `seconds` at rate `fs` (at least 1).
std::size_t odd_window(double seconds, int fs);

/// Median with the two middle values averaged for even sizes. Empty input
/// returns NaN.
double median(std::vector<double> values);

/// Centered running median; windows are truncated at the array ends.
std::vector<double> running_median(std::span<const double> x, std::size_t window);

/// Subtract a two-stage (0.2 s then 0.6 s) running-median baseline estimate.
SignalRecord remove_baseline_wander(const SignalRecord& signal);

/// QRS detection on the raw record: baseline removal, derivative, squaring,
/// 0.15 s moving-window integration, adaptive threshold at half the running
/// mean of recent integrated peak heights, 0.2 s refractory period, then
/// refinement to the local maximum of the baseline-free signal within
/// +/-0.1 s. Ectopic flags are all false on return.
BeatAnnotations detect_r_peaks(const SignalRecord& signal);

/// Same detector applied to an already baseline-free signal.
BeatAnnotations detect_r_peaks_baseline_free(std::span<const double> x, int fs);

/// Flags beats whose preceding RR interval deviates more than 20% from the
/// median of up to 10 neighbouring intervals, and beats whose 1 s centred
/// window would run off the signal. Fewer than 3 peaks pass through unchanged.
BeatAnnotations flag_ectopic_beats(BeatAnnotations ann, const SignalRecord& signal);

/// Divide by the median non-ectopic peak amplitude.
CleanSignal normalize_amplitude(const SignalRecord& signal, const BeatAnnotations& ann);

struct Preprocessed {
    CleanSignal clean;
    BeatAnnotations beats;
};

/// Full cleaning pipeline: baseline removal, detection, ectopic flagging and
/// amplitude normalization.
Preprocessed preprocess(const SignalRecord& signal);

}  // namespace milrisk
