#pragma once

#include "milrisk/signal.hpp"

#include <filesystem>
#include <string>

namespace milrisk {

// ECG1 layout, little-endian: "ECG1", u32 sample_rate_hz, u64 sample_count,
// sample_count x f32 samples.

SignalRecord read_ecg1(const std::filesystem::path& path, std::string patient_id);
void write_ecg1(const std::filesystem::path& path, int sample_rate_hz, std::span<const double> samples);

/// One decimal sample per line; blank lines are skipped.
SignalRecord read_signal_text(const std::filesystem::path& path, std::string patient_id, int sample_rate_hz);

/// Dispatch on extension: ".txt"/".csv" use the text loader, anything else ECG1.
SignalRecord load_signal(const std::filesystem::path& path, std::string patient_id, int text_sample_rate_hz);

/// `peak_index,amplitude,ectopic` rows.
void write_annotations_csv(const std::filesystem::path& path, const BeatAnnotations& ann);

}  // namespace milrisk
