#pragma once

#include "milrisk/signal.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace milrisk {

inline constexpr std::size_t kDefaultInstanceCap = 1000;
inline constexpr int kMinBeatsPerInstance = 1;
inline constexpr int kMaxBeatsPerInstance = 4;
inline constexpr std::array<int, 4> kHorizonsDays{30, 60, 90, 365};

/// k consecutive peak-centred 1 s windows, concatenated.
struct Instance {
    std::string patient_id;
    int beats = 0;
    std::vector<double> values;
    std::size_t start_beat = 0;  // ordinal of the first beat in the annotations
};

enum class Label : std::int8_t { Negative = 0, Positive = 1, Excluded = -1 };

struct OutcomeRecord {
    std::string patient_id;
    bool event = false;
    int event_day = -1;   // meaningful when event
    int censor_day = -1;  // meaningful when !event
};

/// A patient's instances plus outcome labels per horizon.
struct InstanceBag {
    std::string patient_id;
    std::vector<Instance> instances;
    std::map<int, Label> labels;

    std::size_t size() const { return instances.size(); }
    std::size_t instance_length() const { return instances.empty() ? 0 : instances.front().values.size(); }
    Label label(int horizon_days) const;
};

/// Samples per beat window: one second.
inline std::size_t window_length(int sample_rate_hz) { return static_cast<std::size_t>(sample_rate_hz); }

/// Slides a run of k consecutive non-ectopic beats over the annotations and
/// emits the concatenated windows [p - W/2, p + W/2) of each run, keeping the
/// temporally first `cap`. Beats whose window leaves the signal are skipped,
/// and an ectopic beat breaks a run.
std::vector<Instance> extract_instances(const CleanSignal& clean, const BeatAnnotations& ann, int k,
                                        std::size_t cap = kDefaultInstanceCap);

Label derive_label(const OutcomeRecord& rec, int horizon_days);

InstanceBag make_bag(const CleanSignal& clean, const BeatAnnotations& ann, const OutcomeRecord& outcome, int k,
                     std::size_t cap = kDefaultInstanceCap);

struct ManifestRow {
    std::string patient_id;
    std::filesystem::path signal_path;  // as written in the manifest
    OutcomeRecord outcome;
};

/// Header `patient_id,signal_path,event,event_day,censor_day`; fields that do
/// not apply are empty.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows);

/// Relative signal paths resolve against the manifest's directory.
std::filesystem::path resolve_signal_path(const std::filesystem::path& manifest, const ManifestRow& row);

}  // namespace milrisk
