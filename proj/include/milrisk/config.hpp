#pragma once

#include "milrisk/model.hpp"
#include "milrisk/sweeps.hpp"
#include "milrisk/synthgen.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace milrisk {

enum class SweepKind { InstanceLength, Aggregator, PositiveFraction };

std::string to_string(SweepKind kind);

/// Everything a command needs. Built from `key = value` text; see
/// config_keys() for the documented defaults.
struct RunConfig {
    std::filesystem::path manifest = "corpus/manifest.csv";
    std::filesystem::path corpus_dir = "corpus";
    std::filesystem::path output_dir = "out";
    std::filesystem::path model_file = "out/model.mil";
    int text_sample_rate_hz = 128;

    int horizon_days = 90;
    std::vector<int> eval_horizons{30, 60, 90, 365};
    Variant variant = Variant::CNN;
    ExperimentConfig experiment;
    CohortSpec synth;

    SweepKind sweep = SweepKind::InstanceLength;
    std::vector<Variant> sweep_variants{Variant::CNN};
    std::vector<int> sweep_beats{1, 2, 3, 4};
    std::vector<double> sweep_fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

    /// Applies one `key = value` assignment. Unknown keys and bad values
    /// throw a Config error naming the key.
    void set(std::string_view key, std::string_view value);
    void validate() const;
};

struct ConfigKey {
    std::string name;
    std::string default_value;
    std::string help;
};

/// Every accepted key with its default, in documentation order.
const std::vector<ConfigKey>& config_keys();

RunConfig parse_config_text(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Applies `key=value` overrides in order.
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides);

}  // namespace milrisk
