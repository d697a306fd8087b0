#include "milrisk/config.hpp"
#include "milrisk/csv.hpp"
#include "milrisk/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace milrisk {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw Error(ErrorKind::Config,
                "config key '" + std::string(key) + "': invalid value '" + std::string(value) + "' (expected " +
                    std::string(expected) + ")");
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        bad_value(key, value, "a number");
    }
    return out;
}

template <typename T, typename F>
std::vector<T> parse_list(std::string_view value, F&& one) {
    std::vector<T> out;
    for (const auto& item : csv::split(value)) {
        const std::string t = csv::trim(item);
        if (!t.empty()) {
            out.push_back(one(t));
        }
    }
    return out;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F&& one) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += one(v[i]);
    }
    return out;
}

struct Entry {
    const char* name;
    const char* help;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define MILRISK_NUM(key, field, T, help)                                                              \
    Entry {                                                                                         \
        key, help, [](RunConfig& c, std::string_view v) { c.field = parse_number<T>(key, v); },     \
            [](const RunConfig& c) { return fmt(static_cast<double>(c.field)); }                      \
    }

#define MILRISK_PATH(key, field, help)                                                             \
    Entry {                                                                                        \
        key, help, [](RunConfig& c, std::string_view v) { c.field = std::string(v); },             \
            [](const RunConfig& c) { return c.field.string(); }                                     \
    }

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        MILRISK_PATH("manifest", manifest, "input manifest CSV for preprocess/train/score/eval/sweep"),
        MILRISK_PATH("corpus_dir", corpus_dir, "output directory of synth"),
        MILRISK_PATH("output_dir", output_dir, "directory for reports, scores and caches"),
        MILRISK_PATH("model_file", model_file, "model written by train and read by score"),
        MILRISK_NUM("text_sample_rate_hz", text_sample_rate_hz, int, "sample rate for .txt/.csv signals"),
        MILRISK_NUM("horizon_days", horizon_days, int, "label horizon for train, score and sweep (30, 60, 90, 365)"),
        Entry{"eval_horizons", "horizons evaluated by eval",
         [](RunConfig& c, std::string_view v) {
             c.eval_horizons = parse_list<int>(v, [](std::string_view t) { return parse_number<int>("eval_horizons", t); });
         },
         [](const RunConfig& c) { return join(c.eval_horizons, [](int h) { return std::to_string(h); }); }},
        Entry{"variant", "CNN, LR, FC2, FC3 or SET",
         [](RunConfig& c, std::string_view v) {
             try {
                 c.variant = parse_variant(v);
             } catch (const Error&) {
                 bad_value("variant", v, "CNN, LR, FC2, FC3 or SET");
             }
         },
         [](const RunConfig& c) { return std::string(to_string(c.variant)); }},
        MILRISK_NUM("beats", experiment.beats, int, "beats per instance k, 1 to 4"),
        MILRISK_NUM("instance_cap", experiment.instance_cap, std::size_t, "maximum instances per patient"),
        Entry{"aggregator", "mean or median of the top fraction",
         [](RunConfig& c, std::string_view v) {
             if (v == "mean") c.experiment.aggregator.kind = AggregatorKind::TopFractionMean;
             else if (v == "median") c.experiment.aggregator.kind = AggregatorKind::TopFractionMedian;
             else bad_value("aggregator", v, "mean or median");
         },
         [](const RunConfig& c) {
             return std::string(c.experiment.aggregator.kind == AggregatorKind::TopFractionMean ? "mean" : "median");
         }},
        MILRISK_NUM("aggregator_fraction", experiment.aggregator.fraction, double, "top fraction q, in (0, 1]"),
        MILRISK_NUM("seed", experiment.seed, std::uint64_t, "seed for splits, subsampling and training"),
        MILRISK_NUM("n_splits", experiment.n_splits, int, "number of stratified train/test splits"),
        MILRISK_NUM("test_fraction", experiment.test_fraction, double, "fraction of each class in the test side"),
        MILRISK_NUM("learning_rate", experiment.train.learning_rate, double, "Adam step size"),
        MILRISK_NUM("beta1", experiment.train.beta1, double, "Adam first-moment decay"),
        MILRISK_NUM("beta2", experiment.train.beta2, double, "Adam second-moment decay"),
        MILRISK_NUM("epsilon", experiment.train.epsilon, double, "Adam denominator constant"),
        MILRISK_NUM("batch_size", experiment.train.batch_size, std::size_t, "instances per batch (half positive)"),
        MILRISK_NUM("set_batch_bags", experiment.train.set_batch_bags, std::size_t, "bags per SET batch"),
        MILRISK_NUM("max_epochs", experiment.train.max_epochs, int, "epoch limit; 0 returns the initial model"),
        MILRISK_NUM("early_stop_patience", experiment.train.early_stop_patience, int,
                    "epochs without validation AUC gain before stopping"),
        MILRISK_NUM("validation_fraction", experiment.train.validation_fraction, double,
                    "training patients held out for early stopping"),
        MILRISK_NUM("synth_patients", synth.n_patients, std::size_t, "synthetic cohort size"),
        MILRISK_NUM("synth_prevalence", synth.prevalence, double, "fraction of positive patients"),
        MILRISK_NUM("synth_abnormal_rate_positive", synth.abnormal_rate_positive, double,
                    "abnormal-beat rate of positives"),
        MILRISK_NUM("synth_abnormal_rate_negative", synth.abnormal_rate_negative, double,
                    "abnormal-beat rate of negatives"),
        MILRISK_NUM("synth_bpm_min", synth.bpm_min, double, "lowest mean heart rate"),
        MILRISK_NUM("synth_bpm_max", synth.bpm_max, double, "highest mean heart rate"),
        MILRISK_NUM("synth_rr_jitter", synth.rr_jitter, double, "RR jitter as a fraction of the mean interval"),
        MILRISK_NUM("synth_duration_s", synth.duration_s, double, "record length in seconds"),
        MILRISK_NUM("synth_noise_sigma_mv", synth.noise_sigma_mv, double, "white noise sigma"),
        MILRISK_NUM("synth_wander_amplitude_mv", synth.wander_amplitude_mv, double, "baseline wander amplitude"),
        MILRISK_NUM("synth_wander_frequency_hz", synth.wander_frequency_hz, double, "baseline wander frequency"),
        MILRISK_NUM("synth_sample_rate_hz", synth.sample_rate_hz, int, "synthetic sample rate"),
        MILRISK_NUM("synth_event_horizon_days", synth.event_horizon_days, int, "positives die on a day in [1, this]"),
        MILRISK_NUM("synth_seed", synth.seed, std::uint64_t, "corpus seed"),
        Entry{"sweep", "instance_length, aggregator or positive_fraction",
         [](RunConfig& c, std::string_view v) {
             if (v == "instance_length") c.sweep = SweepKind::InstanceLength;
             else if (v == "aggregator") c.sweep = SweepKind::Aggregator;
             else if (v == "positive_fraction") c.sweep = SweepKind::PositiveFraction;
             else bad_value("sweep", v, "instance_length, aggregator or positive_fraction");
         },
         [](const RunConfig& c) { return to_string(c.sweep); }},
        Entry{"sweep_variants", "variants retrained by the instance_length sweep",
         [](RunConfig& c, std::string_view v) {
             c.sweep_variants = parse_list<Variant>(v, [](std::string_view t) {
                 try {
                     return parse_variant(t);
                 } catch (const Error&) {
                     bad_value("sweep_variants", t, "CNN, LR, FC2, FC3 or SET");
                 }
             });
         },
         [](const RunConfig& c) { return join(c.sweep_variants, [](Variant v) { return std::string(to_string(v)); }); }},
        Entry{"sweep_beats", "k values of the instance_length sweep",
         [](RunConfig& c, std::string_view v) {
             c.sweep_beats = parse_list<int>(v, [](std::string_view t) { return parse_number<int>("sweep_beats", t); });
         },
         [](const RunConfig& c) { return join(c.sweep_beats, [](int k) { return std::to_string(k); }); }},
        Entry{"sweep_fractions", "positive fractions of the positive_fraction sweep",
         [](RunConfig& c, std::string_view v) {
             c.sweep_fractions =
                 parse_list<double>(v, [](std::string_view t) { return parse_number<double>("sweep_fractions", t); });
         },
         [](const RunConfig& c) { return join(c.sweep_fractions, [](double f) { return fmt(f); }); }},
    };
    return table;
}

#undef MILRISK_NUM
#undef MILRISK_PATH

}  // namespace

std::string to_string(SweepKind kind) {
    switch (kind) {
        case SweepKind::InstanceLength: return "instance_length";
        case SweepKind::Aggregator: return "aggregator";
        case SweepKind::PositiveFraction: return "positive_fraction";
    }
    return "?";
}

void RunConfig::set(std::string_view key, std::string_view value) {
    for (const auto& e : entries()) {
        if (key == e.name) {
            e.set(*this, value);
            return;
        }
    }
    throw Error(ErrorKind::Config, "unknown config key '" + std::string(key) + "'");
}

void RunConfig::validate() const {
    auto check_horizon = [](int h) {
        for (int d : kHorizonsDays) {
            if (d == h) return;
        }
        throw Error(ErrorKind::Config, "horizon must be one of 30, 60, 90, 365, got " + std::to_string(h));
    };
    check_horizon(horizon_days);
    if (eval_horizons.empty()) {
        throw Error(ErrorKind::Config, "eval_horizons is empty");
    }
    for (int h : eval_horizons) check_horizon(h);
    if (text_sample_rate_hz <= 0) {
        throw Error(ErrorKind::Config, "text_sample_rate_hz must be positive");
    }
    if (sweep_variants.empty() || sweep_beats.empty() || sweep_fractions.empty()) {
        throw Error(ErrorKind::Config, "sweep lists must not be empty");
    }
    experiment.validate();
    synth.validate();
}

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        const RunConfig defaults;
        std::vector<ConfigKey> out;
        for (const auto& e : entries()) {
            out.push_back({e.name, e.get(defaults), e.help});
        }
        return out;
    }();
    return keys;
}

RunConfig parse_config_text(std::string_view text) {
    RunConfig cfg;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        const std::string trimmed = csv::trim(line);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::Config, "config line " + std::to_string(line_no) + ": expected key = value");
        }
        cfg.set(csv::trim(trimmed.substr(0, eq)), csv::trim(trimmed.substr(eq + 1)));
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Config, "cannot read config " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::Config, "override '" + o + "' is not key=value");
        }
        const std::string_view sv(o);
        cfg.set(csv::trim(sv.substr(0, eq)), csv::trim(sv.substr(eq + 1)));
    }
}

}  // namespace milrisk
