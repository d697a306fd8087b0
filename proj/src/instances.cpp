#include "milrisk/instances.hpp"
#include "milrisk/csv.hpp"
#include "milrisk/error.hpp"

#include <charconv>
#include <fstream>

namespace milrisk {

namespace csv {

std::vector<std::string> split(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace csv

namespace {

int parse_day(const std::string& field, const std::string& what, std::size_t line_no) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || v < 0) {
        throw Error(ErrorKind::Format, "manifest line " + std::to_string(line_no) + ": bad " + what + " '" + field + "'");
    }
    return v;
}

}  // namespace

Label InstanceBag::label(int horizon_days) const {
    auto it = labels.find(horizon_days);
    return it == labels.end() ? Label::Excluded : it->second;
}

std::vector<Instance> extract_instances(const CleanSignal& clean, const BeatAnnotations& ann, int k,
                                        std::size_t cap) {
    if (k < kMinBeatsPerInstance || k > kMaxBeatsPerInstance) {
        throw Error(ErrorKind::Config, "beats per instance must be in [1, 4], got " + std::to_string(k));
    }
    if (cap < 1) {
        throw Error(ErrorKind::Config, "instance cap must be at least 1");
    }
    const std::size_t w = window_length(clean.sample_rate_hz);
    const std::size_t half = w / 2;
    const std::size_t n = clean.samples.size();
    const auto beats = static_cast<std::size_t>(k);

    auto usable = [&](std::size_t j) {
        const std::size_t p = ann.peak_indices[j];
        return !ann.ectopic_flags[j] && p >= half && p - half + w <= n;
    };

    std::vector<Instance> out;
    std::size_t run = 0;  // usable beats ending at j
    for (std::size_t j = 0; j < ann.size() && out.size() < cap; ++j) {
        run = usable(j) ? run + 1 : 0;
        if (run < beats) {
            continue;
        }
        const std::size_t first = j + 1 - beats;
        Instance inst{clean.patient_id, k, {}, first};
        inst.values.reserve(beats * w);
        for (std::size_t b = first; b <= j; ++b) {
            const std::size_t start = ann.peak_indices[b] - half;
            inst.values.insert(inst.values.end(), clean.samples.begin() + static_cast<std::ptrdiff_t>(start),
                               clean.samples.begin() + static_cast<std::ptrdiff_t>(start + w));
        }
        out.push_back(std::move(inst));
    }
    if (out.empty()) {
        throw Error(ErrorKind::NoInstances, "no run of " + std::to_string(k) + " usable beats in '" +
                                                clean.patient_id + "'");
    }
    return out;
}

Label derive_label(const OutcomeRecord& rec, int horizon_days) {
    if (rec.event) {
        return rec.event_day <= horizon_days ? Label::Positive : Label::Negative;
    }
    return rec.censor_day >= horizon_days ? Label::Negative : Label::Excluded;
}

InstanceBag make_bag(const CleanSignal& clean, const BeatAnnotations& ann, const OutcomeRecord& outcome, int k,
                     std::size_t cap) {
    InstanceBag bag{clean.patient_id, extract_instances(clean, ann, k, cap), {}};
    for (int d : kHorizonsDays) {
        bag.labels[d] = derive_label(outcome, d);
    }
    return bag;
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open manifest " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || csv::trim(line) != "patient_id,signal_path,event,event_day,censor_day") {
        throw Error(ErrorKind::Format, "manifest " + path.string() + " has an unexpected header");
    }
    std::vector<ManifestRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) {
            continue;
        }
        const auto f = csv::split(line);
        if (f.size() != 5) {
            throw Error(ErrorKind::Format, "manifest line " + std::to_string(line_no) + ": expected 5 fields");
        }
        ManifestRow row;
        row.patient_id = f[0];
        row.signal_path = f[1];
        row.outcome.patient_id = f[0];
        if (f[2] != "0" && f[2] != "1") {
            throw Error(ErrorKind::Format, "manifest line " + std::to_string(line_no) + ": event must be 0 or 1");
        }
        row.outcome.event = f[2] == "1";
        if (row.outcome.event) {
            row.outcome.event_day = parse_day(f[3], "event_day", line_no);
        } else {
            row.outcome.censor_day = parse_day(f[4], "censor_day", line_no);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write manifest " + path.string());
    }
    out << "patient_id,signal_path,event,event_day,censor_day\n";
    for (const auto& r : rows) {
        out << r.patient_id << ',' << r.signal_path.generic_string() << ',' << (r.outcome.event ? 1 : 0) << ',';
        if (r.outcome.event) {
            out << r.outcome.event_day << ",\n";
        } else {
            out << ',' << r.outcome.censor_day << '\n';
        }
    }
}

std::filesystem::path resolve_signal_path(const std::filesystem::path& manifest, const ManifestRow& row) {
    if (row.signal_path.is_absolute()) {
        return row.signal_path;
    }
    return manifest.parent_path() / row.signal_path;
}

}  // namespace milrisk
