#include "milrisk/signal_io.hpp"
#include "milrisk/binary.hpp"
#include "milrisk/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

namespace milrisk {

namespace {

constexpr char kMagic[4] = {'E', 'C', 'G', '1'};

}  // namespace

SignalRecord read_ecg1(const std::filesystem::path& path, std::string patient_id) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open signal file " + path.string());
    }
    char magic[4];
    if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
        throw Error(ErrorKind::Format, path.string() + " is not an ECG1 file");
    }
    std::uint32_t rate = 0;
    std::uint64_t count = 0;
    if (!binary::get(in, rate) || !binary::get(in, count)) {
        throw Error(ErrorKind::Format, path.string() + ": truncated ECG1 header");
    }
    SignalRecord rec{std::move(patient_id), static_cast<int>(rate), {}};
    rec.samples.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        float v = 0.0f;
        if (!binary::get(in, v)) {
            throw Error(ErrorKind::Format, path.string() + ": truncated ECG1 payload");
        }
        rec.samples[i] = static_cast<double>(v);
    }
    rec.validate();
    return rec;
}

void write_ecg1(const std::filesystem::path& path, int sample_rate_hz, std::span<const double> samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out.write(kMagic, 4);
    binary::put(out, static_cast<std::uint32_t>(sample_rate_hz));
    binary::put(out, static_cast<std::uint64_t>(samples.size()));
    for (double s : samples) {
        binary::put(out, static_cast<float>(s));
    }
    if (!out) {
        throw Error(ErrorKind::Io, "failed writing " + path.string());
    }
}

SignalRecord read_signal_text(const std::filesystem::path& path, std::string patient_id, int sample_rate_hz) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open signal file " + path.string());
    }
    SignalRecord rec{std::move(patient_id), sample_rate_hz, {}};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto first = std::find_if_not(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
        auto last = std::find_if_not(line.rbegin(), line.rend(), [](unsigned char c) { return std::isspace(c); }).base();
        if (first >= last) {
            continue;
        }
        double v = 0.0;
        const char* b = &*first;
        const char* e = b + (last - first);
        auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc{} || ptr != e) {
            throw Error(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": not a number");
        }
        rec.samples.push_back(v);
    }
    rec.validate();
    return rec;
}

SignalRecord load_signal(const std::filesystem::path& path, std::string patient_id, int text_sample_rate_hz) {
    const std::string ext = path.extension().string();
    if (ext == ".txt" || ext == ".csv") {
        return read_signal_text(path, std::move(patient_id), text_sample_rate_hz);
    }
    return read_ecg1(path, std::move(patient_id));
}

void write_annotations_csv(const std::filesystem::path& path, const BeatAnnotations& ann) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out.precision(17);
    out << "peak_index,amplitude,ectopic\n";
    for (std::size_t j = 0; j < ann.size(); ++j) {
        out << ann.peak_indices[j] << ',' << ann.peak_amplitudes[j] << ','
            << (ann.ectopic_flags[j] ? 1 : 0) << '\n';
    }
}

}  // namespace milrisk
