#include "tdotag/iq_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tdotag/csv.hpp"
#include "tdotag/errors.hpp"

namespace tdotag::iq {

static_assert(std::endian::native == std::endian::little, "cf32 I/O assumes a little-endian host");

Format parse_format(const std::string& name) {
    if (name == "cf32") return Format::cf32;
    if (name == "cu8") return Format::cu8;
    throw InputError("unknown IQ format '" + name + "' (expected cf32 or cu8)");
}

Format format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".cu8" ? Format::cu8 : Format::cf32;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p.replace_extension(".meta.json");
    return p;
}

void write_iq(const std::filesystem::path& path, const dsp::IQStream& s, Format format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    if (format == Format::cf32) {
        std::vector<float> buf;
        buf.reserve(2 * s.samples.size());
        for (const auto& v : s.samples) {
            buf.push_back(static_cast<float>(v.real()));
            buf.push_back(static_cast<float>(v.imag()));
        }
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    } else {
        std::vector<std::uint8_t> buf;
        buf.reserve(2 * s.samples.size());
        auto q = [](double x) {
            return static_cast<std::uint8_t>(std::clamp(std::lround(x * 127.5 + 127.5), 0L, 255L));
        };
        for (const auto& v : s.samples) {
            buf.push_back(q(v.real()));
            buf.push_back(q(v.imag()));
        }
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    nlohmann::json meta{{"sample_rate_hz", s.sample_rate_hz},
                        {"center_freq_hz", s.center_freq_hz},
                        {"start_unix_s", s.start_unix_s}};
    std::ofstream side(sidecar_path(path));
    if (!side) throw InputError("cannot write " + sidecar_path(path).string());
    side << meta.dump(2) << "\n";
}

dsp::IQStream read_iq(const std::filesystem::path& path, Format format) {
    dsp::IQStream s;
    const auto meta_path = sidecar_path(path);
    std::ifstream side(meta_path);
    if (!side) throw InputError("missing sidecar " + meta_path.string());
    try {
        const auto meta = nlohmann::json::parse(side);
        s.sample_rate_hz = meta.at("sample_rate_hz").get<double>();
        s.center_freq_hz = meta.at("center_freq_hz").get<double>();
        s.start_unix_s = meta.value("start_unix_s", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(meta_path.string() + ": " + e.what());
    }

    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (format == Format::cf32) {
        if (raw.size() % (2 * sizeof(float)) != 0) throw InputError(path.string() + ": truncated cf32 sample");
        const std::size_t n = raw.size() / (2 * sizeof(float));
        s.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            float iq[2];
            std::memcpy(iq, raw.data() + i * sizeof iq, sizeof iq);
            s.samples[i] = {iq[0], iq[1]};
        }
    } else {
        if (raw.size() % 2 != 0) throw InputError(path.string() + ": truncated cu8 sample");
        const std::size_t n = raw.size() / 2;
        s.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto a = static_cast<unsigned char>(raw[2 * i]);
            const auto b = static_cast<unsigned char>(raw[2 * i + 1]);
            s.samples[i] = {(a - 127.5) / 127.5, (b - 127.5) / 127.5};
        }
    }
    s.validate();
    return s;
}

dsp::IQStream read_iq(const std::filesystem::path& path) { return read_iq(path, format_from_path(path)); }

std::string events_csv(const std::vector<dsp::TagEvent>& events, double t0) {
    std::ostringstream os;
    os << "tag_id,start_s,end_s,mean_freq_hz,peak_snr_db\n";
    for (const auto& e : events)
        os << e.tag_id << ',' << format_number(t0 + e.start_s) << ',' << format_number(t0 + e.end_s) << ','
           << format_number(e.mean_freq_hz) << ',' << format_number(e.peak_snr_db) << '\n';
    return os.str();
}

void write_events_csv(const std::filesystem::path& path, const std::vector<dsp::TagEvent>& events, double t0) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << events_csv(events, t0);
}

std::vector<dsp::TagEvent> read_events_csv(const std::filesystem::path& path) {
    const auto t = CsvTable::read(path);
    t.require({"tag_id", "start_s", "end_s", "mean_freq_hz", "peak_snr_db"});
    std::vector<dsp::TagEvent> out;
    for (std::size_t r = 0; r < t.rows(); ++r)
        out.push_back({t.text(r, "tag_id"), 0.0, 0.0, t.number(r, "start_s"), t.number(r, "end_s"),
                       t.number(r, "mean_freq_hz"), t.number(r, "peak_snr_db"), 0.0});
    return out;
}

} // namespace tdotag::iq
