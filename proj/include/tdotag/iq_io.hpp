#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tdotag/dsp.hpp"

/// IQ capture files and event logs.
namespace tdotag::iq {

enum class Format { cf32, cu8 };

Format parse_format(const std::string& name);

/// Guessed from the extension (.cu8 or anything else as cf32).
Format format_from_path(const std::filesystem::path& path);

/// `<path without extension>.meta.json`
std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Writes samples plus the sidecar with sample_rate_hz, center_freq_hz and start_unix_s.
void write_iq(const std::filesystem::path& path, const dsp::IQStream& stream, Format format);

/// Reads samples and the sidecar. Throws InputError on a missing or malformed file.
dsp::IQStream read_iq(const std::filesystem::path& path, Format format);
dsp::IQStream read_iq(const std::filesystem::path& path);

/// `tag_id,start_s,end_s,mean_freq_hz,peak_snr_db`; times are offset by start_unix_s.
void write_events_csv(const std::filesystem::path& path, const std::vector<dsp::TagEvent>& events,
                      double start_unix_s = 0.0);
std::string events_csv(const std::vector<dsp::TagEvent>& events, double start_unix_s = 0.0);

/// Parses an event log; band edges and detected_at are not stored and read back as 0.
std::vector<dsp::TagEvent> read_events_csv(const std::filesystem::path& path);

} // namespace tdotag::iq
