#pragma once

#include <cstdint>
#include <vector>

#include "tdotag/dsp.hpp"

/// Spectral mode: draw spectrogram frames directly instead of synthesizing IQ samples.
///
/// Tone bins (+-kToneBins around each carrier) get the exact windowed DFT of the carrier
/// plus complex Gaussian noise, per averaged segment. All other bins are drawn from the
/// averaged-periodogram distribution of white noise, sigma^2 * Gamma(K, 1) / K.
/// Each frame is seeded from (seed, absolute frame index), so any frame range can be
/// produced independently of the others.
namespace tdotag::spectral {

inline constexpr int kToneBins = 8;

dsp::Spectrogram synthesize_spectrogram(const std::vector<dsp::Tone>& tones, double noise_floor_db,
                                        const dsp::SpectrumGeometry& geom, dsp::Window window,
                                        std::size_t first_frame, std::size_t frames, std::uint64_t seed);
dsp::Spectrogram synthesize_spectrogram_serial(const std::vector<dsp::Tone>& tones, double noise_floor_db,
                                               const dsp::SpectrumGeometry& geom, dsp::Window window,
                                               std::size_t first_frame, std::size_t frames, std::uint64_t seed);

} // namespace tdotag::spectral
