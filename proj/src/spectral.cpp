#include "tdotag/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "tdotag/errors.hpp"
#include "tdotag/rng.hpp"

namespace tdotag::spectral {

namespace {

using dsp::cplx;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kTaps = 2 * kToneBins + 1;

struct PreparedTone {
    double offset_hz;
    double amplitude;
    std::size_t n0;
    std::size_t n1;
    std::size_t k0; // unshifted bin nearest the carrier
    std::array<cplx, kTaps> full; // windowed transform at k0-8 .. k0+8 for a fully covered segment
};

struct Context {
    std::vector<PreparedTone> tones;
    std::vector<double> w;
    double w2;
    double sigma2;
    dsp::SpectrumGeometry geom;
};

std::size_t bin_at(const PreparedTone& t, int d, std::size_t n) {
    const auto nn = static_cast<std::ptrdiff_t>(n);
    return static_cast<std::size_t>(((static_cast<std::ptrdiff_t>(t.k0) + d) % nn + nn) % nn);
}

// sum_{m in [m0, m1)} w[m] exp(2 pi i (off/rate - k/N) m)
cplx window_sum(const Context& c, double off, std::size_t k, std::size_t m0, std::size_t m1) {
    const double n = static_cast<double>(c.geom.fft_size);
    const double step = off / c.geom.sample_rate_hz - static_cast<double>(k) / n;
    cplx acc = 0.0;
    for (std::size_t m = m0; m < m1; ++m) {
        const double cyc = step * static_cast<double>(m);
        acc += c.w[m] * std::polar(1.0, kTwoPi * (cyc - std::floor(cyc)));
    }
    return acc;
}

Context prepare(const std::vector<dsp::Tone>& tones, double noise_db, const dsp::SpectrumGeometry& geom,
                dsp::Window window) {
    Context c;
    c.geom = geom;
    c.w = dsp::window_coefficients(window, geom.fft_size);
    c.w2 = std::inner_product(c.w.begin(), c.w.end(), c.w.begin(), 0.0);
    c.sigma2 = std::pow(10.0, noise_db / 10.0);
    const std::size_t n = geom.fft_size;
    const double rate = geom.sample_rate_hz;
    for (const auto& t : tones) {
        const double off = t.freq_hz - geom.center_freq_hz;
        if (std::abs(off) > rate / 2) throw DomainError("spectral: tone outside +-rate/2 of the centre");
        if (!(t.end_s >= t.start_s)) throw InputError("spectral: tone end before start");
        PreparedTone p{};
        p.offset_hz = off;
        p.amplitude = std::sqrt(std::pow(10.0, t.power_db / 10.0));
        p.n0 = static_cast<std::size_t>(std::max(0.0, std::ceil(t.start_s * rate)));
        p.n1 = static_cast<std::size_t>(std::max(0.0, std::ceil(t.end_s * rate)));
        const auto nn = static_cast<long long>(n);
        p.k0 = static_cast<std::size_t>(((std::llround(off / rate * static_cast<double>(n)) % nn) + nn) % nn);
        for (int d = -kToneBins; d <= kToneBins; ++d)
            p.full[static_cast<std::size_t>(d + kToneBins)] = window_sum(c, off, bin_at(p, d, n), 0, n);
        if (p.n1 > p.n0) c.tones.push_back(p);
    }
    return c;
}

void synth_frame(const Context& c, std::size_t frame, std::span<double> row, std::uint64_t seed,
                 std::vector<double>& acc, std::vector<char>& is_tone, std::vector<std::size_t>& tone_bins) {
    const auto& g = c.geom;
    const std::size_t n = g.fft_size;
    const std::size_t f0 = frame * g.hop();
    const std::size_t f1 = f0 + g.span();

    auto rng = make_rng(seed, frame);
    std::fill(is_tone.begin(), is_tone.end(), 0);
    tone_bins.clear();
    bool any = false;
    for (const auto& t : c.tones) {
        if (t.n1 <= f0 || t.n0 >= f1) continue;
        any = true;
        for (int d = -kToneBins; d <= kToneBins; ++d) {
            const std::size_t k = bin_at(t, d, n);
            if (!is_tone[k]) {
                is_tone[k] = 1;
                tone_bins.push_back(k);
            }
        }
    }
    std::sort(tone_bins.begin(), tone_bins.end());

    const double kf = static_cast<double>(g.averages);
    std::gamma_distribution<double> gamma(kf, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        if (is_tone[k]) continue;
        acc[k] = c.sigma2 * gamma(rng) / kf;
    }
    if (any) {
        std::normal_distribution<double> nd(0.0, std::sqrt(c.sigma2 * c.w2 / 2.0));
        for (std::size_t k : tone_bins) acc[k] = 0.0;
        std::vector<cplx> x(n);
        for (std::size_t j = 0; j < g.averages; ++j) {
            const std::size_t s = (frame * g.averages + j) * g.fft_hop;
            for (std::size_t k : tone_bins) x[k] = 0.0;
            for (const auto& t : c.tones) {
                const std::size_t lo = std::max(t.n0, s);
                const std::size_t hi = std::min(t.n1, s + n);
                if (lo >= hi) continue;
                const double cyc = t.offset_hz * static_cast<double>(s) / g.sample_rate_hz;
                const cplx ph = std::polar(t.amplitude, kTwoPi * (cyc - std::floor(cyc)));
                const bool full = lo == s && hi == s + n;
                for (int d = -kToneBins; d <= kToneBins; ++d) {
                    const std::size_t k = bin_at(t, d, n);
                    const cplx wsum = full ? t.full[static_cast<std::size_t>(d + kToneBins)]
                                           : window_sum(c, t.offset_hz, k, lo - s, hi - s);
                    x[k] += ph * wsum;
                }
            }
            for (std::size_t k : tone_bins) {
                const double re = nd(rng);
                const double im = nd(rng);
                acc[k] += std::norm(x[k] + cplx(re, im));
            }
        }
        for (std::size_t k : tone_bins) acc[k] /= kf * c.w2;
    }
    for (std::size_t k = 0; k < n; ++k) row[(k + n / 2) % n] = 10.0 * std::log10(std::max(acc[k], 1e-30));
}

dsp::Spectrogram run(const std::vector<dsp::Tone>& tones, double noise_db, const dsp::SpectrumGeometry& geom,
                     dsp::Window window, std::size_t first, std::size_t frames, std::uint64_t seed, bool parallel) {
    const Context c = prepare(tones, noise_db, geom, window);
    dsp::Spectrogram out;
    out.geom = geom;
    out.first_frame = first;
    out.frames = frames;
    out.power_db.assign(frames * geom.fft_size, 0.0);
    const std::size_t n = geom.fft_size;
    const auto count = static_cast<std::ptrdiff_t>(frames);
    if (parallel) {
#pragma omp parallel
        {
            std::vector<double> acc(n);
            std::vector<char> is_tone(n);
            std::vector<std::size_t> bins;
#pragma omp for schedule(static)
            for (std::ptrdiff_t i = 0; i < count; ++i) {
                const auto f = static_cast<std::size_t>(i);
                synth_frame(c, first + f, out.row(f), seed, acc, is_tone, bins);
            }
        }
    } else {
        std::vector<double> acc(n);
        std::vector<char> is_tone(n);
        std::vector<std::size_t> bins;
        for (std::size_t f = 0; f < frames; ++f) synth_frame(c, first + f, out.row(f), seed, acc, is_tone, bins);
    }
    return out;
}

} // namespace

dsp::Spectrogram synthesize_spectrogram(const std::vector<dsp::Tone>& tones, double noise_db,
                                        const dsp::SpectrumGeometry& geom, dsp::Window window,
                                        std::size_t first_frame, std::size_t frames, std::uint64_t seed) {
    return run(tones, noise_db, geom, window, first_frame, frames, seed, true);
}

dsp::Spectrogram synthesize_spectrogram_serial(const std::vector<dsp::Tone>& tones, double noise_db,
                                               const dsp::SpectrumGeometry& geom, dsp::Window window,
                                               std::size_t first_frame, std::size_t frames, std::uint64_t seed) {
    return run(tones, noise_db, geom, window, first_frame, frames, seed, false);
}

} // namespace tdotag::spectral
