#include "tdotag/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "tdotag/errors.hpp"
#include "tdotag/fft.hpp"
#include "tdotag/rng.hpp"

namespace tdotag::dsp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPowerFloor = 1e-30;

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
double lin_to_db(double p) { return 10.0 * std::log10(std::max(p, kPowerFloor)); }

struct ToneSpan {
    double offset_hz;
    double amplitude;
    std::size_t n0;
    std::size_t n1;
};

std::vector<ToneSpan> resolve_tones(const std::vector<Tone>& tones, double rate, double center, std::size_t n) {
    std::vector<ToneSpan> out;
    for (const auto& t : tones) {
        const double off = t.freq_hz - center;
        if (std::abs(off) > rate / 2) throw DomainError("synthesize_iq: tone outside +-rate/2 of the centre");
        if (!(t.end_s >= t.start_s)) throw InputError("synthesize_iq: tone end before start");
        const auto clampn = [&](double s) {
            return static_cast<std::size_t>(std::clamp(std::ceil(s * rate), 0.0, static_cast<double>(n)));
        };
        out.push_back({off, std::sqrt(db_to_lin(t.power_db)), clampn(t.start_s), clampn(t.end_s)});
    }
    return out;
}

void synth_block(std::vector<cplx>& x, std::size_t block, const std::vector<ToneSpan>& tones, double noise_sd,
                 double rate, std::uint64_t seed) {
    const std::size_t b0 = block * kSynthBlock;
    const std::size_t b1 = std::min(x.size(), b0 + kSynthBlock);
    auto rng = make_rng(seed, block);
    std::normal_distribution<double> nd(0.0, noise_sd);
    for (std::size_t n = b0; n < b1; ++n) {
        const double re = nd(rng);
        const double im = nd(rng);
        x[n] = {re, im};
    }
    for (const auto& t : tones) {
        const std::size_t s = std::max(b0, t.n0);
        const std::size_t e = std::min(b1, t.n1);
        for (std::size_t n = s; n < e; ++n) {
            // Phase referenced to the absolute sample index keeps blocks independent.
            const double cycles = std::fmod(t.offset_hz * static_cast<double>(n) / rate, 1.0);
            x[n] += std::polar(t.amplitude, kTwoPi * cycles);
        }
    }
}

IQStream synth_common(const std::vector<Tone>& tones, double noise_db, double duration, double rate,
                      std::uint64_t seed, double center, bool parallel) {
    if (!(rate > 0)) throw InputError("synthesize_iq: sample rate must be positive");
    if (!(duration > 0)) throw InputError("synthesize_iq: duration must be positive");
    IQStream s;
    s.sample_rate_hz = rate;
    s.center_freq_hz = center;
    s.samples.resize(static_cast<std::size_t>(std::llround(duration * rate)));
    const auto spans = resolve_tones(tones, rate, center, s.samples.size());
    const double noise_sd = std::sqrt(db_to_lin(noise_db) / 2.0);
    const auto blocks = static_cast<std::ptrdiff_t>((s.samples.size() + kSynthBlock - 1) / kSynthBlock);
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t b = 0; b < blocks; ++b)
            synth_block(s.samples, static_cast<std::size_t>(b), spans, noise_sd, rate, seed);
    } else {
        for (std::ptrdiff_t b = 0; b < blocks; ++b)
            synth_block(s.samples, static_cast<std::size_t>(b), spans, noise_sd, rate, seed);
    }
    return s;
}

} // namespace

void IQStream::validate() const {
    if (!(sample_rate_hz > 0)) throw InputError("iq stream: sample rate must be positive");
    for (const auto& v : samples)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw InputError("iq stream: non-finite sample");
}

IQStream synthesize_iq(const std::vector<Tone>& tones, double noise_db, double duration, double rate,
                       std::uint64_t seed, double center) {
    return synth_common(tones, noise_db, duration, rate, seed, center, true);
}

IQStream synthesize_iq_serial(const std::vector<Tone>& tones, double noise_db, double duration, double rate,
                              std::uint64_t seed, double center) {
    return synth_common(tones, noise_db, duration, rate, seed, center, false);
}

Window parse_window(const std::string& name) {
    if (name == "blackman_harris_4") return Window::blackman_harris_4;
    if (name == "rectangular") return Window::rectangular;
    throw InputError("unknown window '" + name + "'");
}

std::vector<double> window_coefficients(Window kind, std::size_t n) {
    if (n == 0) throw DomainError("window_coefficients: n must be positive");
    std::vector<double> w(n, 1.0);
    if (kind == Window::rectangular || n == 1) return w;
    constexpr double a0 = 0.35875, a1 = 0.48829, a2 = 0.14128, a3 = 0.01168;
    const double m = static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) {
        const double x = kTwoPi * static_cast<double>(k) / m;
        w[k] = a0 - a1 * std::cos(x) + a2 * std::cos(2 * x) - a3 * std::cos(3 * x);
    }
    return w;
}

double processing_gain_db(std::span<const double> w) {
    const double s1 = std::accumulate(w.begin(), w.end(), 0.0);
    const double s2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    return 10.0 * std::log10(s1 * s1 / s2);
}

double processing_gain_db(Window kind, std::size_t n) { return processing_gain_db(window_coefficients(kind, n)); }

void StftConfig::validate() const {
    if (fft_size < 16) throw InputError("stft: fft_size must be at least 16");
    if (hop == 0 || hop > fft_size) throw InputError("stft: hop must lie in [1, fft_size]");
    if (averages == 0) throw InputError("stft: averages must be positive");
}

SpectrumGeometry SpectrumGeometry::from(const StftConfig& cfg, double rate, double center) {
    cfg.validate();
    if (!(rate > 0)) throw InputError("spectrum: sample rate must be positive");
    return {cfg.fft_size, cfg.hop, cfg.averages, rate, center};
}

double SpectrumGeometry::bin_freq(double k) const {
    return center_freq_hz + (k - static_cast<double>(fft_size / 2)) * bin_hz();
}

double SpectrumGeometry::bin_of(double f) const {
    return (f - center_freq_hz) / bin_hz() + static_cast<double>(fft_size / 2);
}

double SpectrumGeometry::frame_start_s(std::size_t frame) const {
    return static_cast<double>(frame) * static_cast<double>(hop()) / sample_rate_hz;
}

double SpectrumGeometry::frame_end_s(std::size_t frame) const {
    return (static_cast<double>(frame) * static_cast<double>(hop()) + static_cast<double>(span())) / sample_rate_hz;
}

double SpectrumGeometry::frame_centre_s(std::size_t frame) const {
    return 0.5 * (frame_start_s(frame) + frame_end_s(frame));
}

std::size_t SpectrumGeometry::frames_in(std::size_t n) const {
    if (n < fft_size) return 0;
    return ((n - fft_size) / fft_hop + 1) / averages;
}

namespace {

void stft_frame(const IQStream& s, const SpectrumGeometry& g, const std::vector<double>& w, double w2,
                std::size_t frame, std::vector<cplx>& in, std::vector<cplx>& out, std::vector<double>& acc,
                std::span<double> row) {
    const std::size_t n = g.fft_size;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < g.averages; ++j) {
        const std::size_t s0 = (frame * g.averages + j) * g.fft_hop;
        for (std::size_t m = 0; m < n; ++m) in[m] = s.samples[s0 + m] * w[m];
        fft::forward(in.data(), out.data(), n);
        for (std::size_t k = 0; k < n; ++k) acc[k] += std::norm(out[k]);
    }
    const double scale = 1.0 / (static_cast<double>(g.averages) * w2);
    for (std::size_t k = 0; k < n; ++k) row[(k + n / 2) % n] = lin_to_db(acc[k] * scale);
}

Spectrogram stft_common(const IQStream& s, const StftConfig& cfg, bool parallel) {
    cfg.validate();
    if (s.samples.size() < cfg.fft_size) throw DomainError("stft: stream shorter than fft_size");
    Spectrogram out;
    out.geom = SpectrumGeometry::from(cfg, s.sample_rate_hz, s.center_freq_hz);
    out.start_unix_s = s.start_unix_s;
    out.frames = out.geom.frames_in(s.samples.size());
    out.power_db.assign(out.frames * cfg.fft_size, 0.0);
    const auto w = window_coefficients(cfg.window, cfg.fft_size);
    const double w2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    const auto frames = static_cast<std::ptrdiff_t>(out.frames);
    const std::size_t n = cfg.fft_size;
    if (parallel) {
#pragma omp parallel
        {
            std::vector<cplx> in(n), buf(n);
            std::vector<double> acc(n);
#pragma omp for schedule(static)
            for (std::ptrdiff_t i = 0; i < frames; ++i) {
                const auto f = static_cast<std::size_t>(i);
                stft_frame(s, out.geom, w, w2, f, in, buf, acc, out.row(f));
            }
        }
    } else {
        std::vector<cplx> in(n), buf(n);
        std::vector<double> acc(n);
        for (std::size_t f = 0; f < out.frames; ++f) stft_frame(s, out.geom, w, w2, f, in, buf, acc, out.row(f));
    }
    return out;
}

} // namespace

Spectrogram stft(const IQStream& s, const StftConfig& cfg) { return stft_common(s, cfg, true); }

Spectrogram stft_serial(const IQStream& s, const StftConfig& cfg) { return stft_common(s, cfg, false); }

double median_to_mean(std::size_t averages) {
    if (averages <= 1) return std::numbers::ln2;
    // Wilson-Hilferty median of Gamma(K, 1/K).
    const double k = static_cast<double>(averages);
    return std::pow(1.0 - 1.0 / (9.0 * k), 3.0);
}

SnrEstimate estimate_snr(std::span<const double> row, std::size_t peak, std::size_t guard, std::size_t nb,
                         std::size_t averages) {
    const std::size_t n = row.size();
    if (peak >= n) throw DomainError("estimate_snr: peak bin outside the frame");
    if (!(guard < n / 4)) throw DomainError("estimate_snr: guard must be below fft_size/4");
    if (nb <= guard) throw DomainError("estimate_snr: neighbourhood must exceed guard");

    std::vector<double> noise;
    const std::size_t lo = peak > nb ? peak - nb : 0;
    const std::size_t hi = std::min(n - 1, peak + nb);
    noise.reserve(2 * nb);
    for (std::size_t k = lo; k <= hi; ++k) {
        const std::size_t d = k > peak ? k - peak : peak - k;
        if (d > guard) noise.push_back(row[k]);
    }
    if (noise.empty()) throw DomainError("estimate_snr: no noise bins outside the guard");
    // Median of dB values is the dB of the median power.
    const auto mid = noise.begin() + static_cast<std::ptrdiff_t>(noise.size() / 2);
    std::nth_element(noise.begin(), mid, noise.end());
    double med = *mid;
    if (noise.size() % 2 == 0) {
        const double below = *std::max_element(noise.begin(), mid);
        med = lin_to_db(0.5 * (db_to_lin(below) + db_to_lin(med)));
    }
    const double noise_db = med - 10.0 * std::log10(median_to_mean(averages));

    double peak_db = row[peak];
    double delta = 0.0;
    if (peak > 0 && peak + 1 < n) {
        const double a = row[peak - 1], b = row[peak], c = row[peak + 1];
        const double den = a - 2.0 * b + c;
        if (den < 0 && b >= a && b >= c) {
            delta = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
            peak_db = b - 0.25 * (a - c) * delta;
        }
    }
    return {peak, delta, peak_db, noise_db, peak_db - noise_db};
}

void DetectorConfig::validate() const {
    if (debounce == 0) throw InputError("detector: debounce must be at least 1 frame");
    if (neighbourhood <= guard) throw InputError("detector: neighbourhood must exceed guard");
}

EventDetector::EventDetector(std::vector<Band> bands, DetectorConfig cfg, SpectrumGeometry geom)
    : bands_(std::move(bands)), cfg_(cfg), geom_(geom) {
    cfg_.validate();
    if (bands_.empty()) throw InputError("detector: no bands");
    const std::size_t n = geom_.fft_size;
    const double span_lo = geom_.bin_freq(0.0);
    const double span_hi = geom_.bin_freq(static_cast<double>(n));
    for (const auto& b : bands_) {
        if (!(b.lo_hz < b.hi_hz)) throw InputError("band " + b.tag_id + ": lo must be below hi");
        if (b.lo_hz < span_lo || b.hi_hz > span_hi)
            throw InputError("band " + b.tag_id + " lies outside the receiver span");
        BandState st;
        auto first_at_or_above = [&](double f) {
            auto k = static_cast<std::ptrdiff_t>(std::ceil(geom_.bin_of(f)));
            while (k > 0 && geom_.bin_freq(static_cast<double>(k - 1)) >= f) --k;
            while (k < static_cast<std::ptrdiff_t>(n) && geom_.bin_freq(static_cast<double>(k)) < f) ++k;
            return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(n)));
        };
        st.lo_bin = first_at_or_above(b.lo_hz);
        st.hi_bin = first_at_or_above(b.hi_hz);
        if (st.lo_bin >= st.hi_bin) throw InputError("band " + b.tag_id + " contains no FFT bin");
        state_.push_back(st);
    }
}

void EventDetector::close(std::size_t b) {
    auto& st = state_[b];
    const double half_hop = 0.5 * static_cast<double>(geom_.hop()) / geom_.sample_rate_hz;
    TagEvent e;
    e.tag_id = bands_[b].tag_id;
    e.band_lo_hz = bands_[b].lo_hz;
    e.band_hi_hz = bands_[b].hi_hz;
    e.start_s = geom_.frame_centre_s(st.first_on) - half_hop;
    e.end_s = geom_.frame_centre_s(st.last_on) + half_hop;
    e.mean_freq_hz = st.freq_sum / static_cast<double>(st.freq_n);
    e.peak_snr_db = st.peak_snr;
    e.detected_at_s = geom_.frame_end_s(st.opened_at);
    events_.push_back(std::move(e));
    const std::size_t lo = st.lo_bin, hi = st.hi_bin;
    st = BandState{};
    st.lo_bin = lo;
    st.hi_bin = hi;
}

void EventDetector::push(std::size_t frame, std::span<const double> row) {
    if (row.size() != geom_.fft_size) throw InputError("detector: frame size mismatch");
    if (last_frame_ && frame <= *last_frame_) throw InputError("detector: frames must arrive in increasing order");
    if (last_frame_ && frame != *last_frame_ + 1) {
        // A gap ends every run: open events close, partial runs are dropped.
        for (std::size_t b = 0; b < bands_.size(); ++b) {
            if (state_[b].open) close(b);
            state_[b].on_run = 0;
        }
    }
    last_frame_ = frame;

    for (std::size_t b = 0; b < bands_.size(); ++b) {
        auto& st = state_[b];
        const auto first = row.begin() + static_cast<std::ptrdiff_t>(st.lo_bin);
        const auto last = row.begin() + static_cast<std::ptrdiff_t>(st.hi_bin);
        const auto k = static_cast<std::size_t>(std::max_element(first, last) - row.begin());
        // A band maximum that is only the skirt of a stronger neighbour does not count.
        const bool local_max = (k == 0 || row[k] >= row[k - 1]) && (k + 1 >= row.size() || row[k] >= row[k + 1]);
        bool on = false;
        double snr = 0.0;
        if (local_max) {
            snr = estimate_snr(row, k, cfg_.guard, cfg_.neighbourhood, geom_.averages).snr_db;
            on = snr >= cfg_.threshold_db;
        }
        if (on) {
            if (!st.open && st.on_run == 0) {
                st.first_on = frame;
                st.freq_sum = 0.0;
                st.freq_n = 0;
                st.peak_snr = snr;
            }
            ++st.on_run;
            st.off_run = 0;
            st.last_on = frame;
            st.freq_sum += geom_.bin_freq(static_cast<double>(k));
            ++st.freq_n;
            st.peak_snr = std::max(st.peak_snr, snr);
            if (!st.open && st.on_run >= cfg_.debounce) {
                st.open = true;
                st.opened_at = frame;
            }
        } else if (st.open) {
            if (++st.off_run >= cfg_.debounce) close(b);
        } else {
            st.on_run = 0;
        }
    }
}

std::vector<TagEvent> EventDetector::finish() {
    for (std::size_t b = 0; b < bands_.size(); ++b) {
        if (state_[b].open) close(b);
        state_[b].on_run = 0;
    }
    auto out = events_;
    std::stable_sort(out.begin(), out.end(), [](const TagEvent& a, const TagEvent& b) {
        return a.start_s != b.start_s ? a.start_s < b.start_s : a.tag_id < b.tag_id;
    });
    return out;
}

std::vector<TagEvent> detect_events(const Spectrogram& spec, const std::vector<Band>& bands,
                                    const DetectorConfig& cfg) {
    EventDetector det(bands, cfg, spec.geom);
    for (std::size_t i = 0; i < spec.frames; ++i) det.push(spec.first_frame + i, spec.row(i));
    return det.finish();
}

std::vector<BandOverlap> overlap_analysis(const std::vector<Band>& bands) {
    std::vector<BandOverlap> out;
    for (std::size_t i = 0; i < bands.size(); ++i)
        for (std::size_t j = i + 1; j < bands.size(); ++j) {
            const double lo = std::max(bands[i].lo_hz, bands[j].lo_hz);
            const double hi = std::min(bands[i].hi_hz, bands[j].hi_hz);
            if (lo < hi) out.push_back({bands[i].tag_id, bands[j].tag_id, lo, hi});
        }
    return out;
}

} // namespace tdotag::dsp
