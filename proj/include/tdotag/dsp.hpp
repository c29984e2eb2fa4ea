#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

/// Receiver pipeline: IQ synthesis, windowed spectrograms, SNR estimation and event detection.
namespace tdotag::dsp {

using cplx = std::complex<double>;

struct IQStream {
    double sample_rate_hz = 2.56e6;
    double center_freq_hz = 0.0;
    double start_unix_s = 0.0;
    std::vector<cplx> samples;

    void validate() const;
    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

/// A carrier at an absolute frequency, on for samples with n/rate in [start, end).
struct Tone {
    double freq_hz;
    double power_db;
    double start_s;
    double end_s;
};

/// Complex baseband: white Gaussian noise with E|n|^2 = 10^(noise_floor_db/10) plus the tones,
/// each with E|x|^2 = 10^(power_db/10). Noise is drawn in fixed blocks seeded from (seed, block),
/// so the output does not depend on the thread count.
IQStream synthesize_iq(const std::vector<Tone>& tones, double noise_floor_db, double duration_s, double rate_hz,
                       std::uint64_t seed, double center_freq_hz = 0.0);
IQStream synthesize_iq_serial(const std::vector<Tone>& tones, double noise_floor_db, double duration_s,
                              double rate_hz, std::uint64_t seed, double center_freq_hz = 0.0);

inline constexpr std::size_t kSynthBlock = 65536;

enum class Window { blackman_harris_4, rectangular };

Window parse_window(const std::string& name);

std::vector<double> window_coefficients(Window kind, std::size_t n);

/// 10 log10((sum w)^2 / sum w^2): how far a bin-centred tone reads above the
/// per-sample power once the spectrum is normalised so white noise reads its variance.
double processing_gain_db(std::span<const double> w);
double processing_gain_db(Window kind, std::size_t n);

struct StftConfig {
    std::size_t fft_size = 4096;
    std::size_t hop = 2048;
    /// Consecutive FFT segments whose power is averaged into one output frame.
    std::size_t averages = 1;
    Window window = Window::blackman_harris_4;

    void validate() const;
};

/// Frame layout shared by the STFT, the spectral-mode synthesizer and the detector.
struct SpectrumGeometry {
    std::size_t fft_size = 4096;
    std::size_t fft_hop = 2048;
    std::size_t averages = 1;
    double sample_rate_hz = 2.56e6;
    double center_freq_hz = 0.0;

    static SpectrumGeometry from(const StftConfig& cfg, double rate_hz, double center_hz);

    double bin_hz() const { return sample_rate_hz / static_cast<double>(fft_size); }
    /// Output frame stride in samples.
    std::size_t hop() const { return fft_hop * averages; }
    /// Samples covered by one output frame.
    std::size_t span() const { return (averages - 1) * fft_hop + fft_size; }
    /// Absolute frequency of fftshifted bin k.
    double bin_freq(double k) const;
    /// Fractional fftshifted bin index of an absolute frequency.
    double bin_of(double freq_hz) const;
    double frame_start_s(std::size_t frame) const;
    double frame_end_s(std::size_t frame) const;
    double frame_centre_s(std::size_t frame) const;
    /// Number of whole output frames in n samples.
    std::size_t frames_in(std::size_t n_samples) const;
};

/// Frames of fftshifted power in dB, normalised as P_k = mean_j |X_jk|^2 / sum w^2.
struct Spectrogram {
    SpectrumGeometry geom;
    double start_unix_s = 0.0;
    /// Absolute index of row 0; frame times are measured from the stream start.
    std::size_t first_frame = 0;
    std::size_t frames = 0;
    std::vector<double> power_db;

    double bin_hz() const { return geom.bin_hz(); }
    std::size_t hop() const { return geom.hop(); }
    std::size_t fft_size() const { return geom.fft_size; }
    std::span<const double> row(std::size_t i) const { return {power_db.data() + i * geom.fft_size, geom.fft_size}; }
    std::span<double> row(std::size_t i) { return {power_db.data() + i * geom.fft_size, geom.fft_size}; }
    double frame_time_s(std::size_t i) const { return geom.frame_start_s(first_frame + i); }
};

Spectrogram stft(const IQStream& stream, const StftConfig& cfg);
Spectrogram stft_serial(const IQStream& stream, const StftConfig& cfg);

struct SnrEstimate {
    std::size_t peak_bin;
    /// Parabolic-interpolation offset of the true peak from peak_bin, in bins.
    double peak_offset_bins;
    double peak_power_db;
    double noise_power_db;
    double snr_db;
};

/// Noise is the median of bins within +-neighbourhood of the peak but outside +-guard,
/// scaled to the mean of the averaged-periodogram distribution. The peak power is the
/// parabolic interpolation of the dB values around peak_bin.
SnrEstimate estimate_snr(std::span<const double> row_db, std::size_t peak_bin, std::size_t guard,
                         std::size_t neighbourhood = 256, std::size_t averages = 1);

/// Median-to-mean factor for a mean of `averages` exponential bins.
double median_to_mean(std::size_t averages);

/// Tag band, half-open [lo, hi).
struct Band {
    std::string tag_id;
    double lo_hz;
    double hi_hz;

    bool contains(double f) const { return f >= lo_hz && f < hi_hz; }
};

struct DetectorConfig {
    double threshold_db = 5.0;
    std::size_t debounce = 3;
    std::size_t guard = 8;
    std::size_t neighbourhood = 256;

    void validate() const;
};

struct TagEvent {
    std::string tag_id;
    double band_lo_hz;
    double band_hi_hz;
    double start_s;
    double end_s;
    double mean_freq_hz;
    double peak_snr_db;
    /// Time the opening frame was complete.
    double detected_at_s;
};

/// Streaming detector: feed frames in order, collect events. One consumer only.
class EventDetector {
public:
    EventDetector(std::vector<Band> bands, DetectorConfig cfg, SpectrumGeometry geom);

    void push(std::size_t frame, std::span<const double> row_db);
    /// Closes any open event at its last on-frame and returns every event so far, ordered by start.
    std::vector<TagEvent> finish();

    const std::vector<Band>& bands() const { return bands_; }

private:
    struct BandState {
        std::size_t lo_bin = 0;
        std::size_t hi_bin = 0; // exclusive
        bool open = false;
        std::size_t on_run = 0;
        std::size_t off_run = 0;
        std::size_t first_on = 0;
        std::size_t last_on = 0;
        std::size_t opened_at = 0;
        double freq_sum = 0.0;
        std::size_t freq_n = 0;
        double peak_snr = -1e300;
    };

    void close(std::size_t b);

    std::vector<Band> bands_;
    DetectorConfig cfg_;
    SpectrumGeometry geom_;
    std::vector<BandState> state_;
    std::vector<TagEvent> events_;
    std::optional<std::size_t> last_frame_;
};

std::vector<TagEvent> detect_events(const Spectrogram& spec, const std::vector<Band>& bands,
                                    const DetectorConfig& cfg = {});

struct BandOverlap {
    std::string tag_a;
    std::string tag_b;
    double lo_hz;
    double hi_hz;
};

/// Pairwise intersections of half-open bands; empty intersections are left out.
std::vector<BandOverlap> overlap_analysis(const std::vector<Band>& bands);

struct ReceiverConfig {
    double sample_rate_hz = 2.56e6;
    double center_freq_hz = 0.0;
    StftConfig stft{4096, 2048, 16, Window::blackman_harris_4};
    DetectorConfig detector;

    SpectrumGeometry geometry() const { return SpectrumGeometry::from(stft, sample_rate_hz, center_freq_hz); }
};

} // namespace tdotag::dsp
