#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "test_util.hpp"
#include "tdotag/dsp.hpp"
#include "tdotag/errors.hpp"
#include "tdotag/fft.hpp"
#include "tdotag/iq_io.hpp"
#include "tdotag/rng.hpp"
#include "tdotag/spectral.hpp"

using namespace tdotag;
using namespace tdotag::dsp;

namespace {

std::vector<cplx> naive_dft(const std::vector<cplx>& x) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / static_cast<double>(n);
            acc += x[j] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

std::vector<cplx> random_signal(std::size_t n, std::uint64_t seed) {
    auto r = make_rng(seed);
    std::normal_distribution<double> g;
    std::vector<cplx> x(n);
    for (auto& v : x) v = {g(r), g(r)};
    return x;
}

std::size_t peak_bin(std::span<const double> row) {
    return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

} // namespace

TEST_SUITE("receiver-dsp") {

TEST_CASE("FFT matches a naive DFT") {
    for (std::size_t n : {1u, 2u, 7u, 16u, 60u, 256u, 1000u}) {
        const auto x = random_signal(n, n);
        std::vector<cplx> y(n);
        fft::forward(x.data(), y.data(), n);
        const auto ref = naive_dft(x);
        double err = 0, scale = 0;
        for (std::size_t k = 0; k < n; ++k) {
            err = std::max(err, std::abs(y[k] - ref[k]));
            scale = std::max(scale, std::abs(ref[k]));
        }
        CHECK(err <= 1e-9 * std::max(1.0, scale));
    }
}

TEST_CASE("Parseval holds to 1e-6") {
    for (std::size_t n : {64u, 4096u}) {
        const auto x = random_signal(n, 99 + n);
        std::vector<cplx> y(n);
        fft::forward(x.data(), y.data(), n);
        double ex = 0, ey = 0;
        for (std::size_t i = 0; i < n; ++i) {
            ex += std::norm(x[i]);
            ey += std::norm(y[i]);
        }
        CHECK(std::abs(ey / static_cast<double>(n) - ex) / ex <= 1e-6);
    }
}

TEST_CASE("window coefficients") {
    const auto w = window_coefficients(Window::blackman_harris_4, 4096);
    REQUIRE(w.size() == 4096);
    CHECK(w[0] == doctest::Approx(6e-5).epsilon(0.1));
    CHECK(*std::max_element(w.begin(), w.end()) == doctest::Approx(1.0).epsilon(1e-3));
    const auto r = window_coefficients(Window::rectangular, 128);
    CHECK(std::all_of(r.begin(), r.end(), [](double v) { return v == 1.0; }));
    CHECK(processing_gain_db(Window::rectangular, 1024) == doctest::Approx(10 * std::log10(1024.0)));
    CHECK(processing_gain_db(Window::blackman_harris_4, 4096) == doctest::Approx(33.1).epsilon(0.002));
    CHECK(parse_window("rectangular") == Window::rectangular);
    CHECK_THROWS_AS(parse_window("hann-ish"), InputError);
}

TEST_CASE("synthesized IQ has the requested powers") {
    const auto s = synthesize_iq({}, -20, 0.1, 1e6, 3);
    REQUIRE(s.samples.size() == 100000);
    double p = 0;
    for (auto v : s.samples) p += std::norm(v);
    CHECK(10 * std::log10(p / 1e5) == doctest::Approx(-20).epsilon(0.01));

    const auto t = synthesize_iq({{100e3, 0, 0.0, 0.05}}, -200, 0.1, 1e6, 3);
    double on = 0, off = 0;
    for (std::size_t i = 0; i < 50000; ++i) on += std::norm(t.samples[i]);
    for (std::size_t i = 50000; i < 100000; ++i) off += std::norm(t.samples[i]);
    CHECK(on / 50000 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(off / 50000 < 1e-15);
}

TEST_CASE("tones are recovered within one bin at the default geometry") {
    const double rate = 2.56e6, noise = -100;
    const double pg = processing_gain_db(Window::blackman_harris_4, 4096);
    auto r = make_rng(44);
    for (int trial = 0; trial < 20; ++trial) {
        const double f = (uniform01(r) - 0.5) * 2.4e6;
        const auto s = synthesize_iq({{f, noise + 20 - pg, 0, 1}}, noise, 4096 * 3 / rate, rate, 10 + trial);
        const auto spec = stft(s, {4096, 2048, 1, Window::blackman_harris_4});
        CHECK(spec.bin_hz() == 625.0);
        for (std::size_t fr = 0; fr < spec.frames; ++fr) {
            const auto k = peak_bin(spec.row(fr));
            CHECK(std::abs(spec.geom.bin_freq(static_cast<double>(k)) - f) <= spec.bin_hz());
        }
    }
}

TEST_CASE("estimate_snr is within 1 dB for tones of 15 dB and more") {
    const double rate = 2.56e6, noise = -100;
    const double pg = processing_gain_db(Window::blackman_harris_4, 4096);
    auto r = make_rng(45);
    for (double snr : {15.0, 20.0, 25.0, 30.0, 40.0}) {
        for (int trial = 0; trial < 6; ++trial) {
            const double f = (uniform01(r) - 0.5) * 2e6;
            const auto s = synthesize_iq({{f, noise + snr - pg, 0, 1}}, noise, (15 * 2048 + 4096) / rate, rate,
                                         mix_seed(7, static_cast<std::uint64_t>(trial)));
            const auto spec = stft(s, {4096, 2048, 16, Window::blackman_harris_4});
            REQUIRE(spec.frames == 1);
            const auto row = spec.row(0);
            const auto est = estimate_snr(row, peak_bin(row), 8, 256, 16);
            CHECK(std::abs(est.snr_db - snr) <= 1.0);
        }
    }
}

TEST_CASE("spectrogram normalisation reads white noise at its variance") {
    const auto s = synthesize_iq({}, -30, 0.5, 1e6, 8);
    const auto spec = stft(s, {1024, 512, 1, Window::blackman_harris_4});
    double acc = 0;
    for (double v : spec.power_db) acc += std::pow(10.0, v / 10);
    CHECK(10 * std::log10(acc / static_cast<double>(spec.power_db.size())) == doctest::Approx(-30).epsilon(0.005));
}

TEST_CASE("geometry helpers") {
    const SpectrumGeometry g{4096, 2048, 16, 2.56e6, 512.5e6};
    CHECK(g.hop() == 32768);
    CHECK(g.span() == 15 * 2048 + 4096);
    CHECK(g.bin_freq(2048) == 512.5e6);
    CHECK(g.bin_of(g.bin_freq(100.25)) == doctest::Approx(100.25));
    CHECK(g.frames_in(g.span()) == 1);
    CHECK(g.frames_in(g.span() - 1) == 0);
    CHECK(g.frames_in(g.span() + g.hop()) == 2);
}

TEST_CASE("stft rejects bad configs") {
    StftConfig c;
    c.hop = 0;
    CHECK_THROWS_AS(c.validate(), InputError);
    IQStream s;
    s.sample_rate_hz = 0;
    CHECK_THROWS_AS(s.validate(), InputError);
}

TEST_CASE("detector finds each burst once in its own band") {
    const double rate = 256e3, noise = -100;
    const double pg = processing_gain_db(Window::blackman_harris_4, 256);
    const std::vector<Tone> tones{{-50e3, noise + 25 - pg, 0.2, 0.6}, {40e3, noise + 25 - pg, 0.4, 0.9},
                                  {-50e3, noise + 25 - pg, 1.2, 1.5}};
    const auto s = synthesize_iq(tones, noise, 2.0, rate, 4);
    const auto spec = stft(s, {256, 128, 16, Window::blackman_harris_4});
    const std::vector<Band> bands{{"a", -100e3, 0}, {"b", 0, 100e3}};
    DetectorConfig cfg;
    cfg.neighbourhood = 64;
    const auto ev = detect_events(spec, bands, cfg);
    REQUIRE(ev.size() == 3);
    CHECK(ev[0].tag_id == "a");
    CHECK(ev[1].tag_id == "b");
    CHECK(ev[2].tag_id == "a");
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& t = tones[i];
        CHECK(std::abs(ev[i].start_s - t.start_s) < 0.05);
        CHECK(std::abs(ev[i].end_s - t.end_s) < 0.05);
        CHECK(std::abs(ev[i].mean_freq_hz - t.freq_hz) < spec.bin_hz());
        CHECK(ev[i].peak_snr_db > 20);
        CHECK(ev[i].detected_at_s >= ev[i].start_s);
    }
}

TEST_CASE("streaming detector matches the batch call") {
    const double pg = processing_gain_db(Window::blackman_harris_4, 256);
    const auto s = synthesize_iq({{10e3, -100 + 30 - pg, 0.3, 0.8}}, -100, 1.5, 256e3, 9);
    const auto spec = stft(s, {256, 128, 16, Window::blackman_harris_4});
    const std::vector<Band> bands{{"x", 0, 50e3}};
    DetectorConfig cfg;
    cfg.neighbourhood = 64;
    EventDetector det(bands, cfg, spec.geom);
    for (std::size_t i = 0; i < spec.frames; ++i) det.push(spec.first_frame + i, spec.row(i));
    const auto a = det.finish();
    const auto b = detect_events(spec, bands, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].start_s == b[i].start_s);
}

TEST_CASE("debounce suppresses short blips") {
    const SpectrumGeometry g{256, 128, 1, 256e3, 0};
    DetectorConfig cfg;
    cfg.neighbourhood = 64;
    cfg.debounce = 3;
    EventDetector det({{"x", 0, 100e3}}, cfg, g);
    std::vector<double> quiet(256, -100.0), loud(256, -100.0);
    loud[180] = -60;
    for (std::size_t f = 0; f < 10; ++f) det.push(f, f == 4 || f == 5 ? loud : quiet);
    CHECK(det.finish().empty());
}

TEST_CASE("band overlap analysis") {
    const auto o = overlap_analysis({{"a", 0, 10}, {"b", 8, 20}, {"c", 20, 30}});
    REQUIRE(o.size() == 1);
    CHECK(o[0].tag_a == "a");
    CHECK(o[0].lo_hz == 8);
    CHECK(o[0].hi_hz == 10);
    const Band b{"x", 1, 2};
    CHECK(b.contains(1));
    CHECK_FALSE(b.contains(2));
}

TEST_CASE("median correction factor") {
    // Median over mean of an exponential is ln 2; averaging pulls it toward one.
    CHECK(median_to_mean(1) == doctest::Approx(std::log(2.0)));
    CHECK(median_to_mean(16) < 1.0);
    CHECK(median_to_mean(16) > median_to_mean(4));
    CHECK(median_to_mean(4) > median_to_mean(1));
}

TEST_CASE("spectral synthesis frames are independent of the requested range") {
    const SpectrumGeometry g{256, 128, 4, 256e3, 0};
    const std::vector<Tone> tones{{20e3, -80, 0.1, 0.3}};
    const auto all = spectral::synthesize_spectrogram(tones, -100, g, Window::blackman_harris_4, 0, 40, 5);
    const auto part = spectral::synthesize_spectrogram(tones, -100, g, Window::blackman_harris_4, 10, 5, 5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t k = 0; k < 256; ++k) CHECK(part.row(i)[k] == all.row(10 + i)[k]);
}

TEST_CASE("IQ file round trip") {
    TempDir d("iq");
    const auto s = synthesize_iq({{512.001e6, -10, 0, 1}}, -30, 0.01, 100e3, 2, 512e6);
    iq::write_iq(d / "a.cf32", s, iq::Format::cf32);
    const auto a = iq::read_iq(d / "a.cf32");
    REQUIRE(a.samples.size() == s.samples.size());
    CHECK(a.sample_rate_hz == s.sample_rate_hz);
    CHECK(a.center_freq_hz == 512e6);
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        CHECK(a.samples[i].real() == static_cast<float>(s.samples[i].real()));
    }
    iq::write_iq(d / "b.cu8", s, iq::Format::cu8);
    const auto b = iq::read_iq(d / "b.cu8");
    REQUIRE(b.samples.size() == s.samples.size());
    CHECK(iq::format_from_path(d / "b.cu8") == iq::Format::cu8);
    CHECK(iq::sidecar_path(d / "b.cu8").filename() == "b.meta.json");
    CHECK_THROWS_AS(iq::read_iq(d / "missing.cf32"), InputError);
}

TEST_CASE("event CSV round trip") {
    TempDir d("ev");
    const std::vector<TagEvent> ev{{"soap", 0, 0, 1.25, 3.5, 512.5e6, 22.5, 1.3}};
    iq::write_events_csv(d / "e.csv", ev, 100);
    const auto back = iq::read_events_csv(d / "e.csv");
    REQUIRE(back.size() == 1);
    CHECK(back[0].tag_id == "soap");
    CHECK(back[0].start_s == doctest::Approx(101.25));
    CHECK(back[0].mean_freq_hz == 512.5e6);
}

}
