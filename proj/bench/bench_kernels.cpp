// Serial and OpenMP versions of each parallel kernel side by side.
#include <benchmark/benchmark.h>

#include "tdotag/dsp.hpp"
#include "tdotag/fixtures.hpp"
#include "tdotag/scenario.hpp"
#include "tdotag/spectral.hpp"

using namespace tdotag;

namespace {

const std::vector<dsp::Tone> kTones{{-300e3, -70, 0.0, 0.5}, {450e3, -75, 0.1, 0.4}, {10e3, -90, 0.0, 1.0}};
constexpr double kRate = 2.56e6;
constexpr double kSeconds = 0.5;

template <bool Parallel>
void BM_synthesize_iq(benchmark::State& st) {
    for (auto _ : st) {
        auto s = Parallel ? dsp::synthesize_iq(kTones, -100, kSeconds, kRate, 1)
                          : dsp::synthesize_iq_serial(kTones, -100, kSeconds, kRate, 1);
        benchmark::DoNotOptimize(s.samples.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(kSeconds * kRate));
}

template <bool Parallel>
void BM_stft(benchmark::State& st) {
    const auto s = dsp::synthesize_iq_serial(kTones, -100, kSeconds, kRate, 1);
    const dsp::StftConfig cfg{4096, 2048, static_cast<std::size_t>(st.range(0)), dsp::Window::blackman_harris_4};
    for (auto _ : st) {
        auto spec = Parallel ? dsp::stft(s, cfg) : dsp::stft_serial(s, cfg);
        benchmark::DoNotOptimize(spec.power_db.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(s.samples.size()));
}

template <bool Parallel>
void BM_synthesize_spectrogram(benchmark::State& st) {
    const dsp::SpectrumGeometry g{4096, 2048, 16, kRate, 0};
    const auto frames = static_cast<std::size_t>(st.range(0));
    for (auto _ : st) {
        auto spec = Parallel
                        ? spectral::synthesize_spectrogram(kTones, -100, g, dsp::Window::blackman_harris_4, 0, frames, 1)
                        : spectral::synthesize_spectrogram_serial(kTones, -100, g, dsp::Window::blackman_harris_4, 0,
                                                                  frames, 1);
        benchmark::DoNotOptimize(spec.power_db.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(frames));
}

template <bool Parallel>
void BM_sweep(benchmark::State& st) {
    const auto tmpl = scenario::load_scenario_json(scenario_path("range_sweep.json"));
    const std::vector<double> d{1, 5, 10, 20, 30, 40, 45, 50};
    for (auto _ : st) {
        auto rows = Parallel ? scenario::sweep(tmpl, "/channel/distance_m", d)
                             : scenario::sweep_serial(tmpl, "/channel/distance_m", d);
        benchmark::DoNotOptimize(rows.data());
    }
}

} // namespace

BENCHMARK(BM_synthesize_iq<false>)->Name("synthesize_iq/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_synthesize_iq<true>)->Name("synthesize_iq/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_stft<false>)->Name("stft/serial")->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_stft<true>)->Name("stft/omp")->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_synthesize_spectrogram<false>)->Name("synthesize_spectrogram/serial")->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_synthesize_spectrogram<true>)->Name("synthesize_spectrogram/omp")->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep<false>)->Name("sweep/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep<true>)->Name("sweep/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
