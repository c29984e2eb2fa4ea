// Regenerates the synthesized data files: the deployment replay scenario and the
// correlation fixture. Output is frozen into data/; rerun only when the recipe changes.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdotag/csv.hpp"
#include "tdotag/fixtures.hpp"
#include "tdotag/rng.hpp"
#include "tdotag/scenario.hpp"
#include "tdotag/transducers.hpp"

using nlohmann::json;
using namespace tdotag;

namespace {

struct TagPlan {
    const char* id;
    double band_lo_mhz, band_hi_mhz;
    const char* trigger;
    double threshold, stimulus, failure_prob;
    double activation_s, on_time_s;
    int events;
    // Target statistics of the emitted frequency series (MHz).
    double mean, sd, min, max;
};

const TagPlan kPlans[] = {
    {"trash", 510.95, 512.2, "tilt_ball", 60, 80, 0.0, 0.68, 3, 25, 511.71, 0.30, 511.0, 512.18},
    {"soap", 512.2, 513.1, "reed", 5, 2, 0.0, 0.53, 2, 19, 512.52, 0.27, 512.22, 513.0},
    {"oven", 513.1, 514.05, "tilt_ball", 60, 90, 3.0 / 14.0, 0.9, 6, 14, 513.50, 0.21, 513.2, 514.0},
};

constexpr double kDuration = 60 * 3600.0;
constexpr int kOvenFailures = 3;

// n values with the given min and max pinned and exact sample mean and SD.
std::vector<double> constructed_series(int n, double mean, double sd, double lo, double hi, Rng& rng) {
    const int m = n - 2;
    const double c = (n * mean - lo - hi) / m;
    const double d2 = ((n - 1) * sd * sd - (lo - mean) * (lo - mean) - (hi - mean) * (hi - mean) - m * (c - mean) * (c - mean)) / m;
    if (d2 <= 0) throw std::runtime_error("series target infeasible");
    const double d = std::sqrt(d2);
    std::normal_distribution<double> nd;
    for (int attempt = 0; attempt < 100000; ++attempt) {
        std::vector<double> z(m);
        double zm = 0;
        for (auto& v : z) zm += (v = nd(rng));
        zm /= m;
        double ss = 0;
        for (auto& v : z) ss += (v -= zm) * v;
        const double scale = std::sqrt(m / ss);
        std::vector<double> out{lo, hi};
        bool ok = true;
        for (double v : z) {
            const double x = c + d * v * scale;
            ok = ok && x > lo && x < hi;
            out.push_back(x);
        }
        if (ok) {
            std::shuffle(out.begin(), out.end(), rng);
            return out;
        }
    }
    throw std::runtime_error("series rejection sampling did not converge");
}

json tag_json(const TagPlan& p) {
    return {{"id", p.id},
            {"mode", "interaction"},
            {"band_lo_hz", p.band_lo_mhz * 1e6},
            {"band_hi_hz", p.band_hi_mhz * 1e6},
            {"photodiodes", 25},
            {"tdo_power_w", 50e-6},
            {"supply", {{"capacitance_f", 0.047}, {"initial_v", 1.0}, {"max_v", 1.0}, {"min_v", 0.25}}},
            {"trigger", {{"kind", p.trigger}, {"threshold", p.threshold}, {"failure_prob", p.failure_prob}}},
            {"activation", {{"activation_s", p.activation_s}, {"on_time_s", p.on_time_s}}},
            {"link_snr_db", 30.0}};
}

void write_deployment(const std::filesystem::path& out, std::uint64_t layout_seed) {
    auto rng = make_rng(layout_seed);
    struct Ev {
        double t;
        int tag;
    };
    std::vector<Ev> evs;
    std::uniform_real_distribution<double> ut(120.0, kDuration - 120.0);
    for (int ti = 0; ti < 3; ++ti)
        for (int k = 0; k < kPlans[ti].events;) {
            const double t = std::round(ut(rng) * 100.0) / 100.0;
            bool clear = true;
            for (const auto& e : evs) clear = clear && std::abs(e.t - t) > 60.0;
            if (!clear) continue;
            evs.push_back({t, ti});
            ++k;
        }
    std::sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) { return a.t < b.t; });

    // Smallest seed at or above the default whose oven draws fail exactly kOvenFailures times.
    std::uint64_t seed = scenario::kDefaultSeed;
    std::vector<bool> fired(evs.size());
    for (;; ++seed) {
        int fails = 0;
        for (std::size_t i = 0; i < evs.size(); ++i) {
            const auto& p = kPlans[evs[i].tag];
            const transducers::TriggerSwitch sw{transducers::parse_trigger_kind(p.trigger), p.threshold, p.failure_prob};
            fired[i] = transducers::trigger_evaluate(sw, p.stimulus, scenario::trigger_seed(seed, i));
            fails += !fired[i];
        }
        if (fails == kOvenFailures) break;
    }

    std::vector<std::vector<double>> series(3);
    for (int ti = 0; ti < 3; ++ti) {
        int n = 0;
        for (std::size_t i = 0; i < evs.size(); ++i) n += evs[i].tag == ti && fired[i];
        const auto& p = kPlans[ti];
        series[ti] = constructed_series(n, p.mean, p.sd, p.min, p.max, rng);
    }
    std::vector<std::size_t> next(3, 0);
    json script = json::array();
    for (std::size_t i = 0; i < evs.size(); ++i) {
        const auto& p = kPlans[evs[i].tag];
        json e = {{"tag_id", p.id}, {"t_s", evs[i].t}, {"stimulus", p.stimulus}};
        // Failed triggers never emit; they still carry a nominal frequency.
        const double f = fired[i] ? series[evs[i].tag][next[evs[i].tag]++] : p.mean;
        e["freq_hz"] = std::round(f * 1e6);
        script.push_back(e);
    }
    json tags = json::array();
    for (const auto& p : kPlans) tags.push_back(tag_json(p));
    const json sc = {{"schema", 1},
                     {"name", "deployment_replay"},
                     {"seed", seed},
                     {"layout_seed", layout_seed},
                     {"duration_s", kDuration},
                     {"time_step_s", 0.01},
                     {"start_unix_s", 1735689600.0},
                     {"trace_interval_s", 60.0},
                     {"mode", "spectral"},
                     {"match_window_s", 5.0},
                     {"receiver",
                      {{"sample_rate_hz", 3.2e6},
                       {"center_freq_hz", 512.5e6},
                       {"fft_size", 4096},
                       {"hop", 2048},
                       {"averages", 16},
                       {"threshold_db", 5.0},
                       {"debounce", 3},
                       {"noise_floor_db", -100.0}}},
                     {"environment",
                      {{"lux", {{"profile", "diurnal"}, {"min_lux", 30.0}, {"max_lux", 350.0}, {"period_s", 86400.0}, {"phase_s", 21600.0}}}}},
                     {"tags", tags},
                     {"script", script}};
    std::ofstream(out) << sc.dump(2) << '\n';
    std::cout << "wrote " << out << " (seed " << seed << ")\n";
}

void write_pearson(const std::filesystem::path& out, std::uint64_t seed, double r, int n) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> nd;
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = nd(rng);
    for (auto& v : y) v = nd(rng);
    const auto centre_unit = [](std::vector<double>& v) {
        double m = 0;
        for (double a : v) m += a;
        m /= static_cast<double>(v.size());
        double s = 0;
        for (double& a : v) s += (a -= m) * a;
        for (double& a : v) a /= std::sqrt(s);
    };
    centre_unit(x);
    centre_unit(y);
    double dot = 0;
    for (int i = 0; i < n; ++i) dot += x[i] * y[i];
    for (int i = 0; i < n; ++i) y[i] -= dot * x[i];
    centre_unit(y);
    std::ofstream f(out);
    f << "# Hourly mean frequencies (MHz) of two tags, synthesized to a target correlation of " << r
      << ".\n# Gram-Schmidt construction from standard normal draws, seed " << seed << ".\nx,y\n";
    for (int i = 0; i < n; ++i) {
        const double yy = r * x[i] + std::sqrt(1 - r * r) * y[i];
        f << format_number(511.71 + 0.30 * std::sqrt(n - 1.0) * x[i]) << ','
          << format_number(512.52 + 0.27 * std::sqrt(n - 1.0) * yy) << '\n';
    }
    std::cout << "wrote " << out << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regenerate synthesized fixtures"};
    std::string root = data_root().string();
    std::uint64_t layout_seed = 7;
    std::uint64_t pearson_seed = 12;
    app.add_option("--data", root, "data directory to write into");
    app.add_option("--layout-seed", layout_seed, "seed for event times and frequency series");
    app.add_option("--pearson-seed", pearson_seed, "seed for the correlation fixture");
    CLI11_PARSE(app, argc, argv);
    try {
        write_deployment(std::filesystem::path(root) / "scenarios" / "deployment_replay.json", layout_seed);
        write_pearson(std::filesystem::path(root) / "fixtures" / "pearson_series.csv", pearson_seed, 0.12, 60);
    } catch (const std::exception& e) {
        std::cerr << "gen_fixtures: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
