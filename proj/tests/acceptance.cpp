// Acceptance run: one PASS/FAIL line per criterion. Published values come from the
// data tree, never from this file.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "property_suite.hpp"
#include "tdotag/channel.hpp"
#include "tdotag/dsp.hpp"
#include "tdotag/fft.hpp"
#include "tdotag/fixtures.hpp"
#include "tdotag/power_switch.hpp"
#include "tdotag/repro.hpp"
#include "tdotag/rng.hpp"
#include "tdotag/scenario.hpp"

using namespace tdotag;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (ok) return;
        pass = false;
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

std::map<std::string, repro::PublishedValue> published(const std::string& id) {
    std::map<std::string, repro::PublishedValue> m;
    for (auto& p : repro::load_published(paper_data_path(id + ".csv"))) m.emplace(p.key, p);
    return m;
}

const repro::DiffRow* row(const repro::ReproResult& r, const std::string& key) {
    for (const auto& d : r.diff)
        if (d.key == key) return &d;
    return nullptr;
}

// Every compared row passes except the ones the fixture marks as known mismatches.
void require_clean(Outcome& o, const repro::ReproResult& r) {
    for (const auto& d : r.diff) {
        if (d.expect == repro::Expect::mismatch) continue;
        o.require(d.verdict == repro::Verdict::pass,
                  r.id + "/" + d.key + " model " + (d.model ? fmt(*d.model) : "missing") + " vs " + fmt(d.published));
    }
}

Outcome ac1() {
    Outcome o;
    const auto pub = published("table1");
    const power::SwitchingProfile prof{0, 0, 7e-6};
    const double p_tdo = 49e-6;
    const std::vector<std::tuple<std::string, double, bool>> rows{
        {"pd40_input_power_uw", 1.0, false}, {"pd25_input_power_uw", 0.6, true}, {"pd11_input_power_uw", 0.1, true}};
    for (const auto& [key, duty, sw] : rows) {
        const double uw = power::average_power(duty, p_tdo, sw, prof) * 1e6;
        const auto& p = pub.at(key);
        o.require(std::abs(uw - p.value) <= p.tolerance, key + " " + fmt(uw) + " vs " + fmt(p.value));
    }
    const auto r = repro::run_repro("table1");
    for (const auto& [key, duty, sw] : rows) {
        const auto* d = row(r, key);
        o.require(d && d->verdict == repro::Verdict::pass, "repro " + key);
    }
    return o;
}

Outcome ac2() {
    Outcome o;
    const auto pub = published("fig7b");
    for (int pd : {25, 11}) {
        const auto m = channel::range_model(pd);
        const std::string k = "pd" + std::to_string(pd);
        const auto& range = pub.at(k + "_max_range_m");
        const auto& snr = pub.at(k + "_snr_1m_db");
        o.require(std::abs(channel::max_range(m) - range.value) <= 0.01, k + " range " + fmt(channel::max_range(m)));
        o.require(channel::snr_at(m, 1.0) == snr.value, k + " snr(1 m) " + fmt(channel::snr_at(m, 1.0)));
    }
    require_clean(o, repro::run_repro("fig7b"));
    return o;
}

Outcome ac3() {
    Outcome o;
    const auto pub = published("fig7a");
    const auto fm = channel::default_floor_model();
    for (int off = -2; off <= 2; ++off) {
        const std::string k = "floor_" + (off < 0 ? "m" + std::to_string(-off) : std::to_string(off));
        const auto r = channel::floor_snr(fm, off);
        o.require(r.snr_db == pub.at(k + "_snr_db").value, k + " snr " + fmt(r.snr_db));
        o.require(r.detectable == (pub.at(k + "_detectable").value != 0), k + " detectability");
    }
    o.require(!channel::floor_snr(fm, 2).detectable && !channel::floor_snr(fm, -2).detectable, "floors +-2 detectable");
    return o;
}

Outcome ac4() {
    Outcome o;
    require_clean(o, repro::run_repro("fig6b"));
    return o;
}

Outcome ac5() {
    Outcome o;
    for (const char* id : {"fig8b", "fig9c", "fig10c", "fig11c", "fig12c", "fig13c", "fig16"})
        require_clean(o, repro::run_repro(id));
    return o;
}

Outcome ac6() {
    Outcome o;
    const double rate = 2.56e6, noise = -100;
    const double pg = dsp::processing_gain_db(dsp::Window::blackman_harris_4, 4096);
    auto rng = make_rng(606);
    int bin_miss = 0, snr_miss = 0, trials = 0;
    double worst_snr = 0;
    for (double snr : {15.0, 18.0, 22.0, 27.0, 33.0, 40.0}) {
        for (int t = 0; t < 8; ++t, ++trials) {
            const double f = (uniform01(rng) - 0.5) * 2.4e6;
            const auto s = dsp::synthesize_iq({{f, noise + snr - pg, 0, 1}}, noise, (15 * 2048 + 4096) / rate, rate, rng());
            const auto spec = dsp::stft(s, {4096, 2048, 16, dsp::Window::blackman_harris_4});
            const auto r = spec.row(0);
            const auto k = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
            if (std::abs(spec.geom.bin_freq(static_cast<double>(k)) - f) > spec.bin_hz()) ++bin_miss;
            const auto est = dsp::estimate_snr(r, k, 8, 256, 16);
            worst_snr = std::max(worst_snr, std::abs(est.snr_db - snr));
            if (std::abs(est.snr_db - snr) > 1.0) ++snr_miss;
        }
    }
    o.require(bin_miss == 0, std::to_string(bin_miss) + "/" + std::to_string(trials) + " tones off by more than a bin");
    o.require(snr_miss == 0, "SNR error up to " + fmt(worst_snr) + " dB");

    double worst_parseval = 0;
    for (std::size_t n : {256u, 4096u, 65536u}) {
        const auto s = dsp::synthesize_iq({{1e5, -10, 0, 1}}, -20, static_cast<double>(n) / rate, rate, n);
        std::vector<dsp::cplx> y(n);
        fft::forward(s.samples.data(), y.data(), n);
        double ex = 0, ey = 0;
        for (std::size_t i = 0; i < n; ++i) {
            ex += std::norm(s.samples[i]);
            ey += std::norm(y[i]);
        }
        worst_parseval = std::max(worst_parseval, std::abs(ey / static_cast<double>(n) - ex) / ex);
    }
    o.require(worst_parseval <= 1e-6, "Parseval error " + fmt(worst_parseval));
    if (o.pass)
        o.detail = "max SNR error " + fmt(worst_snr) + " dB, Parseval " + fmt(worst_parseval);
    return o;
}

Outcome ac7() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = repro::run_repro("table6");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    require_clean(o, r);
    o.require(secs < 120.0, "replay took " + fmt(secs) + " s");
    if (o.pass) o.detail = "replay and statistics in " + fmt(secs) + " s";
    return o;
}

Outcome ac8() {
    Outcome o;
    const auto r = repro::run_repro("table5");
    for (const char* k : {"soap_energy_pct", "oven_energy_pct"}) {
        const auto* d = row(r, k);
        o.require(d && d->verdict == repro::Verdict::pass, std::string(k) + (d && d->model ? " " + fmt(*d->model) : ""));
    }
    const auto* trash = row(r, "trash_energy_pct");
    o.require(trash && trash->verdict == repro::Verdict::flagged, "trash energy row not flagged");
    return o;
}

Outcome ac9() {
    Outcome o;
    std::size_t props = 0;
    for (const auto& r : props::run_all_properties(1000)) {
        ++props;
        o.require(r.failures == 0 && r.cases >= 1000, r.module + "/" + r.name + ": " + r.first_failure);
    }
    if (o.pass) o.detail = std::to_string(props) + " properties x 1000 cases";
    return o;
}

Outcome ac10() {
    Outcome o;
    const auto t1 = repro::run_repro("table1");
    const auto* w = row(t1, "consistency_warnings");
    o.require(w && w->verdict == repro::Verdict::pass && w->model && *w->model >= 1, "no consistency warning");
    const auto t6 = repro::run_repro("table6");
    for (const auto& d : t6.diff)
        if (d.key.ends_with("_bandwidth_mhz") && d.expect == repro::Expect::mismatch)
            o.require(d.verdict == repro::Verdict::flagged && !d.note.empty(), d.key + " not annotated");
    const bool any = std::any_of(t6.diff.begin(), t6.diff.end(), [](const repro::DiffRow& d) {
        return d.key.ends_with("_bandwidth_mhz") && d.verdict == repro::Verdict::flagged;
    });
    o.require(any, "no bandwidth row flagged");
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1 power model", ac1},         {"AC2 range endpoints", ac2},       {"AC3 multi-floor", ac3},
        {"AC4 light response", ac4},      {"AC5 transducer anchors", ac5},    {"AC6 DSP pipeline", ac6},
        {"AC7 deployment replay", ac7},   {"AC8 energy per interaction", ac8}, {"AC9 property suites", ac9},
        {"AC10 contradiction guards", ac10}};
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += !o.pass;
        std::printf("%s %s%s%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.empty() ? "" : ": ",
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
