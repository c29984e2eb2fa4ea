#include "tdotag/repro.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>

#include "tdotag/analytics.hpp"
#include "tdotag/channel.hpp"
#include "tdotag/csv.hpp"
#include "tdotag/errors.hpp"
#include "tdotag/fixtures.hpp"
#include "tdotag/harvest.hpp"
#include "tdotag/power_switch.hpp"
#include "tdotag/rng.hpp"
#include "tdotag/scenario.hpp"
#include "tdotag/tdo.hpp"
#include "tdotag/transducers.hpp"

namespace tdotag::repro {

std::string_view verdict_name(Verdict v) {
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::flagged: return "flagged";
    }
    return "fail";
}

Expect parse_expect(std::string_view name) {
    if (name == "match" || name.empty()) return Expect::match;
    if (name == "at_least") return Expect::at_least;
    if (name == "at_most") return Expect::at_most;
    if (name == "mismatch") return Expect::mismatch;
    if (name == "input") return Expect::input;
    throw InputError("unknown expect value '" + std::string(name) + "'");
}

namespace {

std::string_view expect_name(Expect e) {
    switch (e) {
    case Expect::match: return "match";
    case Expect::at_least: return "at_least";
    case Expect::at_most: return "at_most";
    case Expect::mismatch: return "mismatch";
    case Expect::input: return "input";
    }
    return "match";
}

} // namespace

std::vector<PublishedValue> load_published(const std::filesystem::path& csv) {
    const auto t = CsvTable::read(csv);
    t.require({"key", "value", "tolerance", "unit", "expect", "note"});
    std::vector<PublishedValue> out;
    for (std::size_t r = 0; r < t.rows(); ++r)
        out.push_back({t.text(r, "key"), t.number(r, "value"), t.number(r, "tolerance"), t.text(r, "unit"),
                       parse_expect(t.text(r, "expect")), t.text(r, "note")});
    return out;
}

void ModelOutput::set(std::string key, double value) {
    for (auto& kv : values)
        if (kv.first == key) {
            kv.second = value;
            return;
        }
    values.emplace_back(std::move(key), value);
}

std::optional<double> ModelOutput::get(std::string_view key) const {
    for (const auto& kv : values)
        if (kv.first == key) return kv.second;
    return std::nullopt;
}

std::vector<DiffRow> compare(const ModelOutput& model, const std::vector<PublishedValue>& published) {
    std::vector<DiffRow> rows;
    for (const auto& p : published) {
        if (p.expect == Expect::input) continue;
        DiffRow d{p.key, model.get(p.key), p.value, p.tolerance, p.unit, p.expect, Verdict::fail, p.note};
        if (!d.model) {
            d.note = "no model value";
        } else {
            const double m = *d.model;
            const double slack = p.tolerance + 1e-9 * std::max(1.0, std::abs(p.value));
            switch (p.expect) {
            case Expect::match: d.verdict = std::abs(m - p.value) <= slack ? Verdict::pass : Verdict::fail; break;
            case Expect::at_least: d.verdict = m >= p.value - slack ? Verdict::pass : Verdict::fail; break;
            case Expect::at_most: d.verdict = m <= p.value + slack ? Verdict::pass : Verdict::fail; break;
            case Expect::mismatch: d.verdict = Verdict::flagged; break;
            case Expect::input: break;
            }
        }
        rows.push_back(std::move(d));
    }
    return rows;
}

Verdict overall(const std::vector<DiffRow>& diff) {
    Verdict v = Verdict::pass;
    for (const auto& d : diff) {
        if (d.verdict == Verdict::fail) return Verdict::fail;
        if (d.verdict == Verdict::flagged) v = Verdict::flagged;
    }
    return v;
}

namespace {

constexpr double kMHz = 1e6;
constexpr double kKHz = 1e3;
constexpr double kUW = 1e-6;

double sample_sd(const std::vector<double>& xs) {
    double m = 0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double s = 0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// Seeded noise draws at one anchor; returns the sample SD.
double draw_sd(const transducers::Transducer& t, double stimulus, std::uint64_t seed, std::size_t stream) {
    auto rng = make_rng(seed, stream);
    std::vector<double> xs;
    xs.reserve(10000);
    for (int i = 0; i < 10000; ++i) xs.push_back(*t.sample(stimulus, rng));
    return sample_sd(xs);
}

void anchor_rows(ModelOutput& m, transducers::Kind kind, std::uint64_t seed, const std::string& prefix,
                 const std::function<std::string(double)>& label) {
    const auto t = transducers::default_transducer(kind);
    std::size_t stream = 0;
    for (const auto& a : t.anchors()) {
        const std::string k = prefix + label(a.stimulus);
        m.set(k + "_mhz", *t.frequency(a.stimulus) / kMHz);
        m.set(k + "_sd_khz", draw_sd(t, a.stimulus, seed, stream++) / kKHz);
    }
}

std::string num_label(double v) {
    std::string s = format_number(v);
    std::replace(s.begin(), s.end(), '.', 'p');
    std::replace(s.begin(), s.end(), '-', 'm');
    return s;
}

// The deployment replay is shared by several repro ids; run it once per process.
const scenario::RunResult& replay() {
    static std::once_flag once;
    static scenario::RunResult result;
    std::call_once(once, [] { result = scenario::run(scenario::load_scenario(scenario_path("deployment_replay.json"))); });
    return result;
}

const scenario::Scenario& replay_scenario() {
    static const scenario::Scenario sc = scenario::load_scenario(scenario_path("deployment_replay.json"));
    return sc;
}

ModelOutput table1(std::uint64_t) {
    ModelOutput m;
    const double p_tdo = 49e-6;
    const power::SwitchingProfile prof{0, 0, 7e-6};
    m.set("pd40_input_power_uw", power::average_power(1.0, p_tdo, false, prof) / kUW);
    m.set("pd25_input_power_uw", power::average_power(0.6, p_tdo, true, prof) / kUW);
    m.set("pd11_input_power_uw", power::average_power(0.1, p_tdo, true, prof) / kUW);
    const power::TimerConfig plain{1e6, 33e6, 10e-6, false};
    const power::TimerConfig bypass{1e6, 33e6, 10e-6, true};
    m.set("pd25_clock_hz", power::clock_frequency(plain));
    m.set("pd25_duty", power::duty_cycle(plain));
    m.set("pd11_clock_hz", power::clock_frequency(bypass));
    m.set("pd11_duty", power::duty_cycle(bypass));
    const auto w25 = power::consistency_warnings(plain, 60.0, 0.6);
    const auto w11 = power::consistency_warnings(bypass, 24.0, 0.1);
    m.set("consistency_warnings", static_cast<double>(w25.size() + w11.size()));
    m.set("pd25_max_distance_m", channel::max_range(channel::range_model(25)));
    m.set("pd11_max_distance_m", channel::max_range(channel::range_model(11)));
    return m;
}

using Inputs = std::map<std::string, double>;

// Observed values with a given key prefix, in file order.
std::vector<double> inputs_with_prefix(const std::vector<PublishedValue>& pub, std::string_view prefix) {
    std::vector<double> v;
    for (const auto& p : pub)
        if (p.expect == Expect::input && p.key.starts_with(prefix)) v.push_back(p.value);
    return v;
}

ModelOutput table3(std::uint64_t, const std::vector<PublishedValue>& pub) {
    // Position means are inputs; the checks are the bandwidth arithmetic and the origami ordering.
    ModelOutput m;
    const auto slider = inputs_with_prefix(pub, "slider_pos_");
    const auto kresling = inputs_with_prefix(pub, "kresling_state_");
    if (slider.size() < 2 || kresling.size() < 2) throw InputError("table3: missing position inputs");
    m.set("slider_bandwidth_mhz", analytics::frequency_stats(slider).bandwidth);
    m.set("kresling_bandwidth_mhz", analytics::frequency_stats(kresling).bandwidth);
    const auto k = transducers::default_transducer(transducers::Kind::kresling);
    m.set("kresling_compressed_minus_expanded_mhz",
          (*k.frequency(static_cast<double>(transducers::OrigamiState::compressed)) -
           *k.frequency(static_cast<double>(transducers::OrigamiState::expanded))) /
              kMHz);
    return m;
}

ModelOutput table5(std::uint64_t) {
    ModelOutput m;
    const harvest::Supercapacitor cap(0.047, 1.0, "storage");
    const auto& sc = replay_scenario();
    const auto& res = replay();
    for (const auto& tag : sc.tags) {
        m.set(tag.id + "_energy_pct", analytics::energy_percent(tag.activation.on_time_s, tag.tdo_power_w, cap));
        const auto it = res.report.per_tag.find(tag.id);
        if (it != res.report.per_tag.end() && it->second.events_detected > 0) {
            m.set(tag.id + "_activation_s", it->second.mean_activation_s);
            m.set(tag.id + "_on_time_s", it->second.mean_on_time_s);
        }
    }
    return m;
}

ModelOutput table6(std::uint64_t, const std::vector<PublishedValue>& pub) {
    ModelOutput m;
    const auto& res = replay();
    std::map<std::string, std::vector<double>> series;
    for (const auto& e : res.events) series[e.tag_id].push_back(e.mean_freq_hz / kMHz);
    for (const auto& [id, xs] : series) {
        const auto s = analytics::frequency_stats(xs);
        m.set(id + "_mean_mhz", s.mean);
        m.set(id + "_sd_mhz", s.sd);
        m.set(id + "_min_mhz", s.min);
        m.set(id + "_max_mhz", s.max);
        m.set(id + "_bandwidth_mhz", s.bandwidth);
        m.set(id + "_cv_pct", s.cv_pct);
    }
    m.set("truth_events", static_cast<double>(res.report.total_true));
    m.set("detections", static_cast<double>(res.report.total_detected));
    m.set("misses", static_cast<double>(res.report.total_misses));
    m.set("false_positives", static_cast<double>(res.report.false_positives));
    m.set("failure_rate_pct", res.report.failure_rate_pct);
    double worst = 0;
    for (double l : res.latencies_s) worst = std::max(worst, l);
    m.set("max_latency_s", worst);

    const auto t = CsvTable::read(fixture_path("pearson_series.csv"));
    t.require({"x", "y"});
    std::vector<double> x, y;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        x.push_back(t.number(r, "x"));
        y.push_back(t.number(r, "y"));
    }
    m.set("pearson_r", analytics::pearson_correlation(x, y));

    const auto& sc = replay_scenario();
    std::vector<dsp::Band> bands;
    for (const auto& tag : sc.tags) bands.push_back(tag.band);
    m.set("assigned_band_overlaps", static_cast<double>(dsp::overlap_analysis(bands).size()));

    // Observed second-day extents, checked for spectral overlap.
    const auto trash = inputs_with_prefix(pub, "day2_trash_");
    const auto soap = inputs_with_prefix(pub, "day2_soap_");
    if (trash.size() != 2 || soap.size() != 2) throw InputError("table6: missing second-day extents");
    const auto ov = dsp::overlap_analysis({{"trash", trash[0] * kMHz, trash[1] * kMHz}, {"soap", soap[0] * kMHz, soap[1] * kMHz}});
    m.set("day2_overlap_mhz", ov.empty() ? 0.0 : (ov[0].hi_hz - ov[0].lo_hz) / kMHz);
    m.set("day2_overlap_lo_mhz", ov.empty() ? 0.0 : ov[0].lo_hz / kMHz);
    m.series_header = {"tag_index", "mean_freq_mhz", "start_s", "peak_snr_db"};
    for (const auto& e : res.events) {
        std::size_t ti = 0;
        for (std::size_t i = 0; i < sc.tags.size(); ++i)
            if (sc.tags[i].id == e.tag_id) ti = i;
        m.series.push_back({static_cast<double>(ti), e.mean_freq_hz / kMHz, e.start_s, e.peak_snr_db});
    }
    return m;
}

ModelOutput fig5a(std::uint64_t) {
    ModelOutput m;
    m.series_header = {"photodiodes", "lux", "power_uw"};
    for (int n : {11, 25, 40}) {
        const auto arr = harvest::default_array(n);
        for (double lux : {500.0, 800.0, 1000.0})
            m.set("pd" + std::to_string(n) + "_lux" + format_number(lux) + "_uw", harvest::harvest_power(arr, lux) / kUW);
        for (double lux = 0; lux <= 1200; lux += 50)
            m.series.push_back({static_cast<double>(n), lux, harvest::harvest_power(arr, lux) / kUW});
    }
    m.set("tdo_power_at_250mv_uw",
          tdo::tdo_input_power(tdo::load_bias_power(fixture_path("tdo_power.csv")), 0.25) / kUW);
    return m;
}

ModelOutput fig6b(std::uint64_t seed) {
    ModelOutput m;
    power::LightResponseModel model;
    std::vector<double> lux;
    for (double l = 500; l <= 1000; l += 10) lux.push_back(l);

    auto quiet = model;
    quiet.noise_sd_hz = 0;
    const auto f0 = scenario::light_sweep(quiet, lux, seed);
    const auto fit0 = analytics::regression_fit(lux, f0);
    m.set("noiseless_slope_mhz_per_100lux", fit0.slope * 100 / kMHz);
    m.set("noiseless_r2", fit0.r_squared);

    double worst_rel = 0, min_r2 = 1, mean_slope = 0;
    constexpr int kTrials = 30;
    for (int t = 0; t < kTrials; ++t) {
        const auto f = scenario::light_sweep(model, lux, mix_seed(seed, static_cast<std::uint64_t>(t)));
        const auto fit = analytics::regression_fit(lux, f);
        worst_rel = std::max(worst_rel, std::abs(fit.slope / model.slope_hz_per_lux - 1.0));
        min_r2 = std::min(min_r2, fit.r_squared);
        mean_slope += fit.slope / kTrials;
        if (t == 0)
            for (std::size_t i = 0; i < lux.size(); ++i) m.series.push_back({lux[i], f[i] / kMHz, f0[i] / kMHz});
    }
    m.series_header = {"lux", "noisy_freq_mhz", "noiseless_freq_mhz"};
    m.set("noisy_mean_slope_mhz_per_100lux", mean_slope * 100 / kMHz);
    m.set("noisy_worst_slope_rel_err", worst_rel);
    m.set("noisy_min_r2", min_r2);
    m.set("freq_at_1000lux_mhz", *power::frequency_under_light(model, 1000) / kMHz);
    m.set("emits_at_499lux", power::frequency_under_light(model, 499).has_value() ? 1.0 : 0.0);
    return m;
}

ModelOutput fig7a(std::uint64_t) {
    ModelOutput m;
    const auto fm = channel::default_floor_model();
    for (int off = -2; off <= 2; ++off) {
        const auto r = channel::floor_snr(fm, off);
        const std::string k = "floor_" + num_label(off);
        m.set(k + "_snr_db", r.snr_db);
        m.set(k + "_detectable", r.detectable ? 1.0 : 0.0);
    }
    return m;
}

ModelOutput fig7b(std::uint64_t) {
    ModelOutput m;
    m.series_header = {"distance_m", "snr_pd25_db", "snr_pd11_db"};
    const auto m25 = channel::range_model(25);
    const auto m11 = channel::range_model(11);
    bool monotone = true;
    double prev25 = INFINITY, prev11 = INFINITY;
    for (double d = 1.0; d <= 50.0; d += 0.25) {
        const double a = channel::snr_at(m25, d), b = channel::snr_at(m11, d);
        monotone = monotone && a < prev25 && b < prev11;
        prev25 = a;
        prev11 = b;
        m.series.push_back({d, a, b});
    }
    m.set("pd25_snr_1m_db", channel::snr_at(m25, 1.0));
    m.set("pd11_snr_1m_db", channel::snr_at(m11, 1.0));
    m.set("pd25_max_range_m", channel::max_range(m25));
    m.set("pd11_max_range_m", channel::max_range(m11));
    m.set("monotone_decreasing", monotone ? 1.0 : 0.0);
    return m;
}

ModelOutput fig8b(std::uint64_t seed) {
    ModelOutput m;
    m.set("tilt_15deg_offset_khz", *transducers::offset_tilt(15) / kKHz);
    m.set("tilt_30deg_offset_khz", *transducers::offset_tilt(30) / kKHz);
    m.set("tilt_90deg_emits", transducers::offset_tilt(90).has_value() ? 1.0 : 0.0);
    const auto t = transducers::default_transducer(transducers::Kind::tilt, 500e6);
    m.set("tilt_15deg_sd_khz", draw_sd(t, 15, seed, 0) / kKHz);
    return m;
}

ModelOutput fig9c(std::uint64_t seed) {
    ModelOutput m;
    m.set("deformation_step_offset_khz", *transducers::offset_deformation(0.125) / kKHz);
    m.set("deformation_3p25mm_emits", transducers::offset_deformation(3.25).has_value() ? 1.0 : 0.0);
    m.set("deformation_3p3mm_emits", transducers::offset_deformation(3.3).has_value() ? 1.0 : 0.0);
    const auto t = transducers::default_transducer(transducers::Kind::deformation, 500e6);
    m.set("deformation_step_sd_khz", draw_sd(t, 0.125, seed, 0) / kKHz);
    return m;
}

ModelOutput anchors_fig(transducers::Kind kind, std::uint64_t seed) {
    ModelOutput m;
    const std::string prefix = std::string(transducers::kind_name(kind)) + "_";
    if (kind == transducers::Kind::miura || kind == transducers::Kind::kresling) {
        anchor_rows(m, kind, seed, prefix, [](double s) {
            return std::string(s < 0 ? "compressed" : s > 0 ? "expanded" : "normal");
        });
    } else {
        anchor_rows(m, kind, seed, prefix, num_label);
    }
    return m;
}

ModelOutput fig17(std::uint64_t) {
    ModelOutput m;
    const auto curve = tdo::load_durability(fixture_path("durability.csv"));
    bool monotone = true;
    double prev = -1;
    m.series_header = {"thickness_mm", "cycles"};
    for (int i = 10; i <= 40; ++i) {
        const double t = i / 100.0;
        const double c = tdo::cycles_to_failure(curve, t);
        monotone = monotone && c >= prev;
        prev = c;
        m.series.push_back({t, c});
    }
    m.set("cycles_0p10mm", tdo::cycles_to_failure(curve, 0.10));
    m.set("cycles_0p40mm", tdo::cycles_to_failure(curve, 0.40));
    m.set("monotone_non_decreasing", monotone ? 1.0 : 0.0);
    return m;
}

using ModelFn = std::function<ModelOutput(std::uint64_t, const std::vector<PublishedValue>&)>;

template <class F>
ModelFn plain(F f) {
    return [f](std::uint64_t seed, const std::vector<PublishedValue>&) { return f(seed); };
}

struct Entry {
    const char* id;
    const char* title;
    ModelFn fn;
};

const std::vector<Entry>& entries() {
    using transducers::Kind;
    static const std::vector<Entry> e{
        {"table1", "input power per switching configuration", plain(table1)},
        {"table3", "slider and origami deployment bandwidths", table3},
        {"table5", "energy per interaction", plain(table5)},
        {"table6", "deployment frequency statistics and detection", table6},
        {"fig5a", "photodiode harvest grid", plain(fig5a)},
        {"fig6b", "frequency versus light intensity", plain(fig6b)},
        {"fig7a", "multi-floor SNR", plain(fig7a)},
        {"fig7b", "SNR over distance", plain(fig7b)},
        {"fig8b", "tilt response", plain(fig8b)},
        {"fig9c", "deformation response", plain(fig9c)},
        {"fig10c", "rotary encoder anchors", plain([](std::uint64_t s) { return anchors_fig(Kind::rotary, s); })},
        {"fig11c", "slider anchors", plain([](std::uint64_t s) { return anchors_fig(Kind::slider, s); })},
        {"fig12c", "Miura-Ori anchors", plain([](std::uint64_t s) { return anchors_fig(Kind::miura, s); })},
        {"fig13c", "Kresling anchors", plain([](std::uint64_t s) { return anchors_fig(Kind::kresling, s); })},
        {"fig16", "package tearing anchors", plain([](std::uint64_t s) { return anchors_fig(Kind::tear, s); })},
        {"fig17", "trace durability", plain(fig17)},
    };
    return e;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p);
    if (!out) throw InputError("cannot write " + p.string());
    out << s;
}

std::string opt_num(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

} // namespace

const std::vector<std::string>& registry() {
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> v;
        for (const auto& e : entries()) v.emplace_back(e.id);
        return v;
    }();
    return ids;
}

bool is_registered(std::string_view id) {
    const auto& r = registry();
    return std::find(r.begin(), r.end(), id) != r.end();
}

ReproResult run_repro(const std::string& id, const std::optional<std::filesystem::path>& out_dir, std::uint64_t seed) {
    const auto& all = entries();
    const auto it = std::find_if(all.begin(), all.end(), [&](const Entry& e) { return id == e.id; });
    if (it == all.end()) {
        std::string names;
        for (const auto& r : registry()) names += (names.empty() ? "" : ", ") + r;
        throw InputError("unknown repro id '" + id + "'; registry: " + names);
    }
    const auto published = load_published(paper_data_path(id + ".csv"));
    ReproResult res{id, it->title, Verdict::pass, it->fn(seed, published), {}, {}};
    res.diff = compare(res.model, published);
    res.status = overall(res.diff);

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        std::ostringstream model, pub, diff;
        model << "key,value\n";
        for (const auto& [k, v] : res.model.values) model << k << ',' << format_number(v) << '\n';
        pub << "key,value,tolerance,unit,expect,note\n";
        for (const auto& p : published)
            pub << p.key << ',' << format_number(p.value) << ',' << format_number(p.tolerance) << ',' << p.unit << ','
                << expect_name(p.expect) << ',' << p.note << '\n';
        diff << "key,model,published,delta,tolerance,unit,expect,verdict,note\n";
        for (const auto& d : res.diff)
            diff << d.key << ',' << opt_num(d.model) << ',' << format_number(d.published) << ','
                 << (d.model ? format_number(*d.model - d.published) : std::string()) << ','
                 << format_number(d.tolerance) << ',' << d.unit << ',' << expect_name(d.expect) << ','
                 << verdict_name(d.verdict) << ',' << d.note << '\n';
        const auto base = *out_dir;
        for (const auto& [name, text] : {std::pair{id + "_model.csv", model.str()}, std::pair{id + "_published.csv", pub.str()},
                                         std::pair{id + "_diff.csv", diff.str()}}) {
            write_text(base / name, text);
            res.files.push_back(base / name);
        }
        if (!res.model.series.empty()) {
            std::ostringstream s;
            for (std::size_t i = 0; i < res.model.series_header.size(); ++i) s << (i ? "," : "") << res.model.series_header[i];
            s << '\n';
            for (const auto& row : res.model.series) {
                for (std::size_t i = 0; i < row.size(); ++i) s << (i ? "," : "") << format_number(row[i]);
                s << '\n';
            }
            write_text(base / (id + "_series.csv"), s.str());
            res.files.push_back(base / (id + "_series.csv"));
        }
    }
    return res;
}

} // namespace tdotag::repro
