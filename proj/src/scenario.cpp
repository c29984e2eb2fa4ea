#include "tdotag/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numbers>

#include "tdotag/csv.hpp"
#include "tdotag/errors.hpp"
#include "tdotag/rng.hpp"
#include "tdotag/spectral.hpp"

namespace tdotag::scenario {

using nlohmann::json;

RxMode parse_rx_mode(const std::string& name) {
    if (name == "spectral") return RxMode::spectral;
    if (name == "iq") return RxMode::iq;
    throw InputError("unknown receiver mode '" + name + "' (expected spectral or iq)");
}

double TimerSetup::effective_duty() const { return stated_duty ? *stated_duty : power::duty_cycle(timer); }

double LuxProfile::at(double t) const {
    const double s = std::floor(t);
    switch (kind) {
    case Kind::constant: return lux;
    case Kind::diurnal: {
        const double x = 2.0 * std::numbers::pi * (s - phase_s) / period_s;
        return min_lux + (max_lux - min_lux) * 0.5 * (1.0 - std::cos(x));
    }
    case Kind::steps:
    case Kind::csv: {
        auto it = std::upper_bound(points.begin(), points.end(), s,
                                   [](double v, const analytics::LuxSample& p) { return v < p.timestamp_s; });
        if (it == points.begin()) return points.front().lux;
        return std::prev(it)->lux;
    }
    }
    return lux;
}

void Scenario::validate() const {
    if (!(duration_s > 0)) throw InputError("scenario: duration_s must be positive");
    if (!(time_step_s > 0)) throw InputError("scenario: time_step_s must be positive");
    const double sps = 1.0 / time_step_s;
    if (std::abs(sps - std::round(sps)) > 1e-9) throw InputError("scenario: 1 / time_step_s must be an integer");
    if (!(trace_interval_s >= time_step_s)) throw InputError("scenario: trace_interval_s below time_step_s");
    if (tags.empty()) throw InputError("scenario: no tags");
    for (std::size_t i = 0; i < tags.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (tags[i].id == tags[j].id) throw InputError("scenario: duplicate tag id '" + tags[i].id + "'");
    for (std::size_t i = 1; i < script.size(); ++i)
        if (script[i].t_s < script[i - 1].t_s) throw InputError("scenario: script must be time-ordered");
    for (const auto& e : script) {
        const auto& tag = tags[tag_index(e.tag_id)];
        if (tag.mode != TagMode::interaction)
            throw InputError("scenario: script entry for continuous tag '" + e.tag_id + "'");
        if (e.t_s < 0 || e.t_s > duration_s) throw InputError("scenario: script entry outside the run");
    }
    if ((lux.kind == LuxProfile::Kind::steps || lux.kind == LuxProfile::Kind::csv) && lux.points.empty())
        throw InputError("scenario: lux profile has no points");
}

std::size_t Scenario::tag_index(const std::string& id) const {
    for (std::size_t i = 0; i < tags.size(); ++i)
        if (tags[i].id == id) return i;
    throw InputError("scenario: unknown tag '" + id + "'");
}

std::int64_t Scenario::steps_per_second() const { return std::llround(1.0 / time_step_s); }

std::int64_t Scenario::steps() const { return std::llround(duration_s / time_step_s); }

namespace {

template <class T>
std::optional<T> opt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

CapConfig parse_cap(const json& j, CapConfig def) {
    if (j.is_null()) return def;
    CapConfig c = def;
    c.capacitance_f = j.value("capacitance_f", def.capacitance_f);
    c.initial_v = j.value("initial_v", def.initial_v);
    c.max_v = j.value("max_v", std::max(def.max_v, c.initial_v));
    c.min_v = j.value("min_v", def.min_v);
    if (!(c.capacitance_f > 0)) throw InputError("capacitor: capacitance_f must be positive");
    if (!(c.initial_v >= 0 && c.initial_v <= c.max_v)) throw InputError("capacitor: initial_v outside [0, max_v]");
    return c;
}

struct ChannelSetup {
    channel::PathLossModel path;
    double distance_m = 1.0;
    std::optional<channel::FloorModel> floors;
};

ChannelSetup parse_channel(const json& j) {
    ChannelSetup c;
    if (j.contains("snr0_db")) {
        c.path = channel::PathLossModel{j.at("snr0_db").get<double>(), j.at("exponent").get<double>(),
                                        j.value("threshold_db", 5.0), 1.0};
        c.path.validate();
    } else {
        c.path = channel::range_model(j.value("photodiodes", 25));
    }
    c.distance_m = j.value("distance_m", 1.0);
    return c;
}

double link_snr(const json& t, ChannelSetup& ch) {
    if (auto v = opt<double>(t, "link_snr_db")) return *v;
    if (auto f = opt<int>(t, "floor_offset")) {
        if (!ch.floors) ch.floors = channel::default_floor_model();
        return channel::floor_snr(*ch.floors, *f).snr_db;
    }
    return channel::snr_at(ch.path, t.value("distance_m", ch.distance_m));
}

TagConfig parse_tag(const json& t, ChannelSetup& ch) {
    TagConfig tag;
    tag.id = t.at("id").get<std::string>();
    const auto mode = t.value("mode", std::string("continuous"));
    if (mode == "continuous") tag.mode = TagMode::continuous;
    else if (mode == "interaction") tag.mode = TagMode::interaction;
    else throw InputError("tag " + tag.id + ": unknown mode '" + mode + "'");
    tag.band = {tag.id, t.at("band_lo_hz").get<double>(), t.at("band_hi_hz").get<double>()};
    tag.base_freq_hz = opt<double>(t, "base_freq_hz");
    if (t.contains("light_response")) {
        const auto& l = t.at("light_response");
        power::LightResponseModel m;
        m.anchor_lux = l.value("anchor_lux", m.anchor_lux);
        m.anchor_freq_hz = l.value("anchor_freq_hz", m.anchor_freq_hz);
        m.slope_hz_per_lux = l.value("slope_hz_per_lux", m.slope_hz_per_lux);
        m.shutdown_lux = l.value("shutdown_lux", m.shutdown_lux);
        m.noise_sd_hz = l.value("noise_sd_hz", m.noise_sd_hz);
        m.validate();
        tag.light = m;
    }
    if (t.contains("transducer")) {
        const auto& x = t.at("transducer");
        const auto kind = transducers::parse_kind(x.at("kind").get<std::string>());
        tag.transducer = transducers::default_transducer(kind, tag.base_freq_hz);
        if (x.contains("state"))
            tag.transducer_stimulus =
                static_cast<int>(transducers::parse_origami_state(x.at("state").get<std::string>()));
        else
            tag.transducer_stimulus = x.value("stimulus", 0.0);
    }
    if (!tag.base_freq_hz && !tag.transducer && !tag.light && tag.mode == TagMode::continuous)
        throw InputError("tag " + tag.id + ": needs base_freq_hz, a transducer or a light response");
    tag.array = harvest::default_array(t.value("photodiodes", 25));
    tag.tdo_power_w = t.value("tdo_power_w", 50e-6);
    const CapConfig def = tag.mode == TagMode::continuous ? CapConfig{0.47, 0.3, 0.3, 0.25} : CapConfig{0.047, 1.0, 1.0, 0.25};
    tag.supply = parse_cap(t.value("supply", json()), def);
    if (t.contains("timer")) {
        const auto& x = t.at("timer");
        TimerSetup ts;
        ts.timer = {x.at("r3_ohm").get<double>(), x.at("r4_ohm").get<double>(), x.at("ct_f").get<double>(),
                    x.value("bypass_diode", false), x.value("min_supply_v", 0.6)};
        ts.timer.validate();
        ts.stated_clock_hz = opt<double>(x, "stated_clock_hz");
        ts.stated_duty = opt<double>(x, "stated_duty");
        ts.switch_photodiodes = x.value("switch_photodiodes", 6);
        tag.timer = ts;
    }
    tag.switch_overhead_w = t.value("switch_overhead_w", 7e-6);
    if (t.contains("trigger")) {
        const auto& x = t.at("trigger");
        tag.trigger.kind = transducers::parse_trigger_kind(x.value("kind", std::string("reed")));
        tag.trigger.threshold = x.value("threshold", tag.trigger.kind == transducers::TriggerKind::reed ? 5.0 : 60.0);
        tag.trigger.failure_prob = x.value("failure_prob", 0.0);
        tag.trigger.validate();
        const auto fm = x.value("failure_mode", std::string("bernoulli"));
        if (fm != "bernoulli" && fm != "scripted") throw InputError("tag " + tag.id + ": unknown failure_mode " + fm);
        tag.scripted_failures = fm == "scripted";
    }
    if (t.contains("activation")) {
        const auto& x = t.at("activation");
        tag.activation = {x.value("activation_s", 0.5), x.value("on_time_s", 2.0)};
    }
    tag.link_snr_db = link_snr(t, ch);
    tag.report_energy = t.value("report_energy", true);
    return tag;
}

LuxProfile parse_lux(const json& j, const std::filesystem::path& base) {
    LuxProfile p;
    if (j.is_null()) return p;
    const auto kind = j.value("profile", std::string("constant"));
    if (kind == "constant") {
        p.kind = LuxProfile::Kind::constant;
        p.lux = j.value("lux", 1000.0);
    } else if (kind == "steps") {
        p.kind = LuxProfile::Kind::steps;
        for (const auto& s : j.at("steps")) p.points.push_back({s.at("t_s").get<double>(), s.at("lux").get<double>()});
    } else if (kind == "diurnal") {
        p.kind = LuxProfile::Kind::diurnal;
        p.min_lux = j.value("min_lux", p.min_lux);
        p.max_lux = j.value("max_lux", p.max_lux);
        p.period_s = j.value("period_s", p.period_s);
        p.phase_s = j.value("phase_s", p.phase_s);
    } else if (kind == "csv") {
        p.kind = LuxProfile::Kind::csv;
        const auto t = CsvTable::read(base / j.at("path").get<std::string>());
        t.require({"timestamp_s", "lux"});
        for (std::size_t r = 0; r < t.rows(); ++r) p.points.push_back({t.number(r, "timestamp_s"), t.number(r, "lux")});
    } else {
        throw InputError("unknown lux profile '" + kind + "'");
    }
    for (std::size_t i = 1; i < p.points.size(); ++i)
        if (p.points[i].timestamp_s < p.points[i - 1].timestamp_s) throw InputError("lux profile must be time-ordered");
    return p;
}

} // namespace

Scenario parse_scenario(const json& j, const std::filesystem::path& base) {
    try {
        if (j.value("schema", 0) != kSchemaVersion)
            throw InputError("scenario: unsupported schema (expected " + std::to_string(kSchemaVersion) + ")");
        Scenario sc;
        sc.name = j.value("name", std::string("scenario"));
        sc.seed = j.value("seed", kDefaultSeed);
        sc.duration_s = j.at("duration_s").get<double>();
        sc.time_step_s = j.value("time_step_s", 0.01);
        sc.start_unix_s = j.value("start_unix_s", 0.0);
        sc.trace_interval_s = j.value("trace_interval_s", 1.0);
        sc.mode = parse_rx_mode(j.value("mode", std::string("spectral")));
        sc.match_window_s = j.value("match_window_s", 5.0);

        const json rx = j.value("receiver", json::object());
        auto& r = sc.receiver;
        r.rx.sample_rate_hz = rx.value("sample_rate_hz", 2.56e6);
        r.rx.center_freq_hz = rx.value("center_freq_hz", 0.0);
        r.rx.stft.fft_size = rx.value("fft_size", std::size_t{4096});
        r.rx.stft.hop = rx.value("hop", r.rx.stft.fft_size / 2);
        r.rx.stft.averages = rx.value("averages", std::size_t{16});
        r.rx.stft.window = dsp::parse_window(rx.value("window", std::string("blackman_harris_4")));
        r.rx.detector.threshold_db = rx.value("threshold_db", 5.0);
        r.rx.detector.debounce = rx.value("debounce", std::size_t{3});
        r.rx.detector.guard = rx.value("guard", std::size_t{8});
        r.rx.detector.neighbourhood = rx.value("neighbourhood", std::size_t{256});
        r.noise_floor_db = rx.value("noise_floor_db", -100.0);
        r.rx.stft.validate();
        r.rx.detector.validate();

        ChannelSetup ch = parse_channel(j.value("channel", json::object()));
        for (const auto& t : j.at("tags")) sc.tags.push_back(parse_tag(t, ch));
        sc.lux = parse_lux(j.value("environment", json::object()).value("lux", json()), base);
        for (const auto& e : j.value("script", json::array())) {
            ScriptEntry s;
            s.tag_id = e.at("tag_id").get<std::string>();
            s.t_s = e.at("t_s").get<double>();
            s.stimulus = e.value("stimulus", 0.0);
            s.freq_hz = opt<double>(e, "freq_hz");
            s.transducer_stimulus = opt<double>(e, "transducer_stimulus");
            s.fail = e.value("fail", false);
            sc.script.push_back(s);
        }
        std::stable_sort(sc.script.begin(), sc.script.end(),
                         [](const ScriptEntry& a, const ScriptEntry& b) { return a.t_s < b.t_s; });
        sc.validate();
        return sc;
    } catch (const json::exception& e) {
        throw InputError(std::string("scenario: ") + e.what());
    }
}

json load_scenario_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read scenario " + path.string());
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    return parse_scenario(load_scenario_json(path), path.parent_path());
}

std::uint64_t trigger_seed(std::uint64_t seed, std::size_t entry) { return mix_seed(seed ^ 0x747269676765ULL, entry); }
std::uint64_t delay_seed(std::uint64_t seed, std::size_t entry) { return mix_seed(seed ^ 0x64656c6179ULL, entry); }
std::uint64_t freq_seed(std::uint64_t seed, std::size_t entry) { return mix_seed(seed ^ 0x66726571ULL, entry); }

Simulator::Simulator(const Scenario& sc) : sc_(sc), sps_(sc.steps_per_second()) {
    sc_.validate();
    trace_every_ = std::max<std::int64_t>(1, std::llround(sc.trace_interval_s / sc.time_step_s));
    tag_activations_.resize(sc.tags.size());
    for (const auto& tag : sc.tags) {
        TagRuntime r;
        r.supply = harvest::Supercapacitor(tag.supply.capacitance_f, tag.supply.initial_v, tag.id + ".supply");
        if (tag.timer) {
            r.switch_cap = harvest::Supercapacitor(0.047, 1.0, tag.id + ".switch");
            r.switch_array = harvest::default_array(tag.timer->switch_photodiodes);
            const auto w = power::consistency_warnings(tag.timer->timer, tag.timer->stated_clock_hz, tag.timer->stated_duty);
            for (const auto& m : w) warnings_.push_back(tag.id + ": " + m);
        }
        rt_.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < sc.script.size(); ++i) {
        const auto& e = sc.script[i];
        const std::size_t ti = sc.tag_index(e.tag_id);
        const auto& tag = sc.tags[ti];
        truth_.entries.push_back({e.tag_id, e.t_s, tag.trigger.kind == transducers::TriggerKind::reed
                                                        ? "reed " + format_number(e.stimulus) + " mm"
                                                        : "tilt " + format_number(e.stimulus) + " deg"});
        Activation a{i, ti, false, 0, 0, 0};
        a.fired = tag.scripted_failures ? transducers::trigger_evaluate_scripted(tag.trigger, e.stimulus, e.fail)
                                        : transducers::trigger_evaluate(tag.trigger, e.stimulus, trigger_seed(sc.seed, i));
        auto drng = make_rng(delay_seed(sc.seed, i));
        const double jitter = 0.2 * (2.0 * uniform01(drng) - 1.0);
        a.on_start_s = e.t_s + tag.activation.activation_s * (1.0 + jitter);
        a.on_end_s = a.on_start_s + tag.activation.on_time_s;
        if (e.freq_hz) {
            a.freq_hz = *e.freq_hz;
        } else if (tag.transducer) {
            auto frng = make_rng(freq_seed(sc.seed, i));
            const auto f = tag.transducer->sample(e.transducer_stimulus.value_or(tag.transducer_stimulus), frng);
            if (!f) a.fired = false;
            a.freq_hz = f.value_or(0.0);
        } else if (tag.base_freq_hz) {
            a.freq_hz = *tag.base_freq_hz;
        } else {
            throw InputError("tag " + tag.id + ": no frequency for script entry");
        }
        if (a.fired) tag_activations_[ti].push_back(activations_.size());
        activations_.push_back(a);
    }
}

double Simulator::time_s() const { return static_cast<double>(k_) * sc_.time_step_s; }

bool Simulator::compressible() const {
    return std::all_of(sc_.tags.begin(), sc_.tags.end(), [](const TagConfig& t) { return t.mode == TagMode::interaction; });
}

std::vector<std::pair<std::int64_t, std::int64_t>> Simulator::busy_windows() const {
    std::vector<std::pair<std::int64_t, std::int64_t>> w;
    const std::int64_t end = sc_.steps();
    for (const auto& a : activations_) {
        if (!a.fired) continue;
        const auto lo = static_cast<std::int64_t>(std::floor((a.on_start_s - 1.0) / sc_.time_step_s));
        const auto hi = static_cast<std::int64_t>(std::ceil((a.on_end_s + 1.0) / sc_.time_step_s));
        w.emplace_back(std::clamp<std::int64_t>(lo, 0, end), std::clamp<std::int64_t>(hi, 0, end));
    }
    std::sort(w.begin(), w.end());
    std::vector<std::pair<std::int64_t, std::int64_t>> merged;
    for (const auto& x : w) {
        if (x.first >= x.second) continue;
        if (!merged.empty() && x.first <= merged.back().second) merged.back().second = std::max(merged.back().second, x.second);
        else merged.push_back(x);
    }
    return merged;
}

double Simulator::nominal_freq(const TagConfig& tag, double lux) const {
    double f;
    if (tag.transducer) {
        const auto v = tag.transducer->frequency(tag.transducer_stimulus);
        if (!v) return std::numeric_limits<double>::quiet_NaN();
        f = *v;
    } else if (tag.base_freq_hz) {
        f = *tag.base_freq_hz;
    } else {
        f = tag.light->anchor_freq_hz;
    }
    if (tag.light) {
        const auto v = power::frequency_under_light(*tag.light, lux);
        if (!v) return std::numeric_limits<double>::quiet_NaN();
        f += *v - tag.light->anchor_freq_hz;
    }
    return f;
}

void Simulator::record_trace(double t, double lux, const std::vector<TagEmission>& em) {
    for (std::size_t i = 0; i < sc_.tags.size(); ++i) {
        const auto& r = rt_[i];
        trace_.push_back({t, lux, i, em[i].active, em[i].active ? em[i].freq_hz : 0.0, r.supply.voltage_v,
                          r.switch_cap ? r.switch_cap->voltage_v : 0.0, r.last_harvest});
    }
}

std::vector<TagEmission> Simulator::step() {
    if (k_ >= sc_.steps()) throw ModelError("simulator: run already complete");
    const double dt = sc_.time_step_s;
    const double t = time_s();
    const double lux = sc_.lux.at(t);
    std::vector<TagEmission> out(sc_.tags.size());

    for (std::size_t i = 0; i < sc_.tags.size(); ++i) {
        const auto& tag = sc_.tags[i];
        auto& r = rt_[i];
        r.last_harvest = harvest::harvest_power(tag.array, lux);

        bool switch_ok = true;
        if (r.switch_cap) {
            switch_ok = r.switch_cap->voltage_v >= tag.timer->timer.min_supply_v;
            const double p_sw = harvest::harvest_power(r.switch_array, lux);
            *r.switch_cap = harvest::charge_step(*r.switch_cap, p_sw, switch_ok ? tag.switch_overhead_w : 0.0, dt);
            r.switch_cap->voltage_v = std::min(r.switch_cap->voltage_v, 1.0);
        }
        const bool powered = switch_ok && r.supply.voltage_v >= tag.supply.min_v;

        double freq = std::numeric_limits<double>::quiet_NaN();
        long long key = -1;
        if (tag.mode == TagMode::continuous) {
            freq = nominal_freq(tag, lux);
        } else {
            for (std::size_t ai : tag_activations_[i]) {
                const auto& a = activations_[ai];
                if (t >= a.on_start_s && t < a.on_end_s) {
                    freq = a.freq_hz;
                    key = static_cast<long long>(ai);
                    break;
                }
            }
        }
        const bool emitting = powered && !std::isnan(freq);
        const double duty = tag.timer ? tag.timer->effective_duty() : 1.0;
        r.supply = harvest::charge_step(r.supply, r.last_harvest, emitting ? duty * tag.tdo_power_w : 0.0, dt);
        r.supply.voltage_v = std::min(r.supply.voltage_v, tag.supply.max_v);

        if (!emitting) {
            r.open_segment.reset();
            continue;
        }
        const bool same = r.open_segment && (tag.mode == TagMode::continuous ? r.segment_nominal == freq
                                                                             : emissions_[*r.open_segment].entry ==
                                                                                   std::optional<std::size_t>(activations_[key].entry));
        if (!same) {
            double f = freq;
            std::optional<std::size_t> entry;
            if (tag.mode == TagMode::continuous) {
                const double sd = tag.transducer ? tag.transducer->noise_sd(tag.transducer_stimulus) : 0.0;
                if (sd > 0) {
                    auto rng = make_rng(mix_seed(sc_.seed, 0x5e6 + i), r.segments);
                    f += std::normal_distribution<double>(0.0, sd)(rng);
                }
            } else {
                entry = activations_[key].entry;
            }
            ++r.segments;
            r.segment_nominal = freq;
            r.open_segment = emissions_.size();
            emissions_.push_back({tag.id, entry, f, tag.link_snr_db, t, t + dt});
        }
        auto& seg = emissions_[*r.open_segment];
        seg.end_s = static_cast<double>(k_ + 1) * dt;
        out[i] = {true, seg.freq_hz};
    }
    if (k_ % trace_every_ == 0) record_trace(t, lux, out);
    ++k_;
    return out;
}

void Simulator::advance_idle(std::int64_t target) {
    if (target <= k_) return;
    if (!compressible()) throw ModelError("simulator: idle advance needs interaction-only tags");
    target = std::min(target, sc_.steps());
    const double t_end = static_cast<double>(target) * sc_.time_step_s;
    for (const auto& a : activations_)
        if (a.fired && a.on_end_s > time_s() && a.on_start_s < t_end)
            throw ModelError("simulator: idle advance across an activation");
    const std::vector<TagEmission> idle(sc_.tags.size());
    for (auto& r : rt_) r.open_segment.reset();
    while (k_ < target) {
        const std::int64_t next = std::min(target, (k_ / sps_ + 1) * sps_);
        const double dt = static_cast<double>(next - k_) * sc_.time_step_s;
        const double t = time_s();
        const double lux = sc_.lux.at(t);
        for (std::size_t i = 0; i < sc_.tags.size(); ++i) {
            const auto& tag = sc_.tags[i];
            auto& r = rt_[i];
            r.last_harvest = harvest::harvest_power(tag.array, lux);
            if (r.switch_cap) {
                const bool ok = r.switch_cap->voltage_v >= tag.timer->timer.min_supply_v;
                *r.switch_cap = harvest::charge_step(*r.switch_cap, harvest::harvest_power(r.switch_array, lux),
                                                     ok ? tag.switch_overhead_w : 0.0, dt);
                r.switch_cap->voltage_v = std::min(r.switch_cap->voltage_v, 1.0);
            }
            r.supply = harvest::charge_step(r.supply, r.last_harvest, 0.0, dt);
            r.supply.voltage_v = std::min(r.supply.voltage_v, tag.supply.max_v);
        }
        // Chunks start on whole seconds, which is where the trace is sampled.
        for (std::int64_t kk = k_; kk < next; ++kk)
            if (kk % trace_every_ == 0) record_trace(static_cast<double>(kk) * sc_.time_step_s, lux, idle);
        k_ = next;
    }
}

void Simulator::finish() {
    for (auto& r : rt_) r.open_segment.reset();
}

std::vector<dsp::Tone> emissions_to_tones(const Scenario& sc, const std::vector<Emission>& em) {
    const double pg = dsp::processing_gain_db(sc.receiver.rx.stft.window, sc.receiver.rx.stft.fft_size);
    std::vector<dsp::Tone> tones;
    for (const auto& e : em)
        tones.push_back({e.freq_hz, sc.receiver.noise_floor_db + e.snr_db - pg, e.start_s, e.end_s});
    return tones;
}

namespace {

std::vector<dsp::TagEvent> receive_spectral(const Scenario& sc, const std::vector<dsp::Tone>& tones,
                                            std::size_t* frames_done) {
    const auto geom = sc.receiver.rx.geometry();
    const auto total_samples = static_cast<std::size_t>(std::llround(sc.duration_s * geom.sample_rate_hz));
    const std::size_t total = geom.frames_in(total_samples);
    const auto margin = static_cast<std::ptrdiff_t>(sc.receiver.rx.detector.debounce + 2 + geom.span() / geom.hop());
    const double hop_s = static_cast<double>(geom.hop()) / geom.sample_rate_hz;

    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (const auto& t : tones) {
        const auto lo = static_cast<std::ptrdiff_t>(std::floor(t.start_s / hop_s)) - margin;
        const auto hi = static_cast<std::ptrdiff_t>(std::ceil(t.end_s / hop_s)) + margin;
        const auto clampf = [&](std::ptrdiff_t f) {
            return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(f, 0, static_cast<std::ptrdiff_t>(total)));
        };
        spans.emplace_back(clampf(lo), clampf(hi));
    }
    std::sort(spans.begin(), spans.end());
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (const auto& s : spans) {
        if (s.first >= s.second) continue;
        if (!merged.empty() && s.first <= merged.back().second) merged.back().second = std::max(merged.back().second, s.second);
        else merged.push_back(s);
    }

    std::vector<dsp::Band> bands;
    for (const auto& tag : sc.tags) bands.push_back(tag.band);
    std::vector<dsp::TagEvent> events;
    const std::uint64_t seed = mix_seed(sc.seed, 0x5ec);
    for (const auto& [f0, f1] : merged) {
        const double t0 = geom.frame_start_s(f0);
        const double t1 = geom.frame_end_s(f1 - 1);
        std::vector<dsp::Tone> local;
        for (const auto& t : tones)
            if (t.end_s > t0 && t.start_s < t1) local.push_back(t);
        const auto spec = spectral::synthesize_spectrogram(local, sc.receiver.noise_floor_db, geom,
                                                           sc.receiver.rx.stft.window, f0, f1 - f0, seed);
        dsp::EventDetector det(bands, sc.receiver.rx.detector, geom);
        for (std::size_t i = 0; i < spec.frames; ++i) det.push(f0 + i, spec.row(i));
        auto ev = det.finish();
        events.insert(events.end(), ev.begin(), ev.end());
        *frames_done += f1 - f0;
    }
    std::stable_sort(events.begin(), events.end(), [](const dsp::TagEvent& a, const dsp::TagEvent& b) {
        return a.start_s != b.start_s ? a.start_s < b.start_s : a.tag_id < b.tag_id;
    });
    return events;
}

constexpr double kMaxIqSamples = 2e8;

std::vector<dsp::TagEvent> receive_iq(const Scenario& sc, const std::vector<dsp::Tone>& tones, std::size_t* frames_done) {
    const auto& rx = sc.receiver.rx;
    if (sc.duration_s * rx.sample_rate_hz > kMaxIqSamples)
        throw InputError("iq mode is limited to short scenarios; use spectral mode");
    auto stream = dsp::synthesize_iq(tones, sc.receiver.noise_floor_db, sc.duration_s, rx.sample_rate_hz,
                                     mix_seed(sc.seed, 0x10), rx.center_freq_hz);
    stream.start_unix_s = sc.start_unix_s;
    const auto spec = dsp::stft(stream, rx.stft);
    *frames_done = spec.frames;
    std::vector<dsp::Band> bands;
    for (const auto& tag : sc.tags) bands.push_back(tag.band);
    return dsp::detect_events(spec, bands, rx.detector);
}

} // namespace

RunResult run(const Scenario& sc, const RunOptions& opt) {
    Simulator sim(sc);
    RunResult res;
    if (opt.compress && sim.compressible()) {
        res.compressed = true;
        for (const auto& [a, b] : sim.busy_windows()) {
            sim.advance_idle(a);
            while (sim.step_index() < b) sim.step();
        }
        sim.advance_idle(sc.steps());
    } else {
        while (sim.step_index() < sc.steps()) sim.step();
    }
    sim.finish();

    res.trace = sim.trace();
    res.emissions = sim.emissions();
    res.truth = sim.truth();
    res.warnings = sim.warnings();
    for (std::size_t s = 0; s < res.trace.size(); s += sc.tags.size())
        res.truth.lux_trace.push_back({res.trace[s].t_s, res.trace[s].lux});

    const auto tones = emissions_to_tones(sc, res.emissions);
    const RxMode mode = opt.mode.value_or(sc.mode);
    res.events = mode == RxMode::spectral ? receive_spectral(sc, tones, &res.frames_processed)
                                          : receive_iq(sc, tones, &res.frames_processed);
    res.report = analytics::match_events(res.events, res.truth, sc.match_window_s);
    for (const auto& m : res.report.matches) {
        const auto it = std::find_if(res.emissions.begin(), res.emissions.end(),
                                     [&](const Emission& e) { return e.entry == m.truth_index; });
        if (it != res.emissions.end()) res.latencies_s.push_back(res.events[m.detection_index].detected_at_s - it->start_s);
    }
    return res;
}

namespace {

SweepRow summarize(double value, const RunResult& r) {
    SweepRow row{value, r.emissions.size(), r.events.size(), r.report.total_misses, r.report.false_positives,
                 r.report.failure_rate_pct, std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN()};
    if (!r.emissions.empty()) {
        double s = 0;
        for (const auto& e : r.emissions) s += e.snr_db;
        row.mean_link_snr_db = s / static_cast<double>(r.emissions.size());
    }
    if (!r.events.empty()) {
        double s = 0;
        for (const auto& e : r.events) s += e.peak_snr_db;
        row.mean_event_snr_db = s / static_cast<double>(r.events.size());
    }
    return row;
}

SweepRow sweep_one(const json& tmpl, const json::json_pointer& ptr, double v, const std::filesystem::path& base,
                   const RunOptions& opt) {
    json j = tmpl;
    j[ptr] = v;
    return summarize(v, run(parse_scenario(j, base), opt));
}

json::json_pointer pointer_for(const json& tmpl, const std::string& pointer) {
    try {
        json::json_pointer ptr(pointer);
        if (!tmpl.contains(ptr)) throw InputError("sweep: parameter " + pointer + " not present in the template");
        return ptr;
    } catch (const json::exception& e) {
        throw InputError("sweep: bad parameter pointer " + pointer + ": " + e.what());
    }
}

} // namespace

std::vector<SweepRow> sweep(const json& tmpl, const std::string& pointer, const std::vector<double>& values,
                            const std::filesystem::path& base, const RunOptions& opt) {
    const auto ptr = pointer_for(tmpl, pointer);
    std::vector<SweepRow> rows(values.size());
    std::exception_ptr err;
    const auto n = static_cast<std::ptrdiff_t>(values.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            rows[static_cast<std::size_t>(i)] = sweep_one(tmpl, ptr, values[static_cast<std::size_t>(i)], base, opt);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return rows;
}

std::vector<SweepRow> sweep_serial(const json& tmpl, const std::string& pointer, const std::vector<double>& values,
                                   const std::filesystem::path& base, const RunOptions& opt) {
    const auto ptr = pointer_for(tmpl, pointer);
    std::vector<SweepRow> rows;
    for (double v : values) rows.push_back(sweep_one(tmpl, ptr, v, base, opt));
    return rows;
}

std::vector<double> light_sweep(const power::LightResponseModel& model, const std::vector<double>& lux,
                                std::uint64_t seed) {
    model.validate();
    auto rng = make_rng(seed, 0x11);
    std::normal_distribution<double> nd(0.0, model.noise_sd_hz);
    std::vector<double> out;
    for (double l : lux) {
        const auto f = power::frequency_under_light(model, l);
        if (!f) throw DomainError("light_sweep: " + std::to_string(l) + " lux is below shutdown");
        out.push_back(model.noise_sd_hz > 0 ? *f + nd(rng) : *f);
    }
    return out;
}

} // namespace tdotag::scenario
