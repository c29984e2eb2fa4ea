// Command-line front end: scenarios, link and power calculators, IQ detection, reports, repro.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdotag/analytics.hpp"
#include "tdotag/channel.hpp"
#include "tdotag/csv.hpp"
#include "tdotag/errors.hpp"
#include "tdotag/iq_io.hpp"
#include "tdotag/power_switch.hpp"
#include "tdotag/repro.hpp"
#include "tdotag/scenario.hpp"

using nlohmann::json;
using namespace tdotag;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kToleranceFail = 1;
constexpr int kInputError = 2;

struct Common {
    std::string config;
    std::string out;
    std::uint64_t seed = scenario::kDefaultSeed;
    bool seed_set = false;
    std::string format = "csv";
    std::string mode;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "input configuration file");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--seed", c.seed, "random seed")->each([&c](const std::string&) { c.seed_set = true; });
    cmd->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--mode", c.mode, "receiver mode")->check(CLI::IsMember({"spectral", "iq"}));
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw InputError("cannot write " + p.string());
    out << text;
}

fs::path out_dir(const Common& c) {
    if (c.out.empty()) return {};
    fs::create_directories(c.out);
    return c.out;
}

std::string rows_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    std::ostringstream s;
    for (std::size_t i = 0; i < header.size(); ++i) s << (i ? "," : "") << header[i];
    s << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) s << (i ? "," : "") << format_number(r[i]);
        s << '\n';
    }
    return s.str();
}

json rows_json(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    json a = json::array();
    for (const auto& r : rows) {
        json o;
        for (std::size_t i = 0; i < header.size(); ++i)
            o[header[i]] = std::isfinite(r[i]) ? json(r[i]) : json(nullptr);
        a.push_back(o);
    }
    return a;
}

void emit_rows(const Common& c, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows,
               const std::string& name) {
    const std::string text = c.format == "json" ? rows_json(header, rows).dump(2) + "\n" : rows_csv(header, rows);
    const auto dir = out_dir(c);
    if (dir.empty()) std::cout << text;
    else write_file(dir / (name + (c.format == "json" ? ".json" : ".csv")), text);
}

std::string truth_csv(const analytics::GroundTruthLog& truth, double t0) {
    std::ostringstream s;
    s << "tag_id,timestamp_s,stimulus\n";
    for (const auto& e : truth.entries) s << e.tag_id << ',' << format_number(t0 + e.timestamp_s) << ',' << e.stimulus << '\n';
    return s.str();
}

int cmd_simulate(const Common& c) {
    if (c.config.empty()) throw InputError("simulate: --config is required");
    auto sc = scenario::load_scenario(c.config);
    if (c.seed_set) sc.seed = c.seed;
    scenario::RunOptions opt;
    if (!c.mode.empty()) opt.mode = scenario::parse_rx_mode(c.mode);
    const auto res = scenario::run(sc, opt);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';

    const auto dir = out_dir(c);
    if (!dir.empty()) {
        iq::write_events_csv(dir / "events.csv", res.events, sc.start_unix_s);
        write_file(dir / "truth.csv", truth_csv(res.truth, sc.start_unix_s));
        std::ostringstream tr;
        tr << "t_s,tag_id,lux,active,freq_hz,supply_v,switch_v,harvest_w\n";
        for (const auto& r : res.trace)
            tr << format_number(r.t_s) << ',' << sc.tags[r.tag].id << ',' << format_number(r.lux) << ',' << r.active << ','
               << format_number(r.freq_hz) << ',' << format_number(r.supply_v) << ',' << format_number(r.switch_v) << ','
               << format_number(r.harvest_w) << '\n';
        write_file(dir / "trace.csv", tr.str());
        json rep = analytics::to_json(res.report);
        rep["latencies_s"] = res.latencies_s;
        rep["frames_processed"] = res.frames_processed;
        rep["compressed"] = res.compressed;
        write_file(dir / "report.json", rep.dump(2) + "\n");
    }
    if (c.format == "json") {
        json rep = analytics::to_json(res.report);
        rep["latencies_s"] = res.latencies_s;
        std::cout << rep.dump(2) << '\n';
    } else {
        std::cout << analytics::format_table(res.report);
    }
    return kOk;
}

int cmd_range(const Common& c, int photodiodes, double step, double max_d) {
    const auto model = c.config.empty() ? channel::range_model(photodiodes) : channel::load_range_model(c.config, photodiodes);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0;; ++i) {
        const double d = model.d0_m + static_cast<double>(i) * step;
        if (d > max_d + 1e-9) break;
        rows.push_back({d, channel::snr_at(model, d)});
    }
    emit_rows(c, {"distance_m", "snr_db"}, rows, "range");
    std::cerr << "max range " << format_number(channel::max_range(model)) << " m at " << format_number(model.threshold_db)
              << " dB\n";
    return kOk;
}

struct PowerArgs {
    double duty = 1.0;
    double tdo_power_w = 49e-6;
    double overhead_w = 7e-6;
    double r3 = 0, r4 = 0, ct = 0;
    bool bypass = false;
    std::optional<double> stated_clock, stated_duty;
};

int cmd_power(const Common& c, const PowerArgs& a) {
    std::vector<std::vector<double>> rows;
    int status = kOk;
    if (a.r3 > 0 || a.r4 > 0 || a.ct > 0) {
        const power::TimerConfig cfg{a.r3, a.r4, a.ct, a.bypass};
        cfg.validate();
        const double duty = a.stated_duty.value_or(power::duty_cycle(cfg));
        const double p = power::average_power(duty, a.tdo_power_w, true, {0, 0, a.overhead_w});
        rows.push_back({power::clock_frequency(cfg), power::duty_cycle(cfg), duty, p});
        for (const auto& w : power::consistency_warnings(cfg, a.stated_clock, a.stated_duty)) {
            std::cerr << "warning: " << w << '\n';
        }
    } else {
        const bool sw = a.duty < 1.0;
        rows.push_back({NAN, NAN, a.duty, power::average_power(a.duty, a.tdo_power_w, sw, {0, 0, a.overhead_w})});
    }
    emit_rows(c, {"clock_hz", "timer_duty", "applied_duty", "average_power_w"}, rows, "power");
    return status;
}

int cmd_light(const Common& c, double lo, double hi, double step, bool noiseless) {
    power::LightResponseModel model;
    if (noiseless) model.noise_sd_hz = 0;
    std::vector<double> lux;
    for (double l = lo; l <= hi + 1e-9; l += step) lux.push_back(l);
    const auto f = scenario::light_sweep(model, lux, c.seed);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < lux.size(); ++i) rows.push_back({lux[i], f[i]});
    emit_rows(c, {"lux", "freq_hz"}, rows, "light");
    if (lux.size() >= 2) {
        const auto fit = analytics::regression_fit(lux, f);
        std::cerr << "slope " << format_number(fit.slope * 100 / 1e6) << " MHz per 100 lux, R^2 "
                  << format_number(fit.r_squared) << '\n';
    }
    return kOk;
}

int cmd_detect(const Common& c, const std::string& input) {
    if (input.empty() || c.config.empty()) throw InputError("detect: --input and --config are required");
    const json cfg = scenario::load_scenario_json(c.config);
    std::vector<dsp::Band> bands;
    dsp::ReceiverConfig rx;
    try {
        for (const auto& b : cfg.at("bands"))
            bands.push_back({b.at("tag_id").get<std::string>(), b.at("lo_hz").get<double>(), b.at("hi_hz").get<double>()});
        const json r = cfg.value("receiver", json::object());
        rx.stft.fft_size = r.value("fft_size", rx.stft.fft_size);
        rx.stft.hop = r.value("hop", rx.stft.fft_size / 2);
        rx.stft.averages = r.value("averages", rx.stft.averages);
        rx.stft.window = dsp::parse_window(r.value("window", std::string("blackman_harris_4")));
        rx.detector.threshold_db = r.value("threshold_db", rx.detector.threshold_db);
        rx.detector.debounce = r.value("debounce", rx.detector.debounce);
    } catch (const json::exception& e) {
        throw InputError(std::string("detect config: ") + e.what());
    }
    const auto stream = iq::read_iq(input);
    const auto spec = dsp::stft(stream, rx.stft);
    const auto events = dsp::detect_events(spec, bands, rx.detector);
    const auto dir = out_dir(c);
    if (dir.empty()) std::cout << iq::events_csv(events, stream.start_unix_s);
    else iq::write_events_csv(dir / "events.csv", events, stream.start_unix_s);
    std::cerr << events.size() << " events\n";
    return kOk;
}

int cmd_analyze(const Common& c, const std::string& events_path, const std::string& truth_path, const std::string& lux_path,
                double window) {
    if (events_path.empty() || truth_path.empty()) throw InputError("analyze: --events and --truth are required");
    const auto events = iq::read_events_csv(events_path);
    const auto truth = analytics::load_ground_truth(truth_path, lux_path);
    const auto report = analytics::match_events(events, truth, window);
    const std::string text = c.format == "json" ? analytics::to_json(report).dump(2) + "\n" : analytics::format_table(report);
    const auto dir = out_dir(c);
    if (dir.empty()) std::cout << text;
    else write_file(dir / (c.format == "json" ? "report.json" : "report.txt"), text);
    return kOk;
}

int cmd_sweep(const Common& c, const std::string& param, const std::vector<double>& values) {
    if (c.config.empty() || param.empty() || values.empty())
        throw InputError("sweep: --config, --param and --values are required");
    json tmpl = scenario::load_scenario_json(c.config);
    if (c.seed_set) tmpl["seed"] = c.seed;
    scenario::RunOptions opt;
    if (!c.mode.empty()) opt.mode = scenario::parse_rx_mode(c.mode);
    const auto rows = scenario::sweep(tmpl, param, values, fs::path(c.config).parent_path(), opt);
    std::vector<std::vector<double>> out;
    for (const auto& r : rows)
        out.push_back({r.value, static_cast<double>(r.emissions), static_cast<double>(r.events), static_cast<double>(r.misses),
                       static_cast<double>(r.false_positives), r.failure_rate_pct, r.mean_link_snr_db, r.mean_event_snr_db});
    emit_rows(c,
              {"value", "emissions", "events", "misses", "false_positives", "failure_rate_pct", "mean_link_snr_db",
               "mean_event_snr_db"},
              out, "sweep");
    return kOk;
}

int cmd_repro(const Common& c, std::vector<std::string> ids) {
    if (ids.empty()) throw InputError("repro: give one or more ids or 'all'; registry: " + [] {
        std::string s;
        for (const auto& r : repro::registry()) s += (s.empty() ? "" : ", ") + r;
        return s;
    }());
    if (ids.size() == 1 && ids[0] == "all") ids = repro::registry();
    for (const auto& id : ids)
        if (!repro::is_registered(id)) repro::run_repro(id);  // throws with the registry listing
    const auto dir = out_dir(c);
    int status = kOk;
    json all = json::array();
    for (const auto& id : ids) {
        const auto res = repro::run_repro(id, dir.empty() ? std::nullopt : std::optional<fs::path>(dir), c.seed);
        if (res.status == repro::Verdict::fail) status = kToleranceFail;
        if (c.format == "json") {
            json rows = json::array();
            for (const auto& d : res.diff)
                rows.push_back({{"key", d.key},
                                {"model", d.model ? json(*d.model) : json(nullptr)},
                                {"published", d.published},
                                {"tolerance", d.tolerance},
                                {"verdict", repro::verdict_name(d.verdict)},
                                {"note", d.note}});
            all.push_back({{"id", id}, {"status", repro::verdict_name(res.status)}, {"rows", rows}});
        } else {
            std::cout << id << ": " << repro::verdict_name(res.status) << " (" << res.title << ")\n";
            for (const auto& d : res.diff)
                if (d.verdict != repro::Verdict::pass)
                    std::cout << "  " << repro::verdict_name(d.verdict) << ' ' << d.key << " model "
                              << (d.model ? format_number(*d.model) : "n/a") << " published " << format_number(d.published)
                              << (d.note.empty() ? "" : " (" + d.note + ")") << '\n';
        }
    }
    if (c.format == "json") std::cout << all.dump(2) << '\n';
    return status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Batteryless oscillator tag simulator and receiver toolkit"};
    app.require_subcommand(1);

    Common sim_c, range_c, power_c, light_c, detect_c, analyze_c, sweep_c, repro_c;

    auto* sim = app.add_subcommand("simulate", "run a scenario end to end");
    add_common(sim, sim_c);

    auto* range = app.add_subcommand("range", "SNR versus distance from the fitted path-loss model");
    add_common(range, range_c);
    int photodiodes = 25;
    double range_step = 1.0, range_max = 50.0;
    range->add_option("--photodiodes", photodiodes, "photodiode count of the anchor pair");
    range->add_option("--step", range_step, "distance step (m)")->check(CLI::PositiveNumber);
    range->add_option("--max-distance", range_max, "largest distance (m)")->check(CLI::PositiveNumber);

    auto* pw = app.add_subcommand("power", "timer frequency, duty and average power");
    add_common(pw, power_c);
    PowerArgs pa;
    pw->add_option("--duty", pa.duty, "applied duty cycle")->check(CLI::Range(0.0, 1.0));
    pw->add_option("--tdo-power", pa.tdo_power_w, "continuous oscillator power (W)");
    pw->add_option("--overhead", pa.overhead_w, "switch overhead (W)");
    pw->add_option("--r3", pa.r3, "R3 (ohm)");
    pw->add_option("--r4", pa.r4, "R4 (ohm)");
    pw->add_option("--ct", pa.ct, "timing capacitor (F)");
    pw->add_flag("--bypass", pa.bypass, "bypass diode across R4");
    pw->add_option("--stated-clock", pa.stated_clock, "documented clock to check against (Hz)");
    pw->add_option("--stated-duty", pa.stated_duty, "documented duty to check against and apply");

    auto* light = app.add_subcommand("light", "oscillation frequency versus illuminance");
    add_common(light, light_c);
    double lux_lo = 500, lux_hi = 1000, lux_step = 10;
    bool noiseless = false;
    light->add_option("--from", lux_lo, "lowest lux");
    light->add_option("--to", lux_hi, "highest lux");
    light->add_option("--step", lux_step, "lux step")->check(CLI::PositiveNumber);
    light->add_flag("--noiseless", noiseless, "disable frequency scatter");

    auto* detect = app.add_subcommand("detect", "detect tag events in an IQ recording");
    add_common(detect, detect_c);
    std::string iq_input;
    detect->add_option("--input", iq_input, "cf32 or cu8 recording with a .meta.json sidecar");

    auto* analyze = app.add_subcommand("analyze", "match detections against ground truth");
    add_common(analyze, analyze_c);
    std::string events_path, truth_path, lux_path;
    double window = 5.0;
    analyze->add_option("--events", events_path, "events CSV");
    analyze->add_option("--truth", truth_path, "ground-truth CSV");
    analyze->add_option("--lux", lux_path, "lux trace CSV");
    analyze->add_option("--window", window, "match window (s)")->check(CLI::PositiveNumber);

    auto* sw = app.add_subcommand("sweep", "run a scenario template over parameter values");
    add_common(sw, sweep_c);
    std::string param;
    std::vector<double> values;
    sw->add_option("--param", param, "JSON pointer into the template, e.g. /channel/distance_m");
    sw->add_option("--values", values, "values to substitute")->delimiter(',');

    auto* rp = app.add_subcommand("repro", "reproduce a published table or figure");
    add_common(rp, repro_c);
    std::vector<std::string> ids;
    rp->add_option("ids", ids, "registry ids, or 'all'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*sim) return cmd_simulate(sim_c);
        if (*range) return cmd_range(range_c, photodiodes, range_step, range_max);
        if (*pw) return cmd_power(power_c, pa);
        if (*light) return cmd_light(light_c, lux_lo, lux_hi, lux_step, noiseless);
        if (*detect) return cmd_detect(detect_c, iq_input);
        if (*analyze) return cmd_analyze(analyze_c, events_path, truth_path, lux_path, window);
        if (*sw) return cmd_sweep(sweep_c, param, values);
        if (*rp) return cmd_repro(repro_c, ids);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kOk;
}
