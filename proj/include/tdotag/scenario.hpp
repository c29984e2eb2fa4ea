#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdotag/analytics.hpp"
#include "tdotag/channel.hpp"
#include "tdotag/dsp.hpp"
#include "tdotag/harvest.hpp"
#include "tdotag/power_switch.hpp"
#include "tdotag/transducers.hpp"

/// Discrete-time composition of tags, environment, channel and receiver.
namespace tdotag::scenario {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::uint64_t kDefaultSeed = 20250401;

enum class TagMode { continuous, interaction };
enum class RxMode { spectral, iq };

RxMode parse_rx_mode(const std::string& name);

struct CapConfig {
    double capacitance_f;
    double initial_v;
    /// Regulation ceiling; harvested energy above it is discarded.
    double max_v;
    /// The oscillator does not run below this supply.
    double min_v;
};

struct TimerSetup {
    power::TimerConfig timer;
    std::optional<double> stated_clock_hz;
    std::optional<double> stated_duty;
    int switch_photodiodes = 6;
    /// Duty used for the energy budget; stated_duty when given, else the R3/R4 value.
    double effective_duty() const;
};

struct TagConfig {
    std::string id;
    TagMode mode = TagMode::continuous;
    dsp::Band band;
    std::optional<double> base_freq_hz;
    std::optional<transducers::Transducer> transducer;
    double transducer_stimulus = 0.0;
    std::optional<power::LightResponseModel> light;
    harvest::PhotodiodeArray array;
    double tdo_power_w = 50e-6;
    CapConfig supply;
    std::optional<TimerSetup> timer;
    double switch_overhead_w = 7e-6;
    transducers::TriggerSwitch trigger;
    bool scripted_failures = false;
    transducers::ActivationProfile activation{0.5, 2.0};
    double link_snr_db = 30.0;
    /// Set for tags whose activation profile feeds the energy report.
    bool report_energy = true;
};

struct ScriptEntry {
    std::string tag_id;
    double t_s;
    /// Trigger stimulus (mm for reed, degrees for tilt ball).
    double stimulus;
    std::optional<double> freq_hz;
    std::optional<double> transducer_stimulus;
    bool fail = false;
};

struct LuxProfile {
    enum class Kind { constant, steps, diurnal, csv } kind = Kind::constant;
    double lux = 1000.0;
    /// steps and csv: (time, lux) held until the next point.
    std::vector<analytics::LuxSample> points;
    double min_lux = 30.0;
    double max_lux = 350.0;
    double period_s = 86400.0;
    double phase_s = 0.0;

    /// Piecewise constant over whole seconds.
    double at(double t_s) const;
};

struct ReceiverSetup {
    dsp::ReceiverConfig rx;
    double noise_floor_db = -100.0;
};

struct Scenario {
    std::string name;
    std::uint64_t seed = kDefaultSeed;
    double duration_s = 10.0;
    double time_step_s = 0.01;
    double start_unix_s = 0.0;
    double trace_interval_s = 1.0;
    RxMode mode = RxMode::spectral;
    std::vector<TagConfig> tags;
    std::vector<ScriptEntry> script;
    LuxProfile lux;
    ReceiverSetup receiver;
    double match_window_s = 5.0;

    void validate() const;
    std::size_t tag_index(const std::string& id) const;
    std::int64_t steps() const;
    std::int64_t steps_per_second() const;
};

Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json load_scenario_json(const std::filesystem::path& path);

/// Seeds shared with the fixture generator so scripted replays can be planned ahead.
std::uint64_t trigger_seed(std::uint64_t seed, std::size_t entry);
std::uint64_t delay_seed(std::uint64_t seed, std::size_t entry);
std::uint64_t freq_seed(std::uint64_t seed, std::size_t entry);

struct TagEmission {
    bool active = false;
    double freq_hz = 0.0;
};

struct TraceRow {
    double t_s;
    double lux;
    std::size_t tag;
    bool active;
    double freq_hz;
    double supply_v;
    double switch_v;
    double harvest_w;
};

struct Emission {
    std::string tag_id;
    /// Script entry that caused it, if any.
    std::optional<std::size_t> entry;
    double freq_hz;
    double snr_db;
    double start_s;
    double end_s;
};

/// Planned outcome of one script entry.
struct Activation {
    std::size_t entry;
    std::size_t tag;
    bool fired;
    double on_start_s;
    double on_end_s;
    double freq_hz;
};

/// Step-by-step engine. Time is k * time_step on an integer grid.
class Simulator {
public:
    explicit Simulator(const Scenario& sc);

    std::int64_t step_index() const { return k_; }
    double time_s() const;

    /// Advances one time step and returns the emission state during it.
    std::vector<TagEmission> step();
    /// Integrates the capacitors up to step `target` in one-second chunks with every tag idle.
    /// Only valid when no tag can emit before target; throws ModelError otherwise.
    void advance_idle(std::int64_t target);
    /// Closes open emission segments.
    void finish();

    const std::vector<Emission>& emissions() const { return emissions_; }
    const std::vector<TraceRow>& trace() const { return trace_; }
    const std::vector<Activation>& activations() const { return activations_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    const analytics::GroundTruthLog& truth() const { return truth_; }
    double supply_voltage(std::size_t tag) const { return rt_.at(tag).supply.voltage_v; }
    /// True when every tag is interaction-activated, so silent spans can be skipped.
    bool compressible() const;
    /// Step ranges [from, to) that must be stepped; everything else is idle.
    std::vector<std::pair<std::int64_t, std::int64_t>> busy_windows() const;

private:
    struct TagRuntime {
        harvest::Supercapacitor supply{1.0};
        std::optional<harvest::Supercapacitor> switch_cap;
        harvest::PhotodiodeArray switch_array;
        std::optional<std::size_t> open_segment;
        double segment_nominal = 0.0;
        std::size_t segments = 0;
        double last_harvest = 0.0;
    };

    double nominal_freq(const TagConfig& tag, double lux) const;
    void record_trace(double t, double lux, const std::vector<TagEmission>& em);

    Scenario sc_;
    std::int64_t k_ = 0;
    std::int64_t sps_;
    std::vector<TagRuntime> rt_;
    std::vector<Activation> activations_;
    std::vector<std::vector<std::size_t>> tag_activations_;
    std::vector<Emission> emissions_;
    std::vector<TraceRow> trace_;
    std::vector<std::string> warnings_;
    analytics::GroundTruthLog truth_;
    std::int64_t trace_every_;
};

struct RunOptions {
    std::optional<RxMode> mode;
    /// Skip silent spans when the scenario allows it.
    bool compress = true;
};

struct RunResult {
    std::vector<TraceRow> trace;
    std::vector<Emission> emissions;
    std::vector<dsp::TagEvent> events;
    analytics::GroundTruthLog truth;
    analytics::DetectionReport report;
    /// Detection time minus emission start, one per matched event.
    std::vector<double> latencies_s;
    std::vector<std::string> warnings;
    std::size_t frames_processed = 0;
    bool compressed = false;
};

/// Tones as the receiver sees them.
std::vector<dsp::Tone> emissions_to_tones(const Scenario& sc, const std::vector<Emission>& em);

RunResult run(const Scenario& sc, const RunOptions& opt = {});

struct SweepRow {
    double value;
    std::size_t emissions;
    std::size_t events;
    std::size_t misses;
    std::size_t false_positives;
    double failure_rate_pct;
    double mean_link_snr_db;
    double mean_event_snr_db;
};

/// One run per value with the JSON pointer set to it, runs spread over threads.
std::vector<SweepRow> sweep(const nlohmann::json& tmpl, const std::string& pointer, const std::vector<double>& values,
                            const std::filesystem::path& base_dir = {}, const RunOptions& opt = {});
std::vector<SweepRow> sweep_serial(const nlohmann::json& tmpl, const std::string& pointer,
                                   const std::vector<double>& values, const std::filesystem::path& base_dir = {},
                                   const RunOptions& opt = {});

/// Light response sweep: noisy emitted frequency at each lux level.
std::vector<double> light_sweep(const power::LightResponseModel& model, const std::vector<double>& lux,
                                std::uint64_t seed);

} // namespace tdotag::scenario
