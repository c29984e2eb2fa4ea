#include "tdotag/power_switch.hpp"

#include <cmath>
#include <sstream>

#include "tdotag/errors.hpp"

namespace tdotag::power {

void TimerConfig::validate() const {
    if (!(r3_ohm > 0 && r4_ohm > 0 && ct_f > 0)) throw InputError("timer: R3, R4 and C_T must be positive");
}

void LightResponseModel::validate() const {
    if (!(slope_hz_per_lux < 0)) throw InputError("light response: slope must be negative");
    if (!(shutdown_lux < anchor_lux)) throw InputError("light response: shutdown lux must be below anchor lux");
    if (noise_sd_hz < 0) throw InputError("light response: noise SD must be non-negative");
}

double clock_frequency(const TimerConfig& cfg) {
    cfg.validate();
    return 0.455 / ((cfg.r3_ohm + 2.0 * cfg.r4_ohm) * cfg.ct_f);
}

double duty_cycle(const TimerConfig& cfg) {
    cfg.validate();
    if (cfg.bypass_diode) return cfg.r3_ohm / (cfg.r3_ohm + cfg.r4_ohm);
    return cfg.r3_ohm / (cfg.r3_ohm + 2.0 * cfg.r4_ohm);
}

double average_power(double duty, double tdo_power_w, bool has_switch, const SwitchingProfile& profile) {
    if (!(duty >= 0 && duty <= 1)) throw DomainError("average_power: duty must lie in [0, 1]");
    return duty * tdo_power_w + (has_switch ? profile.switch_overhead_w : 0.0);
}

std::optional<double> frequency_under_light(const LightResponseModel& model, double lux) {
    if (lux < 0) throw DomainError("frequency_under_light: lux must be non-negative");
    if (lux < model.shutdown_lux) return std::nullopt;
    return model.anchor_freq_hz + model.slope_hz_per_lux * (lux - model.anchor_lux);
}

namespace {

void check_resistor(const char* name, double r) {
    if (r < kMinResistorOhm || r > kMaxResistorOhm) {
        std::ostringstream os;
        os << "design_timer: " << name << " = " << r << " ohm outside [" << kMinResistorOhm << ", "
           << kMaxResistorOhm << "] ohm";
        throw DomainError(os.str());
    }
}

} // namespace

TimerConfig design_timer(double d, double f, double ct, bool bypass) {
    if (!(d > 0 && d < 1)) throw DomainError("design_timer: target duty must lie in (0, 1)");
    if (!(f > 0)) throw DomainError("design_timer: target clock must be positive");
    if (!(ct > 0)) throw DomainError("design_timer: C_T must be positive");
    const double sum = 0.455 / (f * ct); // R3 + 2 R4
    TimerConfig cfg{0, 0, ct, bypass};
    if (bypass) {
        cfg.r3_ohm = sum * d / (2.0 - d);
        cfg.r4_ohm = cfg.r3_ohm * (1.0 - d) / d;
    } else {
        cfg.r3_ohm = d * sum;
        cfg.r4_ohm = sum * (1.0 - d) / 2.0;
    }
    check_resistor("R3", cfg.r3_ohm);
    check_resistor("R4", cfg.r4_ohm);
    return cfg;
}

std::vector<std::string> consistency_warnings(const TimerConfig& cfg, std::optional<double> stated_clock_hz,
                                              std::optional<double> stated_duty, double rel_tol) {
    std::vector<std::string> out;
    auto check = [&](const char* what, double computed, std::optional<double> stated) {
        if (!stated) return;
        if (std::abs(computed - *stated) <= rel_tol * std::abs(*stated)) return;
        std::ostringstream os;
        os << what << " from R3/R4/C_T is " << computed << " but the scenario states " << *stated;
        out.push_back(os.str());
    };
    check("clock_hz", clock_frequency(cfg), stated_clock_hz);
    check("duty", duty_cycle(cfg), stated_duty);
    return out;
}

} // namespace tdotag::power
