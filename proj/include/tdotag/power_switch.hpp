#pragma once

#include <optional>
#include <string>
#include <vector>

/// 555-timer intermittent power switching and the light-dependent frequency drift.
namespace tdotag::power {

struct TimerConfig {
    double r3_ohm;
    double r4_ohm;
    double ct_f;
    bool bypass_diode = false;
    double min_supply_v = 0.6;

    void validate() const;
};

struct SwitchingProfile {
    double clock_hz;
    double duty;
    double switch_overhead_w = 7e-6;
};

struct LightResponseModel {
    double anchor_lux = 1000.0;
    double anchor_freq_hz = 580.054e6;
    /// -0.06 MHz per 100 lux.
    double slope_hz_per_lux = -600.0;
    double shutdown_lux = 500.0;
    /// Scatter that gives R^2 = 0.98 on a 51-point 500..1000 lux sweep.
    double noise_sd_hz = 12617.0;

    void validate() const;
};

/// 0.455 / ((R3 + 2 R4) C_T), with or without the bypass diode.
double clock_frequency(const TimerConfig& cfg);

/// R3/(R3 + 2 R4) without the bypass diode, R3/(R3 + R4) with it.
double duty_cycle(const TimerConfig& cfg);

double average_power(double duty, double tdo_power_w, bool has_switch, const SwitchingProfile& profile);

/// Emitted frequency, or nullopt below the shutdown level.
std::optional<double> frequency_under_light(const LightResponseModel& model, double lux);

inline constexpr double kMinResistorOhm = 1.0;
inline constexpr double kMaxResistorOhm = 1e9;

/// Inverse of clock_frequency/duty_cycle. Throws DomainError naming the violated bound.
TimerConfig design_timer(double target_duty, double target_clock_hz, double ct_f, bool bypass_diode = false);

/// Warnings when stated clock/duty disagree with the component values by more than rel_tol.
std::vector<std::string> consistency_warnings(const TimerConfig& cfg, std::optional<double> stated_clock_hz,
                                              std::optional<double> stated_duty, double rel_tol = 0.01);

} // namespace tdotag::power
