#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tdotag/interp.hpp"

/// Electrical model of the tunnel diode oscillator.
namespace tdotag::tdo {

struct IvPoint {
    double voltage_v;
    double current_a;
};

/// A tunnel diode described by its measured I-V breakpoints.
///
/// The curve must be strictly increasing in voltage and strictly decreasing
/// inside the negative differential resistance window [peak, valley].
class TunnelDiode {
public:
    TunnelDiode(std::vector<IvPoint> iv_curve, double peak_voltage_v, double valley_voltage_v,
                double negative_conductance_s, double junction_capacitance_f = 1e-12);

    /// Detects the NDR window as the first local maximum and the local minimum after it.
    static TunnelDiode from_curve(std::vector<IvPoint> iv_curve, double negative_conductance_s,
                                  double junction_capacitance_f = 1e-12);

    double peak_voltage() const { return peak_v_; }
    double valley_voltage() const { return valley_v_; }
    /// Magnitude of g_d in the NDR region.
    double negative_conductance() const { return gd_s_; }
    double junction_capacitance() const { return cj_f_; }
    std::span<const IvPoint> iv_curve() const { return curve_; }

    bool in_ndr(double v) const { return v >= peak_v_ && v <= valley_v_; }

private:
    std::vector<IvPoint> curve_;
    double peak_v_;
    double valley_v_;
    double gd_s_;
    double cj_f_;
};

/// Resistor bias network. The diode sits across R1; R2 runs from the supply,
/// so the diode sees a Thevenin source of supply*R1/(R1+R2) behind R1||R2.
struct BiasNetwork {
    double r1_ohm = 1000.0;
    double r2_ohm = 470.0;
    double supply_v = 0.25;
    /// R_T override; defaults to R1||R2 when unset.
    std::optional<double> rt_override_ohm;

    double equivalent_resistance() const;
    double thevenin_voltage() const;
    double thevenin_resistance() const;
};

struct ResonantTank {
    double inductance_h;
    double capacitance_f;

    ResonantTank(double inductance_h, double capacitance_f);
    static ResonantTank for_diode(double inductance_h, const TunnelDiode& diode);
};

struct DurabilityPoint {
    double thickness_mm;
    double cycles;
};

class DurabilityCurve {
public:
    explicit DurabilityCurve(std::vector<DurabilityPoint> points);
    std::span<const DurabilityPoint> points() const { return points_; }
    const PiecewiseLinear& curve() const { return curve_; }

private:
    std::vector<DurabilityPoint> points_;
    PiecewiseLinear curve_;
};

enum class BiasRegion { ndr, lowest_intersection };

struct BiasPoint {
    double voltage_v;
    double current_a;
    BiasRegion region;
    std::size_t intersections;
};

struct StabilityReport {
    /// (R_T/|g_d|) / (L/C); 1.0 means the impedance condition holds exactly.
    double ratio;
    /// R_T*|g_d|; oscillation needs this below 1.
    double rt_gd;
    bool oscillates;
};

double iv_current(const TunnelDiode& diode, double v);

/// All voltages where the network's load line meets a piecewise-linear I-V curve.
std::vector<double> load_line_intersections(const BiasNetwork& net, std::span<const IvPoint> curve);

/// Operating point of the diode. Prefers an intersection inside the NDR window,
/// otherwise returns the lowest-voltage one. Throws ModelError if none exists.
BiasPoint bias_point(const BiasNetwork& net, const TunnelDiode& diode);

StabilityReport stability_ratio(const BiasNetwork& net, const TunnelDiode& diode, const ResonantTank& tank);

/// f_o = (1/2pi) * sqrt((1 - R_T|g_d|) / (L C)). Throws NoOscillation when the radicand is <= 0.
double oscillation_frequency(const BiasNetwork& net, const TunnelDiode& diode, const ResonantTank& tank);

/// Input power drawn by the oscillator as a function of bias voltage.
class BiasPowerCurve {
public:
    explicit BiasPowerCurve(std::vector<Breakpoint> points);
    double operator()(double bias_v) const { return curve_(bias_v); }
    const PiecewiseLinear& curve() const { return curve_; }

private:
    PiecewiseLinear curve_;
};

double tdo_input_power(const BiasPowerCurve& curve, double bias_voltage_v);

double cycles_to_failure(const DurabilityCurve& curve, double thickness_mm);

std::vector<IvPoint> load_iv_curve(const std::filesystem::path& csv);
BiasPowerCurve load_bias_power(const std::filesystem::path& csv);
DurabilityCurve load_durability(const std::filesystem::path& csv);

/// The shipped fixture diode: |g_d| = 0.01 S, C = 1 pF.
TunnelDiode default_diode();

} // namespace tdotag::tdo
