#include "tdotag/tdo.hpp"

#include <cmath>
#include <numbers>

#include "tdotag/csv.hpp"
#include "tdotag/errors.hpp"
#include "tdotag/fixtures.hpp"

namespace tdotag::tdo {

namespace {

std::vector<Breakpoint> to_breakpoints(std::span<const IvPoint> iv) {
    std::vector<Breakpoint> out;
    out.reserve(iv.size());
    for (const auto& p : iv) out.push_back({p.voltage_v, p.current_a});
    return out;
}

} // namespace

TunnelDiode::TunnelDiode(std::vector<IvPoint> iv_curve, double peak_voltage_v, double valley_voltage_v,
                         double negative_conductance_s, double junction_capacitance_f)
    : curve_(std::move(iv_curve)),
      peak_v_(peak_voltage_v),
      valley_v_(valley_voltage_v),
      gd_s_(std::abs(negative_conductance_s)),
      cj_f_(junction_capacitance_f) {
    if (!(peak_v_ < valley_v_)) throw InputError("tunnel diode: peak voltage must be below valley voltage");
    if (!(gd_s_ > 0)) throw InputError("tunnel diode: |g_d| must be positive");
    if (!(cj_f_ > 0)) throw InputError("tunnel diode: junction capacitance must be positive");
    PiecewiseLinear check(to_breakpoints(curve_), "diode I-V");
    if (peak_v_ < check.lo() || valley_v_ > check.hi())
        throw InputError("tunnel diode: NDR window outside the I-V curve domain");

    // Slope must be negative on every segment that overlaps (peak, valley).
    for (std::size_t i = 1; i < curve_.size(); ++i) {
        const auto& a = curve_[i - 1];
        const auto& b = curve_[i];
        if (b.voltage_v <= peak_v_ || a.voltage_v >= valley_v_) continue;
        if (!(b.current_a < a.current_a))
            throw InputError("tunnel diode: I-V slope is not negative inside the NDR window");
    }
}

TunnelDiode TunnelDiode::from_curve(std::vector<IvPoint> iv_curve, double negative_conductance_s,
                                    double junction_capacitance_f) {
    std::optional<std::size_t> peak;
    for (std::size_t i = 1; i + 1 < iv_curve.size(); ++i) {
        if (!peak && iv_curve[i].current_a > iv_curve[i - 1].current_a &&
            iv_curve[i].current_a > iv_curve[i + 1].current_a)
            peak = i;
        else if (peak && iv_curve[i].current_a < iv_curve[i - 1].current_a &&
                 iv_curve[i].current_a < iv_curve[i + 1].current_a) {
            const double vp = iv_curve[*peak].voltage_v;
            const double vv = iv_curve[i].voltage_v;
            return TunnelDiode(std::move(iv_curve), vp, vv, negative_conductance_s, junction_capacitance_f);
        }
    }
    throw InputError("tunnel diode: I-V curve has no peak/valley pair");
}

double BiasNetwork::equivalent_resistance() const {
    if (rt_override_ohm) return *rt_override_ohm;
    return r1_ohm * r2_ohm / (r1_ohm + r2_ohm);
}

double BiasNetwork::thevenin_voltage() const { return supply_v * r1_ohm / (r1_ohm + r2_ohm); }

double BiasNetwork::thevenin_resistance() const { return r1_ohm * r2_ohm / (r1_ohm + r2_ohm); }

ResonantTank::ResonantTank(double l, double c) : inductance_h(l), capacitance_f(c) {
    if (!(l > 0)) throw InputError("resonant tank: inductance must be positive");
    if (!(c > 0)) throw InputError("resonant tank: capacitance must be positive");
}

ResonantTank ResonantTank::for_diode(double l, const TunnelDiode& diode) {
    return ResonantTank(l, diode.junction_capacitance());
}

DurabilityCurve::DurabilityCurve(std::vector<DurabilityPoint> points) : points_(std::move(points)) {
    std::vector<Breakpoint> bp;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (i > 0 && points_[i].cycles < points_[i - 1].cycles)
            throw InputError("durability curve: cycles must be non-decreasing");
        bp.push_back({points_[i].thickness_mm, points_[i].cycles});
    }
    curve_ = PiecewiseLinear(std::move(bp), "durability curve");
}

double iv_current(const TunnelDiode& diode, double v) {
    // Rebuilt per call; curves are a couple of dozen points.
    return PiecewiseLinear(to_breakpoints(diode.iv_curve()), "diode I-V")(v);
}

std::vector<double> load_line_intersections(const BiasNetwork& net, std::span<const IvPoint> curve) {
    if (!(net.r1_ohm > 0 && net.r2_ohm > 0)) throw InputError("bias network: resistors must be positive");
    const double vth = net.thevenin_voltage();
    const double gth = 1.0 / net.thevenin_resistance();
    std::vector<double> out;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const auto& a = curve[i - 1];
        const auto& b = curve[i];
        const double slope = (b.current_a - a.current_a) / (b.voltage_v - a.voltage_v);
        // (vth - v) * gth = a.i + slope * (v - a.v)
        const double denom = gth + slope;
        if (denom == 0.0) continue;
        const double v = (vth * gth - a.current_a + slope * a.voltage_v) / denom;
        if (v < a.voltage_v || v > b.voltage_v) continue;
        if (!out.empty() && std::abs(out.back() - v) <= 1e-15) continue;
        out.push_back(v);
    }
    return out;
}

BiasPoint bias_point(const BiasNetwork& net, const TunnelDiode& diode) {
    if (net.supply_v < 0) throw DomainError("bias network: supply voltage must be non-negative");
    const auto hits = load_line_intersections(net, diode.iv_curve());
    if (hits.empty()) throw ModelError("bias network: load line does not meet the I-V curve");
    for (double v : hits)
        if (diode.in_ndr(v)) return {v, iv_current(diode, v), BiasRegion::ndr, hits.size()};
    return {hits.front(), iv_current(diode, hits.front()), BiasRegion::lowest_intersection, hits.size()};
}

StabilityReport stability_ratio(const BiasNetwork& net, const TunnelDiode& diode, const ResonantTank& tank) {
    const double rt = net.equivalent_resistance();
    const double gd = diode.negative_conductance();
    const double ratio = (rt / gd) / (tank.inductance_h / tank.capacitance_f);
    const double product = rt * gd;
    return {ratio, product, product < 1.0};
}

double oscillation_frequency(const BiasNetwork& net, const TunnelDiode& diode, const ResonantTank& tank) {
    const double radicand = 1.0 - net.equivalent_resistance() * diode.negative_conductance();
    if (!(radicand > 0)) throw NoOscillation(radicand);
    return std::sqrt(radicand / (tank.inductance_h * tank.capacitance_f)) / (2.0 * std::numbers::pi);
}

BiasPowerCurve::BiasPowerCurve(std::vector<Breakpoint> points) : curve_(points, "bias power curve") {
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].y < points[i - 1].y) throw InputError("bias power curve: must be non-decreasing");
}

double tdo_input_power(const BiasPowerCurve& curve, double bias_voltage_v) { return curve(bias_voltage_v); }

double cycles_to_failure(const DurabilityCurve& curve, double thickness_mm) { return curve.curve()(thickness_mm); }

std::vector<IvPoint> load_iv_curve(const std::filesystem::path& csv) {
    const auto t = CsvTable::read(csv);
    t.require({"voltage_v", "current_a"});
    std::vector<IvPoint> out;
    for (std::size_t r = 0; r < t.rows(); ++r) out.push_back({t.number(r, "voltage_v"), t.number(r, "current_a")});
    return out;
}

BiasPowerCurve load_bias_power(const std::filesystem::path& csv) {
    const auto t = CsvTable::read(csv);
    t.require({"voltage_v", "power_w"});
    std::vector<Breakpoint> out;
    for (std::size_t r = 0; r < t.rows(); ++r) out.push_back({t.number(r, "voltage_v"), t.number(r, "power_w")});
    return BiasPowerCurve(std::move(out));
}

DurabilityCurve load_durability(const std::filesystem::path& csv) {
    const auto t = CsvTable::read(csv);
    t.require({"thickness_mm", "cycles"});
    std::vector<DurabilityPoint> out;
    for (std::size_t r = 0; r < t.rows(); ++r) out.push_back({t.number(r, "thickness_mm"), t.number(r, "cycles")});
    return DurabilityCurve(std::move(out));
}

TunnelDiode default_diode() {
    return TunnelDiode::from_curve(load_iv_curve(fixture_path("diode_iv.csv")), 0.01, 1e-12);
}

} // namespace tdotag::tdo
