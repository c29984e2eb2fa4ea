#pragma once

#include <filesystem>
#include <string>
#include <vector>

/// Photodiode harvesting and supercapacitor energy bookkeeping.
namespace tdotag::harvest {

struct GridPoint {
    double count;
    double lux;
    double power_w;
};

/// Rectangular (count x lux) table of harvested power.
class PowerGrid {
public:
    PowerGrid() = default;
    explicit PowerGrid(std::vector<GridPoint> points);

    bool empty() const { return power_.empty(); }

    const std::vector<double>& counts() const { return counts_; }
    const std::vector<double>& lux() const { return lux_; }
    double at(std::size_t ci, std::size_t li) const { return power_[ci * lux_.size() + li]; }

private:
    std::vector<double> counts_;
    std::vector<double> lux_;
    std::vector<double> power_;
};

struct PhotodiodeArray {
    int count = 25;
    int series = 3;
    int parallel = 2;
    PowerGrid grid;
};

/// Bilinear over the grid. Below the lowest lux the power tapers linearly to 0 at 0 lux,
/// above the highest lux it is clamped. Counts outside the grid scale proportionally
/// from the nearest grid count.
double harvest_power(const PhotodiodeArray& array, double lux);

struct Supercapacitor {
    double capacitance_f;
    double voltage_v = 0.0;
    std::string label;

    Supercapacitor(double capacitance_f, double voltage_v = 0.0, std::string label = {});
    double energy_j() const { return 0.5 * capacitance_f * voltage_v * voltage_v; }
};

/// Constant-power update of stored energy, floored at zero.
Supercapacitor charge_step(const Supercapacitor& cap, double source_w, double load_w, double dt_s);

/// Time for a constant source to lift the cap to target_v. Throws ModelError if source is 0.
double time_to_voltage(const Supercapacitor& cap, double source_w, double target_v);

struct Feasibility {
    bool sustainable;
    double deficit_w;
};

Feasibility feasibility(const PhotodiodeArray& array, double lux, double demand_w);

/// Average charging power implied by the bias cap (0.47 F) reaching 0.25 V in 206 s.
inline constexpr double kBiasCapChargePowerW = 0.5 * 0.47 * 0.25 * 0.25 / 206.0;

PowerGrid load_power_grid(const std::filesystem::path& csv);

/// Array backed by the shipped grid fixture.
PhotodiodeArray default_array(int count = 25);

} // namespace tdotag::harvest
