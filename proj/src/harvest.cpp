#include "tdotag/harvest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tdotag/csv.hpp"
#include "tdotag/errors.hpp"
#include "tdotag/fixtures.hpp"

namespace tdotag::harvest {

PowerGrid::PowerGrid(std::vector<GridPoint> points) {
    std::set<double> cs, ls;
    for (const auto& p : points) {
        cs.insert(p.count);
        ls.insert(p.lux);
    }
    counts_.assign(cs.begin(), cs.end());
    lux_.assign(ls.begin(), ls.end());
    if (counts_.size() < 2 || lux_.size() < 2) throw InputError("power grid: need at least 2 counts and 2 lux levels");
    if (points.size() != counts_.size() * lux_.size()) throw InputError("power grid: table is not rectangular");
    if (counts_.front() <= 0 || lux_.front() <= 0) throw InputError("power grid: counts and lux must be positive");

    power_.assign(points.size(), -1.0);
    for (const auto& p : points) {
        const auto ci = std::lower_bound(counts_.begin(), counts_.end(), p.count) - counts_.begin();
        const auto li = std::lower_bound(lux_.begin(), lux_.end(), p.lux) - lux_.begin();
        auto& slot = power_[ci * lux_.size() + li];
        if (slot >= 0) throw InputError("power grid: duplicate cell");
        if (p.power_w < 0) throw InputError("power grid: negative power");
        slot = p.power_w;
    }
    for (std::size_t c = 0; c < counts_.size(); ++c)
        for (std::size_t l = 0; l < lux_.size(); ++l) {
            if (c > 0 && at(c, l) < at(c - 1, l)) throw InputError("power grid: not non-decreasing in count");
            if (l > 0 && at(c, l) < at(c, l - 1)) throw InputError("power grid: not non-decreasing in lux");
        }
}

namespace {

// Power along the lux axis for one grid row.
double row_power(const PowerGrid& g, std::size_t ci, double lux) {
    const auto& ls = g.lux();
    if (lux <= 0) return 0.0;
    if (lux < ls.front()) return g.at(ci, 0) * lux / ls.front();
    if (lux >= ls.back()) return g.at(ci, ls.size() - 1);
    const auto hi = static_cast<std::size_t>(std::upper_bound(ls.begin(), ls.end(), lux) - ls.begin());
    const std::size_t lo = hi - 1;
    const double t = (lux - ls[lo]) / (ls[hi] - ls[lo]);
    return g.at(ci, lo) + t * (g.at(ci, hi) - g.at(ci, lo));
}

} // namespace

double harvest_power(const PhotodiodeArray& array, double lux) {
    if (array.count <= 0) throw InputError("photodiode array: count must be positive");
    if (lux < 0) throw DomainError("harvest_power: lux must be non-negative");
    const auto& g = array.grid;
    if (g.empty()) throw InputError("photodiode array: empty power grid");
    const auto& cs = g.counts();
    const double n = array.count;
    if (n <= cs.front()) return row_power(g, 0, lux) * n / cs.front();
    if (n >= cs.back()) return row_power(g, cs.size() - 1, lux) * n / cs.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(cs.begin(), cs.end(), n) - cs.begin());
    const std::size_t lo = hi - 1;
    const double t = (n - cs[lo]) / (cs[hi] - cs[lo]);
    const double a = row_power(g, lo, lux);
    const double b = row_power(g, hi, lux);
    return a + t * (b - a);
}

Supercapacitor::Supercapacitor(double c, double v, std::string l)
    : capacitance_f(c), voltage_v(v), label(std::move(l)) {
    if (!(c > 0)) throw InputError("supercapacitor: capacitance must be positive");
    if (!(v >= 0)) throw InputError("supercapacitor: voltage must be non-negative");
}

Supercapacitor charge_step(const Supercapacitor& cap, double source_w, double load_w, double dt_s) {
    if (!(dt_s > 0)) throw DomainError("charge_step: dt must be positive");
    if (source_w < 0 || load_w < 0) throw DomainError("charge_step: powers must be non-negative");
    const double e = std::max(0.0, cap.energy_j() + (source_w - load_w) * dt_s);
    Supercapacitor out = cap;
    out.voltage_v = std::sqrt(2.0 * e / cap.capacitance_f);
    return out;
}

double time_to_voltage(const Supercapacitor& cap, double source_w, double target_v) {
    if (target_v < cap.voltage_v) throw DomainError("time_to_voltage: target below current voltage");
    if (target_v == cap.voltage_v) return 0.0;
    if (!(source_w > 0)) throw ModelError("time_to_voltage: target unreachable with zero source power");
    return 0.5 * cap.capacitance_f * (target_v * target_v - cap.voltage_v * cap.voltage_v) / source_w;
}

Feasibility feasibility(const PhotodiodeArray& array, double lux, double demand_w) {
    const double p = harvest_power(array, lux);
    if (p >= demand_w) return {true, 0.0};
    return {false, demand_w - p};
}

PowerGrid load_power_grid(const std::filesystem::path& csv) {
    const auto t = CsvTable::read(csv);
    t.require({"count", "lux", "power_w"});
    std::vector<GridPoint> pts;
    for (std::size_t r = 0; r < t.rows(); ++r)
        pts.push_back({t.number(r, "count"), t.number(r, "lux"), t.number(r, "power_w")});
    return PowerGrid(std::move(pts));
}

PhotodiodeArray default_array(int count) {
    return PhotodiodeArray{count, 3, 2, load_power_grid(fixture_path("pd_power_grid.csv"))};
}

} // namespace tdotag::harvest
