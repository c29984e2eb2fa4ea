#include "tdotag/channel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tdotag/csv.hpp"
#include "tdotag/errors.hpp"
#include "tdotag/fixtures.hpp"

namespace tdotag::channel {

double snr_db(double p_signal_w, double p_noise_w) {
    if (!(p_signal_w > 0 && p_noise_w > 0)) throw DomainError("snr_db: powers must be positive");
    return 10.0 * std::log10(p_signal_w / p_noise_w);
}

void PathLossModel::validate() const {
    if (!(exponent > 0)) throw InputError("path loss: exponent must be positive");
    if (!(threshold_db > 0)) throw InputError("path loss: threshold must be positive");
    if (!(d0_m > 0)) throw InputError("path loss: reference distance must be positive");
}

PathLossModel fit_path_loss(DistanceSnr near, DistanceSnr far, double threshold_db, double d0_m) {
    if (!(near.distance_m > 0 && far.distance_m > 0)) throw DomainError("fit_path_loss: distances must be positive");
    if (near.distance_m == far.distance_m) throw DomainError("fit_path_loss: anchor distances must differ");
    const double ln = std::log10(near.distance_m / d0_m);
    const double lf = std::log10(far.distance_m / d0_m);
    const double n = (near.snr_db - far.snr_db) / (10.0 * (lf - ln));
    PathLossModel m{near.snr_db + 10.0 * n * ln, n, threshold_db, d0_m};
    m.validate();
    return m;
}

double snr_at(const PathLossModel& m, double d) {
    m.validate();
    if (!(d >= m.d0_m)) throw DomainError("snr_at: distance below the reference distance");
    return m.snr0_db - 10.0 * m.exponent * std::log10(d / m.d0_m);
}

double max_range(const PathLossModel& m) {
    m.validate();
    if (m.snr0_db < m.threshold_db) throw ModelError("max_range: reference SNR already below threshold");
    return m.d0_m * std::pow(10.0, (m.snr0_db - m.threshold_db) / (10.0 * m.exponent));
}

void FloorModel::validate() const {
    if (per_floor_snr_db.empty()) throw InputError("floor model: empty table");
    const auto same = per_floor_snr_db.find(0);
    if (same == per_floor_snr_db.end()) throw InputError("floor model: missing offset 0");
    for (const auto& [k, v] : per_floor_snr_db)
        if (v > same->second) throw InputError("floor model: offset 0 must have the highest SNR");
}

FloorReading floor_snr(const FloorModel& m, int offset) {
    const auto it = m.per_floor_snr_db.find(offset);
    if (it == m.per_floor_snr_db.end()) throw DomainError("floor_snr: offset " + std::to_string(offset) + " not in table");
    return {it->second, it->second > m.threshold_db};
}

FloorModel load_floor_model(const std::filesystem::path& csv) {
    const auto t = CsvTable::read(csv);
    t.require({"floor_offset", "snr_db"});
    FloorModel m;
    for (std::size_t r = 0; r < t.rows(); ++r)
        m.per_floor_snr_db[static_cast<int>(t.number(r, "floor_offset"))] = t.number(r, "snr_db");
    m.validate();
    return m;
}

FloorModel default_floor_model() { return load_floor_model(fixture_path("floor_snr.csv")); }

void CompliancePolicy::validate() const {
    if (!(band_lo_hz < band_hi_hz)) throw InputError("compliance: band lower edge must be below upper edge");
}

double dbm_to_w(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

ComplianceVerdict compliance_check(const CompliancePolicy& p, double freq_hz, double tx_dbm) {
    p.validate();
    ComplianceVerdict v{};
    v.band_ok = freq_hz >= p.band_lo_hz && freq_hz <= p.band_hi_hz;
    v.power_ok = dbm_to_w(tx_dbm) <= p.max_eirp_w;
    v.pass = v.band_ok && v.power_ok;
    if (!v.band_ok) v.reason = "band violation";
    if (!v.power_ok) v.reason += v.reason.empty() ? "power violation" : ", power violation";
    return v;
}

PathLossModel load_range_model(const std::filesystem::path& csv, int photodiodes) {
    const auto t = CsvTable::read(csv);
    t.require({"photodiodes", "distance_m", "snr_db"});
    std::vector<DistanceSnr> pts;
    for (std::size_t r = 0; r < t.rows(); ++r)
        if (static_cast<int>(t.number(r, "photodiodes")) == photodiodes)
            pts.push_back({t.number(r, "distance_m"), t.number(r, "snr_db")});
    if (pts.size() != 2)
        throw InputError(csv.string() + ": need exactly two anchors for " + std::to_string(photodiodes) + " photodiodes");
    std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.distance_m < b.distance_m; });
    return fit_path_loss(pts[0], pts[1]);
}

PathLossModel range_model(int photodiodes) { return load_range_model(fixture_path("range_anchors.csv"), photodiodes); }

} // namespace tdotag::channel
