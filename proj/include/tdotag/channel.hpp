#pragma once

#include <filesystem>
#include <map>
#include <string>

/// Link budget: log-distance path loss, floor table and band/power compliance.
namespace tdotag::channel {

/// 10 log10(p_signal / p_noise).
double snr_db(double p_signal_w, double p_noise_w);

struct PathLossModel {
    double snr0_db;
    double exponent;
    double threshold_db = 5.0;
    /// Reference distance; SNR(d0) = snr0.
    double d0_m = 1.0;

    void validate() const;
};

struct DistanceSnr {
    double distance_m;
    double snr_db;
};

/// Log-distance model through two (distance, SNR) anchors, referenced to d0.
PathLossModel fit_path_loss(DistanceSnr near, DistanceSnr far, double threshold_db = 5.0, double d0_m = 1.0);

double snr_at(const PathLossModel& model, double distance_m);

/// Distance where the SNR falls to the threshold.
double max_range(const PathLossModel& model);

struct FloorModel {
    std::map<int, double> per_floor_snr_db;
    double threshold_db = 5.0;

    void validate() const;
};

struct FloorReading {
    double snr_db;
    bool detectable;
};

FloorReading floor_snr(const FloorModel& model, int offset);

FloorModel load_floor_model(const std::filesystem::path& csv);
FloorModel default_floor_model();

struct CompliancePolicy {
    double band_lo_hz = 575e6;
    double band_hi_hz = 600e6;
    double max_eirp_w = 40e-3;

    void validate() const;
};

struct ComplianceVerdict {
    bool pass;
    bool band_ok;
    bool power_ok;
    std::string reason;
};

double dbm_to_w(double dbm);

ComplianceVerdict compliance_check(const CompliancePolicy& policy, double freq_hz, double tx_dbm);

/// Fit through the two range anchors listed for a photodiode count in a
/// `photodiodes,distance_m,snr_db` table.
PathLossModel load_range_model(const std::filesystem::path& csv, int photodiodes);
PathLossModel range_model(int photodiodes);

} // namespace tdotag::channel
