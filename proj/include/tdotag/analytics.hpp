#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdotag/dsp.hpp"
#include "tdotag/harvest.hpp"
#include "tdotag/transducers.hpp"

/// Deployment replay statistics.
namespace tdotag::analytics {

struct TruthEntry {
    std::string tag_id;
    double timestamp_s;
    std::string stimulus;
};

struct LuxSample {
    double timestamp_s;
    double lux;
};

struct GroundTruthLog {
    std::vector<TruthEntry> entries;
    std::vector<LuxSample> lux_trace;

    void validate() const;
};

struct TagDetection {
    std::size_t events_true = 0;
    std::size_t events_detected = 0;
    std::size_t misses = 0;
    std::size_t false_positives = 0;
    /// Means over matched events: detection start minus interaction time, and event duration.
    double mean_activation_s = 0.0;
    double mean_on_time_s = 0.0;
};

struct MatchPair {
    std::size_t truth_index;
    std::size_t detection_index;
    double dt_s;
};

struct DetectionReport {
    std::map<std::string, TagDetection> per_tag;
    std::size_t total_true = 0;
    std::size_t total_detected = 0;
    std::size_t total_misses = 0;
    std::size_t false_positives = 0;
    /// total misses / total true * 100; 0 with rate_defined = false when there is no truth.
    double failure_rate_pct = 0.0;
    bool rate_defined = false;
    std::vector<MatchPair> matches;
};

/// Greedy one-to-one matching on tag_id, closest |detection start - truth time| first,
/// pairs further apart than window_s are never made.
DetectionReport match_events(const std::vector<dsp::TagEvent>& detected, const GroundTruthLog& truth,
                             double window_s = 5.0);

struct FrequencyStats {
    std::size_t n;
    double mean;
    /// Sample SD (n - 1); 0 for a single value.
    double sd;
    double min;
    double max;
    double bandwidth;
    double cv_pct;
};

FrequencyStats frequency_stats(std::span<const double> series);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

struct Regression {
    double slope;
    double intercept;
    double r_squared;
};

Regression regression_fit(std::span<const double> x, std::span<const double> y);

/// tdo_power * on_time / (C V^2 / 2) * 100.
double energy_percent(double on_time_s, double tdo_power_w, const harvest::Supercapacitor& cap);

struct EnergyRow {
    std::string tag_id;
    double on_time_s;
    double percent;
};

/// One row per tag in the report that has a profile.
std::vector<EnergyRow> energy_report(const DetectionReport& report,
                                     const std::map<std::string, transducers::ActivationProfile>& profiles,
                                     const harvest::Supercapacitor& cap, double tdo_power_w);

nlohmann::json to_json(const DetectionReport& report);
nlohmann::json to_json(const FrequencyStats& stats);
std::string format_table(const DetectionReport& report);

GroundTruthLog load_ground_truth(const std::filesystem::path& truth_csv, const std::filesystem::path& lux_csv = {});

} // namespace tdotag::analytics
