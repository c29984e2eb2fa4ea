#include "tdotag/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "tdotag/csv.hpp"
#include "tdotag/errors.hpp"

namespace tdotag::analytics {

void GroundTruthLog::validate() const {
    for (std::size_t i = 1; i < entries.size(); ++i)
        if (entries[i].timestamp_s < entries[i - 1].timestamp_s)
            throw InputError("ground truth: timestamps must be non-decreasing");
    for (std::size_t i = 1; i < lux_trace.size(); ++i)
        if (lux_trace[i].timestamp_s < lux_trace[i - 1].timestamp_s)
            throw InputError("lux trace: timestamps must be non-decreasing");
    for (const auto& s : lux_trace)
        if (s.lux < 0) throw InputError("lux trace: negative lux");
}

DetectionReport match_events(const std::vector<dsp::TagEvent>& detected, const GroundTruthLog& truth,
                             double window_s) {
    if (!(window_s > 0)) throw DomainError("match_events: window must be positive");
    DetectionReport r;
    std::vector<MatchPair> cand;
    for (std::size_t i = 0; i < truth.entries.size(); ++i)
        for (std::size_t j = 0; j < detected.size(); ++j) {
            if (truth.entries[i].tag_id != detected[j].tag_id) continue;
            const double dt = detected[j].start_s - truth.entries[i].timestamp_s;
            if (std::abs(dt) <= window_s) cand.push_back({i, j, dt});
        }
    std::stable_sort(cand.begin(), cand.end(),
                     [](const MatchPair& a, const MatchPair& b) { return std::abs(a.dt_s) < std::abs(b.dt_s); });
    std::vector<char> used_t(truth.entries.size(), 0), used_d(detected.size(), 0);
    for (const auto& c : cand) {
        if (used_t[c.truth_index] || used_d[c.detection_index]) continue;
        used_t[c.truth_index] = used_d[c.detection_index] = 1;
        r.matches.push_back(c);
    }
    std::sort(r.matches.begin(), r.matches.end(),
              [](const MatchPair& a, const MatchPair& b) { return a.truth_index < b.truth_index; });

    for (const auto& e : truth.entries) ++r.per_tag[e.tag_id].events_true;
    for (std::size_t j = 0; j < detected.size(); ++j)
        if (!used_d[j]) ++r.per_tag[detected[j].tag_id].false_positives;
    std::map<std::string, std::pair<double, double>> sums;
    for (const auto& m : r.matches) {
        const auto& d = detected[m.detection_index];
        auto& t = r.per_tag[d.tag_id];
        ++t.events_detected;
        sums[d.tag_id].first += m.dt_s;
        sums[d.tag_id].second += d.end_s - d.start_s;
    }
    for (auto& [id, t] : r.per_tag) {
        t.misses = t.events_true - t.events_detected;
        if (t.events_detected > 0) {
            t.mean_activation_s = sums[id].first / static_cast<double>(t.events_detected);
            t.mean_on_time_s = sums[id].second / static_cast<double>(t.events_detected);
        }
        r.total_true += t.events_true;
        r.total_detected += t.events_detected;
        r.total_misses += t.misses;
        r.false_positives += t.false_positives;
    }
    r.rate_defined = r.total_true > 0;
    r.failure_rate_pct = r.rate_defined ? 100.0 * static_cast<double>(r.total_misses) / static_cast<double>(r.total_true) : 0.0;
    return r;
}

FrequencyStats frequency_stats(std::span<const double> x) {
    if (x.empty()) throw DomainError("frequency_stats: empty series");
    FrequencyStats s{};
    s.n = x.size();
    s.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(s.n);
    double ss = 0.0;
    for (double v : x) ss += (v - s.mean) * (v - s.mean);
    s.sd = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    s.min = *mn;
    s.max = *mx;
    s.bandwidth = s.max - s.min;
    s.cv_pct = s.mean != 0.0 ? s.sd / std::abs(s.mean) * 100.0 : 0.0;
    return s;
}

namespace {

struct Moments {
    double mx, my, sxx, syy, sxy;
};

Moments moments(std::span<const double> x, std::span<const double> y, const char* who) {
    if (x.size() != y.size()) throw DomainError(std::string(who) + ": series lengths differ");
    if (x.size() < 2) throw DomainError(std::string(who) + ": need at least two points");
    const double n = static_cast<double>(x.size());
    Moments m{std::accumulate(x.begin(), x.end(), 0.0) / n, std::accumulate(y.begin(), y.end(), 0.0) / n, 0, 0, 0};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - m.mx, dy = y[i] - m.my;
        m.sxx += dx * dx;
        m.syy += dy * dy;
        m.sxy += dx * dy;
    }
    return m;
}

} // namespace

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
    const auto m = moments(x, y, "pearson_correlation");
    if (m.sxx == 0 || m.syy == 0) throw DomainError("pearson_correlation: zero variance");
    return std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
}

Regression regression_fit(std::span<const double> x, std::span<const double> y) {
    const auto m = moments(x, y, "regression_fit");
    if (m.sxx == 0) throw DomainError("regression_fit: zero variance in x");
    Regression r{};
    r.slope = m.sxy / m.sxx;
    r.intercept = m.my - r.slope * m.mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (r.intercept + r.slope * x[i]);
        ss_res += e * e;
    }
    r.r_squared = m.syy > 0 ? 1.0 - ss_res / m.syy : 1.0;
    return r;
}

double energy_percent(double on_time_s, double tdo_power_w, const harvest::Supercapacitor& cap) {
    const double e = cap.energy_j();
    if (!(e > 0)) throw DomainError("energy_percent: capacitor holds no energy");
    return tdo_power_w * on_time_s / e * 100.0;
}

std::vector<EnergyRow> energy_report(const DetectionReport& report,
                                     const std::map<std::string, transducers::ActivationProfile>& profiles,
                                     const harvest::Supercapacitor& cap, double tdo_power_w) {
    std::vector<EnergyRow> out;
    for (const auto& [id, t] : report.per_tag) {
        const auto it = profiles.find(id);
        if (it == profiles.end()) continue;
        out.push_back({id, it->second.on_time_s, energy_percent(it->second.on_time_s, tdo_power_w, cap)});
    }
    return out;
}

nlohmann::json to_json(const DetectionReport& r) {
    nlohmann::json tags = nlohmann::json::object();
    for (const auto& [id, t] : r.per_tag)
        tags[id] = {{"events_true", t.events_true},
                    {"events_detected", t.events_detected},
                    {"misses", t.misses},
                    {"false_positives", t.false_positives},
                    {"mean_activation_s", t.mean_activation_s},
                    {"mean_on_time_s", t.mean_on_time_s}};
    return {{"per_tag", tags},
            {"total_true", r.total_true},
            {"total_detected", r.total_detected},
            {"total_misses", r.total_misses},
            {"false_positives", r.false_positives},
            {"failure_rate_pct", r.failure_rate_pct},
            {"rate_defined", r.rate_defined}};
}

nlohmann::json to_json(const FrequencyStats& s) {
    return {{"n", s.n},     {"mean_hz", s.mean},           {"sd_hz", s.sd},    {"min_hz", s.min},
            {"max_hz", s.max}, {"bandwidth_hz", s.bandwidth}, {"cv_pct", s.cv_pct}};
}

std::string format_table(const DetectionReport& r) {
    std::ostringstream os;
    os << std::left << std::setw(12) << "tag" << std::right << std::setw(6) << "true" << std::setw(10) << "detected"
       << std::setw(8) << "missed" << std::setw(6) << "fp" << std::setw(14) << "activation_s" << std::setw(11)
       << "on_time_s" << "\n";
    os << std::fixed;
    for (const auto& [id, t] : r.per_tag)
        os << std::left << std::setw(12) << id << std::right << std::setw(6) << t.events_true << std::setw(10)
           << t.events_detected << std::setw(8) << t.misses << std::setw(6) << t.false_positives
           << std::setprecision(3) << std::setw(14) << t.mean_activation_s << std::setw(11) << t.mean_on_time_s
           << "\n";
    os << "failure rate: ";
    if (r.rate_defined)
        os << std::setprecision(2) << r.failure_rate_pct << "% (" << r.total_misses << "/" << r.total_true << ")\n";
    else
        os << "undefined (no ground truth)\n";
    return os.str();
}

GroundTruthLog load_ground_truth(const std::filesystem::path& truth_csv, const std::filesystem::path& lux_csv) {
    GroundTruthLog g;
    const auto t = CsvTable::read(truth_csv);
    t.require({"tag_id", "timestamp_s", "stimulus"});
    for (std::size_t r = 0; r < t.rows(); ++r)
        g.entries.push_back({t.text(r, "tag_id"), t.number(r, "timestamp_s"), t.text(r, "stimulus")});
    if (!lux_csv.empty()) {
        const auto l = CsvTable::read(lux_csv);
        l.require({"timestamp_s", "lux"});
        for (std::size_t r = 0; r < l.rows(); ++r) g.lux_trace.push_back({l.number(r, "timestamp_s"), l.number(r, "lux")});
    }
    g.validate();
    return g;
}

} // namespace tdotag::analytics
