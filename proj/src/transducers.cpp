#include "tdotag/transducers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "tdotag/csv.hpp"
#include "tdotag/errors.hpp"
#include "tdotag/fixtures.hpp"

namespace tdotag::transducers {

namespace {

constexpr std::pair<Kind, std::string_view> kKindNames[] = {
    {Kind::tilt, "tilt"},   {Kind::deformation, "deformation"}, {Kind::rotary, "rotary"}, {Kind::slider, "slider"},
    {Kind::miura, "miura"}, {Kind::kresling, "kresling"},       {Kind::tear, "tear"},
};

constexpr double kTiltCutoffDeg = 90.0;
constexpr double kDeformationCutoffMm = 3.25;

bool snapped(Kind k) { return k == Kind::rotary || k == Kind::miura || k == Kind::kresling; }

// Valid stimulus range per kind; relative kinds extrapolate the anchor slope across it.
std::pair<double, double> domain(Kind k, const std::vector<Anchor>& a) {
    switch (k) {
    case Kind::tilt: return {0.0, kTiltCutoffDeg};
    case Kind::deformation: return {0.0, INFINITY};
    case Kind::rotary: {
        const double half = a.size() > 1 ? 0.5 * (a[1].stimulus - a[0].stimulus) : 0.0;
        return {a.front().stimulus - half, a.back().stimulus + half};
    }
    default: return {a.front().stimulus, a.back().stimulus};
    }
}

} // namespace

Kind parse_kind(std::string_view name) {
    for (auto [k, n] : kKindNames)
        if (n == name) return k;
    throw InputError("unknown transducer kind '" + std::string(name) + "'");
}

std::string_view kind_name(Kind kind) {
    for (auto [k, n] : kKindNames)
        if (k == kind) return n;
    return "?";
}

bool is_relative(Kind kind) { return kind == Kind::tilt || kind == Kind::deformation; }

OrigamiState parse_origami_state(std::string_view name) {
    if (name == "compressed") return OrigamiState::compressed;
    if (name == "normal") return OrigamiState::normal;
    if (name == "expanded") return OrigamiState::expanded;
    throw InputError("unknown origami state '" + std::string(name) + "'");
}

Transducer::Transducer(Kind kind, std::vector<Anchor> anchors, std::optional<double> base_freq_hz)
    : kind_(kind), anchors_(std::move(anchors)), base_freq_(base_freq_hz) {
    if (anchors_.size() < 2) throw InputError(std::string(kind_name(kind)) + ": need at least two anchors");
    std::sort(anchors_.begin(), anchors_.end(), [](const Anchor& a, const Anchor& b) { return a.stimulus < b.stimulus; });
    for (std::size_t i = 1; i < anchors_.size(); ++i) {
        if (!(anchors_[i].stimulus > anchors_[i - 1].stimulus))
            throw InputError(std::string(kind_name(kind)) + ": duplicate anchor stimulus");
        if (!(anchors_[i].freq_hz > anchors_[i - 1].freq_hz))
            throw InputError(std::string(kind_name(kind)) + ": anchors must increase with stimulus");
    }
    for (const auto& a : anchors_)
        if (a.sd_hz < 0) throw InputError(std::string(kind_name(kind)) + ": negative noise SD");

    if (is_relative(kind)) {
        if (!base_freq_) throw InputError(std::string(kind_name(kind)) + ": base frequency required");
    } else if (base_freq_) {
        const auto rest = std::find_if(anchors_.begin(), anchors_.end(), [](const Anchor& a) { return a.stimulus == 0; });
        const double ref = (kind == Kind::miura || kind == Kind::kresling) && rest != anchors_.end()
                               ? rest->freq_hz
                               : anchors_.front().freq_hz;
        const double shift = *base_freq_ - ref;
        for (auto& a : anchors_) a.freq_hz += shift;
    }
    if (base_freq_ && (*base_freq_ < kTagBandLoHz || *base_freq_ > kTagBandHiHz))
        throw InputError(std::string(kind_name(kind)) + ": base frequency outside the tag band");
}

std::optional<Transducer::Resolved> Transducer::resolve(double s) const {
    const auto [lo, hi] = domain(kind_, anchors_);
    if (!(s >= lo && s <= hi))
        throw DomainError(std::string(kind_name(kind_)) + ": stimulus " + std::to_string(s) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
    if (kind_ == Kind::tilt && s >= kTiltCutoffDeg) return std::nullopt;
    if (kind_ == Kind::deformation && s > kDeformationCutoffMm) return std::nullopt;

    if (snapped(kind_)) {
        const auto best = std::min_element(anchors_.begin(), anchors_.end(), [s](const Anchor& a, const Anchor& b) {
            return std::abs(a.stimulus - s) < std::abs(b.stimulus - s);
        });
        if (best->freq_hz < kTagBandLoHz || best->freq_hz > kTagBandHiHz)
            throw DomainError(std::string(kind_name(kind_)) + ": anchor outside the tag band");
        return Resolved{best->freq_hz, best->sd_hz};
    }

    // Linear through the bracketing anchors; the end segments extend past the last anchor.
    std::size_t i = 1;
    while (i + 1 < anchors_.size() && s > anchors_[i].stimulus) ++i;
    const Anchor& a = anchors_[i - 1];
    const Anchor& b = anchors_[i];
    const double t = (s - a.stimulus) / (b.stimulus - a.stimulus);
    double f = a.freq_hz + t * (b.freq_hz - a.freq_hz);
    const double sd = a.sd_hz + std::clamp(t, 0.0, 1.0) * (b.sd_hz - a.sd_hz);
    if (is_relative(kind_)) f += *base_freq_;
    if (f < kTagBandLoHz || f > kTagBandHiHz)
        throw DomainError(std::string(kind_name(kind_)) + ": frequency " + std::to_string(f) + " Hz outside the tag band");
    return Resolved{f, sd};
}

std::optional<double> Transducer::frequency(double s) const {
    const auto r = resolve(s);
    if (!r) return std::nullopt;
    return r->freq;
}

double Transducer::noise_sd(double s) const {
    const auto r = resolve(s);
    return r ? r->sd : 0.0;
}

std::optional<double> Transducer::sample(double s, Rng& rng) const {
    const auto r = resolve(s);
    if (!r) return std::nullopt;
    if (r->sd == 0.0) return r->freq;
    std::normal_distribution<double> n(0.0, r->sd);
    return std::clamp(r->freq + n(rng), kTagBandLoHz, kTagBandHiHz);
}

std::vector<Anchor> load_anchors(const std::filesystem::path& csv, Kind kind) {
    const auto t = CsvTable::read(csv);
    t.require({"kind", "stimulus", "freq_hz", "sd_hz"});
    std::vector<Anchor> out;
    for (std::size_t r = 0; r < t.rows(); ++r)
        if (parse_kind(t.text(r, "kind")) == kind)
            out.push_back({t.number(r, "stimulus"), t.number(r, "freq_hz"), t.number(r, "sd_hz")});
    if (out.empty()) throw InputError(csv.string() + ": no anchors for " + std::string(kind_name(kind)));
    return out;
}

namespace {

const std::vector<Anchor>& shipped_anchors(Kind kind) {
    static std::mutex mu;
    static std::map<Kind, std::vector<Anchor>> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(kind);
    if (it == cache.end()) it = cache.emplace(kind, load_anchors(fixture_path("transducer_anchors.csv"), kind)).first;
    return it->second;
}

// Offsets are reported against a zero base.
double offset_of(Kind kind, double s, bool* off) {
    const Transducer t(kind, shipped_anchors(kind), 500e6);
    const auto f = t.frequency(s);
    *off = !f;
    return f ? *f - 500e6 : 0.0;
}

} // namespace

Transducer default_transducer(Kind kind, std::optional<double> base_freq_hz) {
    return Transducer(kind, shipped_anchors(kind), base_freq_hz);
}

std::optional<double> offset_tilt(double angle_deg) {
    bool off = false;
    const double d = offset_of(Kind::tilt, angle_deg, &off);
    if (off) return std::nullopt;
    return d;
}

std::optional<double> offset_deformation(double height_mm) {
    bool off = false;
    const double d = offset_of(Kind::deformation, height_mm, &off);
    if (off) return std::nullopt;
    return d;
}

double offset_rotary(double angle_deg) { return *default_transducer(Kind::rotary).frequency(angle_deg); }

double offset_slider(double length_cm) { return *default_transducer(Kind::slider).frequency(length_cm); }

double offset_origami(Kind kind, OrigamiState state) {
    if (kind != Kind::miura && kind != Kind::kresling) throw InputError("offset_origami: kind must be miura or kresling");
    return *default_transducer(kind).frequency(static_cast<double>(static_cast<int>(state)));
}

double offset_tear(double torn_fraction) { return *default_transducer(Kind::tear).frequency(torn_fraction); }

void TriggerSwitch::validate() const {
    if (!(failure_prob >= 0 && failure_prob <= 1)) throw InputError("trigger: failure_prob must lie in [0, 1]");
    if (!(threshold >= 0)) throw InputError("trigger: threshold must be non-negative");
}

TriggerKind parse_trigger_kind(std::string_view name) {
    if (name == "reed") return TriggerKind::reed;
    if (name == "tilt_ball") return TriggerKind::tilt_ball;
    throw InputError("unknown trigger kind '" + std::string(name) + "'");
}

bool trigger_crosses(const TriggerSwitch& sw, double stimulus) {
    return sw.kind == TriggerKind::reed ? stimulus <= sw.threshold : stimulus > sw.threshold;
}

bool trigger_evaluate(const TriggerSwitch& sw, double stimulus, std::uint64_t seed) {
    sw.validate();
    if (!trigger_crosses(sw, stimulus)) return false;
    auto rng = make_rng(seed, 0x7419);
    return uniform01(rng) >= sw.failure_prob;
}

bool trigger_evaluate_scripted(const TriggerSwitch& sw, double stimulus, bool scripted_failure) {
    sw.validate();
    return trigger_crosses(sw, stimulus) && !scripted_failure;
}

ActivationTimeline activate(double t0, const ActivationProfile& p) {
    if (p.activation_s < 0 || p.on_time_s < 0) throw InputError("activation profile: times must be non-negative");
    return {t0, t0 + p.activation_s, t0 + p.activation_s + p.on_time_s};
}

TagState state_at(const ActivationTimeline& tl, const ActivationProfile& p, double freq_hz, double t) {
    TagState s;
    s.on_time_s = p.on_time_s;
    s.activation_time_s = p.activation_s;
    if (t >= tl.on_start_s && t < tl.on_end_s) {
        s.active = true;
        s.emitted_freq_hz = freq_hz;
    }
    return s;
}

} // namespace tdotag::transducers
