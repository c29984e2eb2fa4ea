#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdotag/rng.hpp"

/// Interaction state to frequency maps and on/off trigger switches.
namespace tdotag::transducers {

enum class Kind { tilt, deformation, rotary, slider, miura, kresling, tear };

Kind parse_kind(std::string_view name);
std::string_view kind_name(Kind kind);

/// Tilt and deformation anchors are offsets from base_freq; the rest are absolute.
bool is_relative(Kind kind);

enum class OrigamiState { compressed = -1, normal = 0, expanded = 1 };

OrigamiState parse_origami_state(std::string_view name);

struct Anchor {
    double stimulus;
    double freq_hz;
    double sd_hz;
};

inline constexpr double kTagBandLoHz = 450e6;
inline constexpr double kTagBandHiHz = 600e6;

class Transducer {
public:
    /// base_freq is required for relative kinds. For absolute kinds, when given, the
    /// anchors are shifted so the rest state (lowest stimulus, or normal origami) sits at it.
    Transducer(Kind kind, std::vector<Anchor> anchors, std::optional<double> base_freq_hz = std::nullopt);

    Kind kind() const { return kind_; }
    const std::vector<Anchor>& anchors() const { return anchors_; }
    std::optional<double> base_freq() const { return base_freq_; }

    /// Noiseless emitted frequency, or nullopt when the stimulus switches the tag off.
    std::optional<double> frequency(double stimulus) const;
    /// Noise SD at the stimulus (anchor SD, linearly interpolated for continuous kinds).
    double noise_sd(double stimulus) const;
    /// frequency() plus Gaussian noise.
    std::optional<double> sample(double stimulus, Rng& rng) const;

private:
    struct Resolved {
        double freq;
        double sd;
    };
    std::optional<Resolved> resolve(double stimulus) const;

    Kind kind_;
    std::vector<Anchor> anchors_;
    std::optional<double> base_freq_;
};

/// Anchors for one kind from a `kind,stimulus,freq_hz,sd_hz` table.
std::vector<Anchor> load_anchors(const std::filesystem::path& csv, Kind kind);

/// Transducer backed by the shipped calibration fixture.
Transducer default_transducer(Kind kind, std::optional<double> base_freq_hz = std::nullopt);

/// Offsets from the base frequency (nullopt = off).
std::optional<double> offset_tilt(double angle_deg);
std::optional<double> offset_deformation(double height_mm);
/// Absolute frequencies from the shipped calibration.
double offset_rotary(double angle_deg);
double offset_slider(double length_cm);
double offset_origami(Kind kind, OrigamiState state);
double offset_tear(double torn_fraction);

enum class TriggerKind { reed, tilt_ball };

struct TriggerSwitch {
    TriggerKind kind = TriggerKind::reed;
    /// Millimetres for reed (fires at or below), degrees for tilt ball (fires above).
    double threshold = 5.0;
    double failure_prob = 0.0;

    void validate() const;
};

TriggerKind parse_trigger_kind(std::string_view name);

bool trigger_crosses(const TriggerSwitch& sw, double stimulus);

/// Threshold crossing and an independent Bernoulli(1 - failure_prob) draw seeded by `seed`.
bool trigger_evaluate(const TriggerSwitch& sw, double stimulus, std::uint64_t seed);

/// Replay mode: the outcome of the contact is given instead of drawn.
bool trigger_evaluate_scripted(const TriggerSwitch& sw, double stimulus, bool scripted_failure);

struct ActivationProfile {
    double activation_s;
    double on_time_s;
};

struct TagState {
    bool active = false;
    std::optional<double> emitted_freq_hz;
    double on_time_s = 0.0;
    double activation_time_s = 0.0;
};

/// Emission window for an interaction at t0: inactive until t0 + activation, then on for on_time.
struct ActivationTimeline {
    double interaction_s;
    double on_start_s;
    double on_end_s;
};

ActivationTimeline activate(double interaction_s, const ActivationProfile& profile);

/// Tag state at time t for one timeline emitting at freq_hz.
TagState state_at(const ActivationTimeline& tl, const ActivationProfile& profile, double freq_hz, double t);

} // namespace tdotag::transducers
