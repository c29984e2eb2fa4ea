#include <doctest.h>

#include <cmath>

#include "tdotag/errors.hpp"
#include "tdotag/transducers.hpp"

using namespace tdotag;
using namespace tdotag::transducers;

TEST_SUITE("transducers") {

TEST_CASE("tilt offsets and cutoff") {
    CHECK(*offset_tilt(0) == doctest::Approx(0).epsilon(1e-12));
    CHECK(*offset_tilt(15) == doctest::Approx(84.5e3).epsilon(1e-12));
    CHECK(*offset_tilt(30) == doctest::Approx(169e3).epsilon(1e-12));
    CHECK_FALSE(offset_tilt(90).has_value());
    CHECK_THROWS_AS(offset_tilt(-1), DomainError);
}

TEST_CASE("deformation offsets and cutoff") {
    CHECK(*offset_deformation(0.125) == doctest::Approx(98.74e3).epsilon(1e-12));
    CHECK(*offset_deformation(0.25) == doctest::Approx(2 * 98.74e3).epsilon(1e-12));
    CHECK(offset_deformation(3.25).has_value());
    CHECK_FALSE(offset_deformation(3.3).has_value());
}

TEST_CASE("snapped kinds return anchor frequencies") {
    CHECK(offset_rotary(0) == 580.316e6);
    CHECK(offset_rotary(60) == 580.558e6);
    CHECK(offset_rotary(70) == 580.558e6);
    CHECK(offset_rotary(100) == 580.724e6);
    CHECK(offset_origami(Kind::miura, OrigamiState::compressed) == 582.059e6);
    CHECK(offset_origami(Kind::miura, OrigamiState::expanded) == 582.457e6);
    CHECK(offset_origami(Kind::kresling, OrigamiState::normal) == 581.174e6);
    CHECK_THROWS_AS(offset_origami(Kind::tilt, OrigamiState::normal), InputError);
}

TEST_CASE("slider and tear interpolate linearly") {
    CHECK(offset_slider(2.5) == 580.765e6);
    CHECK(offset_slider(15) == 581.279e6);
    CHECK(offset_slider(8.75) == doctest::Approx(0.5 * (580.765e6 + 581.279e6)));
    CHECK(offset_tear(0) == 580.028e6);
    CHECK(offset_tear(1) == 580.421e6);
    CHECK_THROWS_AS(offset_slider(1), DomainError);
}

TEST_CASE("base frequency shifts absolute kinds to their rest state") {
    const auto t = default_transducer(Kind::miura, 500e6);
    CHECK(*t.frequency(0) == doctest::Approx(500e6));
    CHECK(*t.frequency(1) == doctest::Approx(500e6 + (582.457e6 - 582.258e6)));
    const auto s = default_transducer(Kind::slider, 500e6);
    CHECK(*s.frequency(2.5) == doctest::Approx(500e6));
    CHECK_THROWS_AS(default_transducer(Kind::tilt), InputError);
    CHECK_THROWS_AS(default_transducer(Kind::rotary, 700e6), InputError);
}

TEST_CASE("frequencies outside the tag band are refused") {
    const auto t = default_transducer(Kind::deformation, 599.9e6);
    CHECK_THROWS_AS(t.frequency(3.0), DomainError);
}

TEST_CASE("noise model") {
    const auto t = default_transducer(Kind::tilt, 500e6);
    CHECK(t.noise_sd(15) == 37900);
    CHECK(t.noise_sd(7.5) == doctest::Approx(18950));
    CHECK(t.noise_sd(90) == 0);
    auto a = make_rng(5), b = make_rng(5);
    CHECK(t.sample(15, a) == t.sample(15, b));
    auto c = make_rng(5);
    CHECK(t.sample(0, c) == t.frequency(0));
    const auto tear = default_transducer(Kind::tear);
    auto d = make_rng(1);
    CHECK(tear.sample(0.5, d) == tear.frequency(0.5));
}

TEST_CASE("anchor table validation") {
    CHECK_THROWS_AS(Transducer(Kind::slider, {{0, 500e6, 0}}), InputError);
    CHECK_THROWS_AS(Transducer(Kind::slider, {{0, 500e6, 0}, {1, 499e6, 0}}), InputError);
    CHECK_THROWS_AS(Transducer(Kind::slider, {{0, 500e6, 0}, {0, 501e6, 0}}), InputError);
    CHECK_THROWS_AS(Transducer(Kind::slider, {{0, 500e6, -1}, {1, 501e6, 0}}), InputError);
    CHECK_THROWS_AS(parse_kind("accordion"), InputError);
    CHECK(parse_kind("kresling") == Kind::kresling);
    CHECK(kind_name(Kind::tear) == "tear");
}

TEST_CASE("trigger switches") {
    TriggerSwitch reed;
    CHECK(trigger_crosses(reed, 5.0));
    CHECK_FALSE(trigger_crosses(reed, 5.1));
    TriggerSwitch ball{TriggerKind::tilt_ball, 60.0, 0.0};
    CHECK(trigger_crosses(ball, 61));
    CHECK_FALSE(trigger_crosses(ball, 60));
    CHECK(trigger_evaluate(reed, 1, 123));
    reed.failure_prob = 1.0;
    CHECK_FALSE(trigger_evaluate(reed, 1, 123));
    reed.failure_prob = 0.3;
    int fired = 0;
    for (std::uint64_t s = 0; s < 20000; ++s) fired += trigger_evaluate(reed, 1, s);
    CHECK(fired / 20000.0 == doctest::Approx(0.7).epsilon(0.02));
    CHECK(trigger_evaluate(reed, 1, 77) == trigger_evaluate(reed, 1, 77));
    CHECK_FALSE(trigger_evaluate_scripted(reed, 1, true));
    CHECK(trigger_evaluate_scripted(reed, 1, false));
    reed.failure_prob = 2;
    CHECK_THROWS_AS(trigger_evaluate(reed, 1, 0), InputError);
}

TEST_CASE("activation timeline") {
    const ActivationProfile p{0.5, 2.0};
    const auto tl = activate(10, p);
    CHECK(tl.on_start_s == 10.5);
    CHECK(tl.on_end_s == 12.5);
    CHECK_FALSE(state_at(tl, p, 5e8, 10.4).active);
    const auto on = state_at(tl, p, 5e8, 10.5);
    CHECK(on.active);
    CHECK(*on.emitted_freq_hz == 5e8);
    CHECK_FALSE(state_at(tl, p, 5e8, 12.5).active);
    CHECK_THROWS_AS(activate(0, {-1, 1}), InputError);
}

}
