#include <doctest.h>

#include "test_util.hpp"
#include "tdotag/errors.hpp"
#include "tdotag/harvest.hpp"

using namespace tdotag;
using namespace tdotag::harvest;

TEST_SUITE("energy-harvest") {

TEST_CASE("grid nodes are returned exactly") {
    CHECK(harvest_power(default_array(25), 800) == doctest::Approx(30e-6));
    CHECK(harvest_power(default_array(40), 1000) == doctest::Approx(60e-6));
    CHECK(harvest_power(default_array(11), 500) == doctest::Approx(2.5e-6));
}

TEST_CASE("interpolation between nodes") {
    // Bilinear midpoint of the 25/40 x 800/1000 cell.
    const double lo = 0.5 * (30e-6 + 45e-6), hi = 0.5 * (40e-6 + 60e-6);
    const double t = (32.5 - 25.0) / 15.0;
    CHECK(harvest_power(default_array(25), 900) == doctest::Approx(lo));
    CHECK(harvest_power({32, 3, 2, default_array().grid}, 900) == doctest::Approx(lo + (32 - 25) / 15.0 * (hi - lo)));
    (void)t;
    CHECK(harvest_power(default_array(25), 250) == doctest::Approx(4e-6));
    CHECK(harvest_power(default_array(25), 0) == 0.0);
    CHECK(harvest_power(default_array(25), 5000) == doctest::Approx(45e-6));
    CHECK(harvest_power(default_array(50), 1000) == doctest::Approx(60e-6 * 50 / 40));
}

TEST_CASE("harvest input validation") {
    CHECK_THROWS_AS(harvest_power(default_array(25), -1), DomainError);
    CHECK_THROWS_AS(harvest_power(default_array(0), 100), InputError);
    CHECK_THROWS_AS(harvest_power(PhotodiodeArray{}, 100), InputError);
}

TEST_CASE("supercapacitor energy bookkeeping") {
    const Supercapacitor c(0.47, 0.25);
    CHECK(c.energy_j() == doctest::Approx(0.5 * 0.47 * 0.0625));
    const auto up = charge_step(c, 10e-6, 0, 100);
    CHECK(up.energy_j() == doctest::Approx(c.energy_j() + 1e-3));
    const auto drained = charge_step(c, 0, 1.0, 100);
    CHECK(drained.voltage_v == 0.0);
    CHECK_THROWS_AS(charge_step(c, 1, 0, 0), DomainError);
    CHECK_THROWS_AS(charge_step(c, -1, 0, 1), DomainError);
    CHECK_THROWS_AS(Supercapacitor(0, 1), InputError);
}

TEST_CASE("time to voltage") {
    const Supercapacitor c(0.47, 0.0);
    CHECK(time_to_voltage(c, 50e-6, 0.25) == doctest::Approx(0.5 * 0.47 * 0.0625 / 50e-6));
    CHECK(time_to_voltage(Supercapacitor(0.47, 0.25), 1e-6, 0.25) == 0.0);
    CHECK_THROWS_AS(time_to_voltage(c, 0.0, 0.25), ModelError);
    CHECK_THROWS_AS(time_to_voltage(Supercapacitor(0.47, 0.3), 1e-6, 0.25), DomainError);
}

TEST_CASE("feasibility") {
    const auto a = default_array(25);
    const auto ok = feasibility(a, 1000, 40e-6);
    CHECK(ok.sustainable);
    const auto short_ = feasibility(a, 500, 40e-6);
    CHECK_FALSE(short_.sustainable);
    CHECK(short_.deficit_w == doctest::Approx(32e-6));
}

TEST_CASE("grid loader rejects malformed tables") {
    TempDir d("grid");
    write_text_file(d / "g.csv", "count,lux,power_w\n1,1,1\n1,2,2\n2,1,3\n");
    CHECK_THROWS_AS(load_power_grid(d / "g.csv"), InputError);
    write_text_file(d / "h.csv", "count,lux,power_w\n1,1,2\n1,2,1\n2,1,3\n2,2,4\n");
    CHECK_THROWS_AS(load_power_grid(d / "h.csv"), InputError);
    write_text_file(d / "i.csv", "count,lux,power_w\n1,1,1\n1,2,2\n2,1,3\n2,2,4\n");
    CHECK_NOTHROW(load_power_grid(d / "i.csv"));
}

}
