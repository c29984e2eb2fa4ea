#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tdotag/rng.hpp"

namespace tdotag::props {

/// One randomized case; returns a failure description or nullopt.
using Case = std::function<std::optional<std::string>(Rng&)>;

struct Property {
    std::string module;
    std::string name;
    Case check;
};

struct PropertyResult {
    std::string module;
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::string first_failure;
};

const std::vector<Property>& all_properties();

PropertyResult run_property(const Property& p, std::size_t cases, std::uint64_t seed);
std::vector<PropertyResult> run_all_properties(std::size_t cases, std::uint64_t seed = 1);

} // namespace tdotag::props
