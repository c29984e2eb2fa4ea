#pragma once

#include <stdexcept>
#include <string>

namespace tdotag {

/// Argument outside the domain a model is defined on.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The model has no valid answer for otherwise well-formed inputs.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed files, configs or command-line input.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The small-signal condition 1 - R_T*|g_d| > 0 does not hold.
class NoOscillation : public ModelError {
public:
    explicit NoOscillation(double radicand)
        : ModelError("no oscillation: 1 - R_T*|g_d| = " + std::to_string(radicand) + " <= 0"),
          radicand_(radicand) {}

    double radicand() const noexcept { return radicand_; }

private:
    double radicand_;
};

} // namespace tdotag
