#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "tdotag/errors.hpp"

namespace tdotag {

struct Breakpoint {
    double x;
    double y;
};

/// Piecewise-linear function over strictly increasing breakpoints.
/// Evaluation outside [front.x, back.x] throws DomainError.
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;

    explicit PiecewiseLinear(std::vector<Breakpoint> points, std::string what = "curve")
        : points_(std::move(points)), what_(std::move(what)) {
        if (points_.size() < 2)
            throw InputError(what_ + ": need at least two breakpoints");
        for (std::size_t i = 1; i < points_.size(); ++i)
            if (!(points_[i].x > points_[i - 1].x))
                throw InputError(what_ + ": breakpoints must be strictly increasing");
    }

    double operator()(double x) const {
        if (!(x >= lo() && x <= hi()))
            throw DomainError(what_ + ": " + std::to_string(x) + " outside [" +
                              std::to_string(lo()) + ", " + std::to_string(hi()) + "]");
        auto it = std::upper_bound(points_.begin(), points_.end(), x,
                                   [](double v, const Breakpoint& p) { return v < p.x; });
        if (it == points_.end()) return points_.back().y;
        if (it == points_.begin()) return points_.front().y;
        const Breakpoint& b = *it;
        const Breakpoint& a = *(it - 1);
        const double t = (x - a.x) / (b.x - a.x);
        return a.y + t * (b.y - a.y);
    }

    double lo() const { return points_.front().x; }
    double hi() const { return points_.back().x; }
    std::span<const Breakpoint> points() const { return points_; }

private:
    std::vector<Breakpoint> points_;
    std::string what_;
};

} // namespace tdotag
