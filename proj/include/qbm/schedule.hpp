// schedule.hpp — Time-dependent scalar coefficients.
//
// A Schedule is a constant, a linear function a + b*t, or a (t, value)
// table with linear interpolation and constant extrapolation. Constants and
// tables round-trip through the scenario text format (see scenario.hpp).

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qbm/errors.hpp"

namespace qbm {

class Schedule {
public:
    Schedule() = default;
    /*implicit*/ Schedule(double constant) : intercept_(constant) {}

    static Schedule constant(double value) { return Schedule(value); }

    static Schedule linear(double intercept, double slope) {
        Schedule s(intercept);
        s.slope_ = slope;
        return s;
    }

    static Schedule table(std::vector<std::pair<double, double>> points) {
        if (points.empty()) throw SimulationError("schedule table must not be empty");
        std::sort(points.begin(), points.end());
        for (std::size_t i = 1; i < points.size(); ++i)
            if (points[i].first == points[i - 1].first)
                throw SimulationError("schedule table has duplicate time " +
                                      std::to_string(points[i].first));
        Schedule s;
        s.points_ = std::move(points);
        return s;
    }

    double operator()(double t) const {
        if (points_.empty()) return intercept_ + slope_ * t;
        if (t <= points_.front().first) return points_.front().second;
        if (t >= points_.back().first) return points_.back().second;
        auto hi = std::upper_bound(points_.begin(), points_.end(), t,
                                   [](double v, const auto& p) { return v < p.first; });
        auto lo = hi - 1;
        const double w = (t - lo->first) / (hi->first - lo->first);
        return lo->second + w * (hi->second - lo->second);
    }

    bool is_constant() const { return points_.empty() && slope_ == 0.0; }
    bool is_table() const { return !points_.empty(); }
    double constant_value() const { return intercept_; }
    const std::vector<std::pair<double, double>>& table_points() const { return points_; }

    // Central-difference derivative; exact for constant and linear forms.
    double derivative(double t, double h = 1e-6) const {
        if (points_.empty()) return slope_;
        return ((*this)(t + h) - (*this)(t - h)) / (2.0 * h);
    }

private:
    double intercept_ = 0.0;
    double slope_ = 0.0;
    std::vector<std::pair<double, double>> points_;
};

} // namespace qbm
