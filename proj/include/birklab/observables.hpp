#pragma once

#include <cmath>
#include <string_view>

#include "birklab/dynamics.hpp"

namespace birklab {

enum class ObservableKind { PowerDistance, LogDistance };

std::string_view to_string(ObservableKind kind);
ObservableKind parse_observable_kind(std::string_view name);

/// phi(x) = d(x,p)^{-k}  or  phi(x) = -log d(x,p).
struct ObservableSpec {
    ObservableKind kind = ObservableKind::PowerDistance;
    Point p;
    double k = 1.0;

    /// Throws std::invalid_argument when k <= 0 or p lies outside phase space.
    void validate(const SystemDescriptor& system) const;

    /// Value at a given (already clamped) distance.
    double at_distance(double d) const {
        if (kind == ObservableKind::LogDistance) return -std::log(d);
        if (k == 1.0) return 1.0 / d;
        if (k == 2.0) return 1.0 / (d * d);
        if (k == 4.0) {
            const double d2 = d * d;
            return 1.0 / (d2 * d2);
        }
        return std::pow(d, -k);
    }
};

double evaluate(const ObservableSpec& spec, const OrbitState& state, const SystemDescriptor& system);

}  // namespace birklab
