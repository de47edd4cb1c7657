#include "birklab/observables.hpp"

#include <stdexcept>
#include <string>

#include <fmt/format.h>

namespace birklab {

std::string_view to_string(ObservableKind kind) {
    return kind == ObservableKind::PowerDistance ? "power" : "log";
}

ObservableKind parse_observable_kind(std::string_view name) {
    if (name == "power") return ObservableKind::PowerDistance;
    if (name == "log") return ObservableKind::LogDistance;
    throw std::invalid_argument("unknown observable '" + std::string(name) + "' (expected power or log)");
}

void ObservableSpec::validate(const SystemDescriptor& system) const {
    if (kind == ObservableKind::PowerDistance && !(k > 0.0 && std::isfinite(k))) {
        throw std::invalid_argument(fmt::format("k = {} violates k > 0", k));
    }
    if (!system.contains(p)) throw std::invalid_argument("p lies outside the phase space");
}

double evaluate(const ObservableSpec& spec, const OrbitState& state, const SystemDescriptor& system) {
    return spec.at_distance(distance(state, spec.p, system));
}

}  // namespace birklab
