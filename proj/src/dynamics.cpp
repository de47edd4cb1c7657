#include "birklab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace birklab {

std::string_view to_string(SystemId id) {
    switch (id) {
        case SystemId::LSV: return "lsv";
        case SystemId::Doubling: return "doubling";
        case SystemId::Tent: return "tent";
        case SystemId::Logistic: return "logistic";
        case SystemId::CatMap: return "catmap";
    }
    return "?";
}

std::string_view to_string(Representation r) {
    switch (r) {
        case Representation::Float64: return "Float64";
        case Representation::BitReservoir: return "BitReservoir";
        case Representation::FixedPoint64: return "FixedPoint64";
    }
    return "?";
}

std::string_view to_string(DensityRegime r) {
    switch (r) {
        case DensityRegime::LebesgueLike: return "LebesgueLike";
        case DensityRegime::ArcsineBoundary: return "ArcsineBoundary";
        case DensityRegime::IntermittentOrigin: return "IntermittentOrigin";
    }
    return "?";
}

SystemId parse_system_id(std::string_view name) {
    for (auto id : {SystemId::LSV, SystemId::Doubling, SystemId::Tent, SystemId::Logistic, SystemId::CatMap}) {
        if (name == to_string(id)) return id;
    }
    throw std::invalid_argument("unknown system '" + std::string(name) +
                                "' (expected lsv, doubling, tent, logistic or catmap)");
}

SystemDescriptor SystemDescriptor::make(SystemId id, double alpha) {
    if (id == SystemId::LSV) {
        if (!(alpha >= 0.0 && alpha < 1.0)) {
            throw std::invalid_argument(fmt::format("alpha = {} violates 0 ≤ α < 1", alpha));
        }
        return SystemDescriptor(id, alpha);
    }
    return SystemDescriptor(id, 0.0);
}

Representation SystemDescriptor::representation() const {
    switch (id_) {
        case SystemId::Doubling:
        case SystemId::Tent: return Representation::BitReservoir;
        case SystemId::CatMap: return Representation::FixedPoint64;
        default: return Representation::Float64;
    }
}

DensityRegime SystemDescriptor::density_regime() const {
    switch (id_) {
        case SystemId::LSV: return DensityRegime::IntermittentOrigin;
        case SystemId::Logistic: return DensityRegime::ArcsineBoundary;
        default: return DensityRegime::LebesgueLike;
    }
}

bool SystemDescriptor::contains(const Point& p) const {
    auto in_unit = [](double u) { return u >= 0.0 && u <= 1.0; };
    return in_unit(p.x) && (dimension() == 1 || in_unit(p.y));
}

bool SystemDescriptor::is_branch_point(const Point& p) const {
    switch (id_) {
        case SystemId::LSV:
        case SystemId::Doubling:
        case SystemId::Tent: return p.x == 0.5;
        default: return false;
    }
}

// ---------------------------------------------------------------------------
// BitReservoir

BitReservoir::BitReservoir(std::uint64_t seed) : engine_(std::in_place, seed) {
    for (auto& w : words_) w = next_word();
}

BitReservoir BitReservoir::dyadic(std::uint64_t numerator, int bits) {
    if (bits < 0 || bits > 64) throw std::invalid_argument("dyadic: bits must lie in [0,64]");
    if (bits < 64 && (numerator >> bits) != 0) throw std::invalid_argument("dyadic: numerator >= 2^bits");
    BitReservoir r;
    r.words_ = {bits == 0 ? 0 : numerator << (64 - bits), 0, 0};
    return r;
}

BitReservoir BitReservoir::with_prefix(std::span<const std::uint8_t> digits, std::uint64_t seed) {
    BitReservoir r;
    r.engine_.emplace(seed);
    std::vector<std::uint64_t> packed((digits.size() + 63) / 64, 0);
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (digits[i] > 1) throw std::invalid_argument("with_prefix: digits must be 0 or 1");
        if (digits[i]) packed[i / 64] |= std::uint64_t{1} << (63 - i % 64);
    }
    if (const auto used = digits.size() % 64; used != 0) {
        packed.back() |= (*r.engine_)() >> used;
    }
    r.pending_.assign(packed.rbegin(), packed.rend());
    for (auto& w : r.words_) w = r.next_word();
    return r;
}

std::uint64_t BitReservoir::next_word() {
    if (!pending_.empty()) {
        const auto w = pending_.back();
        pending_.pop_back();
        return w;
    }
    return engine_ ? (*engine_)() : 0;
}

int BitReservoir::leading_digit() const {
    return static_cast<int>((words_[0] >> (63 - offset_)) & 1U) ^ static_cast<int>(flipped_);
}

std::uint64_t BitReservoir::leading64() const {
    std::uint64_t w = offset_ == 0 ? words_[0] : (words_[0] << offset_) | (words_[1] >> (64 - offset_));
    return flipped_ ? ~w : w;
}

double BitReservoir::value() const { return from_fixed(leading64()); }

void BitReservoir::shift() {
    if (++offset_ == 64) {
        words_[0] = words_[1];
        words_[1] = words_[2];
        words_[2] = next_word();
        offset_ = 0;
    }
}

// ---------------------------------------------------------------------------
// Maps

namespace {

constexpr double kUlpSlack = std::numeric_limits<double>::epsilon();

void check_unit(double x, const char* who) {
    if (!(x >= -kUlpSlack && x <= 1.0 + kUlpSlack)) {
        throw std::domain_error(fmt::format("{}: x = {} outside [0,1]", who, x));
    }
}

}  // namespace

double lsv_step(double x, double alpha) {
    check_unit(x, "lsv_step");
    if (x <= 0.5) {
        // 2^a x^{1+a} written as x (2x)^a: exact 1/2 at x = 1/2 and never above 2x.
        return x + x * std::pow(2.0 * x, alpha);
    }
    return 2.0 * x - 1.0;
}

double logistic_step(double x) {
    check_unit(x, "logistic_step");
    return 4.0 * x * (1.0 - x);
}

FoldedUnit FoldedUnit::from_value(double x) {
    check_unit(x, "FoldedUnit");
    x = std::clamp(x, 0.0, 1.0);
    return x <= 0.5 ? FoldedUnit{x, false} : FoldedUnit{1.0 - x, true};
}

FoldedUnit logistic_step(FoldedUnit s) {
    const double a = s.near;
    const double image = 4.0 * a * (1.0 - a);
    if (image <= 0.5) return {image, false};
    const double gap = 1.0 - 2.0 * a;
    return {gap * gap, true};
}

void doubling_step(BitReservoir& state) { state.shift(); }

void tent_step(BitReservoir& state) {
    const int lead = state.leading_digit();
    state.shift();
    if (lead == 1) state.complement();
}

FixedPair catmap_step(FixedPair s) { return {2 * s.x + s.y, s.x + s.y}; }

FixedPair catmap_inverse(FixedPair s) { return {s.x - s.y, 2 * s.y - s.x}; }

std::uint64_t to_fixed(double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("to_fixed: coordinate outside [0,1]");
    if (u == 1.0) return 0;
    const long double scaled = std::ldexp(static_cast<long double>(u), 64);
    const long double rounded = std::nearbyint(scaled);
    if (rounded >= 0x1p64L) return 0;
    return static_cast<std::uint64_t>(rounded);
}

double from_fixed(std::uint64_t u) { return std::ldexp(static_cast<double>(u), -64); }

namespace {

double interval_distance_fixed(std::uint64_t x, double p) {
    // exact |x - p| in units of 2^-64, with p = 1 representable
    const auto px = static_cast<unsigned __int128>(p == 1.0 ? (static_cast<unsigned __int128>(1) << 64)
                                                            : to_fixed(p));
    const auto xx = static_cast<unsigned __int128>(x);
    const unsigned __int128 gap = xx > px ? xx - px : px - xx;
    return std::max(std::ldexp(static_cast<double>(gap), -64), kDistanceFloor);
}

double torus_gap(std::uint64_t a, std::uint64_t b) {
    const std::uint64_t d = a - b;
    return from_fixed(std::min(d, std::uint64_t{0} - d));
}

}  // namespace

double distance(const OrbitState& state, const Point& p, const SystemDescriptor& system) {
    switch (system.representation()) {
        case Representation::Float64:
            if (const auto* f = std::get_if<FoldedUnit>(&state)) return std::max(f->distance_to(p.x), kDistanceFloor);
            return std::max(std::abs(std::get<double>(state) - p.x), kDistanceFloor);
        case Representation::BitReservoir:
            return interval_distance_fixed(std::get<BitReservoir>(state).leading64(), p.x);
        case Representation::FixedPoint64: {
            const auto& s = std::get<FixedPair>(state);
            const double dx = torus_gap(s.x, to_fixed(p.x));
            const double dy = torus_gap(s.y, to_fixed(p.y));
            return std::max(std::sqrt(dx * dx + dy * dy), kDistanceFloor);
        }
    }
    return 0.0;
}

void step(OrbitState& state, const SystemDescriptor& system) {
    switch (system.id()) {
        case SystemId::LSV: state = lsv_step(std::get<double>(state), system.alpha()); break;
        case SystemId::Logistic:
            if (const auto* x = std::get_if<double>(&state)) state = FoldedUnit::from_value(*x);
            state = logistic_step(std::get<FoldedUnit>(state));
            break;
        case SystemId::Doubling: doubling_step(std::get<BitReservoir>(state)); break;
        case SystemId::Tent: tent_step(std::get<BitReservoir>(state)); break;
        case SystemId::CatMap: state = catmap_step(std::get<FixedPair>(state)); break;
    }
}

OrbitState initial_state(const SystemDescriptor& system, std::uint64_t seed) {
    switch (system.id()) {
        case SystemId::Doubling:
        case SystemId::Tent: return BitReservoir(seed);
        case SystemId::CatMap: {
            std::mt19937_64 rng(seed);
            const auto x = rng();
            return FixedPair{x, rng()};
        }
        case SystemId::Logistic: {
            // arcsine law: x = sin^2(pi u / 2), 1 - x = sin^2(pi (1-u) / 2), u uniform
            std::mt19937_64 rng(seed);
            const double u = unit_interval(rng());
            const bool upper = u >= 0.5;
            const double s = std::sin(0.5 * M_PI * (upper ? 1.0 - u : u));
            return FoldedUnit{s * s, upper};
        }
        case SystemId::LSV: {
            std::mt19937_64 rng(seed);
            double x = unit_interval(rng());
            for (int i = 0; i < kLsvBurnIn; ++i) x = lsv_step(x, system.alpha());
            return x;
        }
    }
    return 0.0;
}

}  // namespace birklab
