#pragma once

// Chaotic maps of the interval and the 2-torus, each realized in a number
// representation that keeps long orbits statistically faithful:
//
//   Doubling, Tent  -> exact binary-digit reservoir (symbolic dynamics)
//   CatMap          -> 64-bit fixed point, exact mod 2^64
//   LSV, Logistic   -> IEEE double pseudo-orbits; Logistic carries the
//                      distance to the nearer endpoint (see FoldedUnit)

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace birklab {

enum class SystemId { LSV, Doubling, Tent, Logistic, CatMap };
enum class Representation { Float64, BitReservoir, FixedPoint64 };
enum class DensityRegime { LebesgueLike, ArcsineBoundary, IntermittentOrigin };

std::string_view to_string(SystemId id);
std::string_view to_string(Representation r);
std::string_view to_string(DensityRegime r);
SystemId parse_system_id(std::string_view name);

/// A point of phase space. `y` is ignored for one-dimensional systems.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

class SystemDescriptor {
public:
    /// The doubling map.
    SystemDescriptor() = default;

    /// Throws std::invalid_argument when alpha is outside [0,1) for LSV.
    static SystemDescriptor make(SystemId id, double alpha = 0.0);

    SystemId id() const { return id_; }
    double alpha() const { return alpha_; }
    int dimension() const { return id_ == SystemId::CatMap ? 2 : 1; }
    Representation representation() const;
    DensityRegime density_regime() const;

    /// True when p lies in the closed phase space.
    bool contains(const Point& p) const;
    /// Discontinuity points of the map (x = 1/2 for LSV, Doubling, Tent).
    bool is_branch_point(const Point& p) const;

private:
    SystemDescriptor(SystemId id, double alpha) : id_(id), alpha_(alpha) {}
    SystemId id_ = SystemId::Doubling;
    double alpha_ = 0.0;
};

/// Binary expansion of a point of [0,1], most significant digit first.
///
/// At least 128 digits are always buffered ahead of the read position. The
/// tail is replenished either from a PRNG (a Lebesgue-random point) or with
/// zeros (a dyadic rational). Complementing every remaining digit is O(1):
/// the stored words are reinterpreted through a parity flag.
class BitReservoir {
public:
    /// Lebesgue-random point: every digit comes from the engine.
    explicit BitReservoir(std::uint64_t seed);

    /// x = numerator / 2^bits followed by an all-zero tail. bits <= 64.
    static BitReservoir dyadic(std::uint64_t numerator, int bits);

    /// Explicit leading digits (each 0 or 1) followed by PRNG digits.
    static BitReservoir with_prefix(std::span<const std::uint8_t> digits, std::uint64_t seed);

    int leading_digit() const;
    /// The next 64 digits as a fixed-point fraction of 2^64.
    std::uint64_t leading64() const;
    double value() const;

    /// Drops the leading digit (x -> 2x mod 1).
    void shift();
    /// Complements every remaining digit (x -> 1 - x).
    void complement() { flipped_ = !flipped_; }

    bool complemented() const { return flipped_; }
    bool has_zero_tail() const { return !engine_.has_value(); }
    /// Digits currently buffered ahead of the read position.
    int buffered() const { return kWords * 64 - offset_; }

private:
    static constexpr int kWords = 3;

    BitReservoir() = default;
    std::uint64_t next_word();

    std::array<std::uint64_t, kWords> words_{};
    int offset_ = 0;
    bool flipped_ = false;
    std::optional<std::mt19937_64> engine_;
    // digits still to be injected before the tail source takes over
    std::vector<std::uint64_t> pending_;
};

/// Two fractions x/2^64, y/2^64 on the torus.
struct FixedPair {
    std::uint64_t x = 0;
    std::uint64_t y = 0;
    friend bool operator==(const FixedPair&, const FixedPair&) = default;
};

/// A point of [0,1] stored as its distance to the nearer endpoint.
///
/// A plain double near 1 has absolute resolution 2^-53, so 4x(1-x) evaluated
/// within ~5e-9 of 1/2 rounds to exactly 1, whose image is the fixed point 0:
/// roughly one logistic orbit in ten collapses there within 10^7 steps. Kept
/// this way both ends retain full relative precision.
struct FoldedUnit {
    double near = 0.0;   // in [0, 1/2]
    bool upper = false;  // x = 1 - near

    static FoldedUnit from_value(double x);
    double value() const { return upper ? 1.0 - near : near; }
    double distance_to(double p) const { return upper ? std::abs((1.0 - p) - near) : std::abs(near - p); }
};

using OrbitState = std::variant<double, BitReservoir, FixedPair, FoldedUnit>;

// Single-step maps.

double lsv_step(double x, double alpha);
double logistic_step(double x);
/// 4x(1-x) on the folded representation: x' = 4a(1-a), 1-x' = (1-2a)^2.
FoldedUnit logistic_step(FoldedUnit s);
void doubling_step(BitReservoir& state);
void tent_step(BitReservoir& state);
FixedPair catmap_step(FixedPair s);
FixedPair catmap_inverse(FixedPair s);

/// Smallest distance ever reported; keeps d^{-k} finite.
inline constexpr double kDistanceFloor = 0x1p-63;

/// Fixed-point image of a coordinate in [0,1]; 1.0 wraps to 0 on the torus.
std::uint64_t to_fixed(double u);
double from_fixed(std::uint64_t u);

/// Interval metric |x - p| on [0,1]; wrapped Euclidean metric on the torus.
double distance(const OrbitState& state, const Point& p, const SystemDescriptor& system);

/// Advances any state by one application of the system's map.
void step(OrbitState& state, const SystemDescriptor& system);

/// Initial state drawn from (or burned in toward) the invariant measure.
OrbitState initial_state(const SystemDescriptor& system, std::uint64_t seed);

/// Number of discarded steps used to settle LSV orbits.
inline constexpr int kLsvBurnIn = 10'000;

/// Uniform double in [0,1) from the top 53 bits of a 64-bit word.
inline double unit_interval(std::uint64_t word) { return static_cast<double>(word >> 11) * 0x1p-53; }

}  // namespace birklab
