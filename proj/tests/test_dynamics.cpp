#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "birklab/dynamics.hpp"

using namespace birklab;

namespace {

// Exact value of a reservoir in units of 2^-64. A complemented zero tail is
// an all-ones tail, which adds one unit.
unsigned __int128 exact64(const BitReservoir& r) {
    unsigned __int128 v = r.leading64();
    if (r.complemented() && r.has_zero_tail()) v += 1;
    return v;
}

}  // namespace

TEST_CASE("system descriptors") {
    CHECK(SystemDescriptor().id() == SystemId::Doubling);
    CHECK(SystemDescriptor::make(SystemId::CatMap).dimension() == 2);
    CHECK(SystemDescriptor::make(SystemId::LSV, 0.5).dimension() == 1);
    CHECK(SystemDescriptor::make(SystemId::Doubling).representation() == Representation::BitReservoir);
    CHECK(SystemDescriptor::make(SystemId::Tent).representation() == Representation::BitReservoir);
    CHECK(SystemDescriptor::make(SystemId::CatMap).representation() == Representation::FixedPoint64);
    CHECK(SystemDescriptor::make(SystemId::LSV, 0.3).representation() == Representation::Float64);
    CHECK(SystemDescriptor::make(SystemId::Logistic).representation() == Representation::Float64);
    CHECK(SystemDescriptor::make(SystemId::Logistic).density_regime() == DensityRegime::ArcsineBoundary);
    CHECK(SystemDescriptor::make(SystemId::LSV, 0.3).density_regime() == DensityRegime::IntermittentOrigin);

    CHECK_THROWS_WITH_AS(SystemDescriptor::make(SystemId::LSV, 1.2), doctest::Contains("0 ≤ α < 1"),
                         std::invalid_argument);
    CHECK_THROWS_AS(SystemDescriptor::make(SystemId::LSV, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(SystemDescriptor::make(SystemId::LSV, 1.0), std::invalid_argument);

    for (auto id : {SystemId::LSV, SystemId::Doubling, SystemId::Tent, SystemId::Logistic, SystemId::CatMap}) {
        CHECK(parse_system_id(to_string(id)) == id);
    }
    CHECK_THROWS_AS(parse_system_id("henon"), std::invalid_argument);

    const auto tent = SystemDescriptor::make(SystemId::Tent);
    CHECK(tent.is_branch_point({0.5, 0}));
    CHECK_FALSE(tent.is_branch_point({0.3, 0}));
    CHECK(tent.contains({1.0, 0}));
    CHECK_FALSE(tent.contains({1.1, 0}));
}

TEST_CASE("lsv_step") {
    CHECK(lsv_step(0.0, 0.5) == 0.0);
    CHECK(lsv_step(0.5, 0.7) == 1.0);
    CHECK(lsv_step(0.25, 1.0) == 0.375);
    for (double a : {0.0, 0.3, 0.5, 0.9}) CHECK(lsv_step(0.75, a) == 0.5);
    CHECK(lsv_step(1.0, 0.4) == 1.0);

    SUBCASE("branches meet the interval ends at 1/2") {
        for (double a : {0.0, 0.1, 0.5, 0.7, 0.99}) {
            CHECK(lsv_step(0.5, a) == 1.0);
            CHECK(lsv_step(std::nextafter(0.5, 1.0), a) == doctest::Approx(0.0).epsilon(1e-15));
        }
    }
    SUBCASE("left branch increasing on a grid") {
        for (double a : {0.2, 0.5, 0.8}) {
            double prev = -1.0;
            for (int i = 0; i <= 10000; ++i) {
                const double y = lsv_step(0.5 * i / 10000.0, a);
                CHECK(y > prev);
                prev = y;
            }
        }
    }
    SUBCASE("domain") {
        CHECK_THROWS_AS(lsv_step(1.1, 0.5), std::domain_error);
        CHECK_THROWS_AS(lsv_step(-0.01, 0.5), std::domain_error);
        CHECK_NOTHROW(lsv_step(1.0 + 0x1p-52, 0.5));
    }
}

TEST_CASE("logistic_step") {
    CHECK(logistic_step(0.5) == 1.0);
    CHECK(logistic_step(0.75) == 0.75);
    CHECK(logistic_step(0.0) == 0.0);
    CHECK_THROWS_AS(logistic_step(1.5), std::domain_error);

    SUBCASE("folded form agrees with the plain formula") {
        std::mt19937_64 rng(3);
        for (int i = 0; i < 10000; ++i) {
            const double x = unit_interval(rng());
            const auto f = logistic_step(FoldedUnit::from_value(x));
            CHECK(f.near >= 0.0);
            CHECK(f.near <= 0.5);
            CHECK(f.value() == doctest::Approx(logistic_step(x)).epsilon(1e-14));
        }
        CHECK(logistic_step(FoldedUnit::from_value(0.75)).value() == 0.75);
        CHECK(logistic_step(FoldedUnit{0.0, false}).value() == 0.0);
    }
    SUBCASE("no rounding onto the endpoint near the critical point") {
        // 4x(1-x) at x = 1/2 + 1e-9 rounds to 1.0 in plain doubles
        const double x = 0.5 + 1e-9;
        CHECK(logistic_step(x) == 1.0);
        const auto f = logistic_step(FoldedUnit::from_value(x));
        CHECK(f.upper);
        CHECK(f.near > 0.0);
        CHECK(f.near == doctest::Approx(4e-18).epsilon(1e-6));
        CHECK(logistic_step(f).near > 0.0);
    }
}

TEST_CASE("bit reservoir shifts") {
    const std::vector<std::uint8_t> prefix = {1, 0, 1, 1};
    auto r = BitReservoir::with_prefix(prefix, 9);
    CHECK(r.leading_digit() == 1);
    doubling_step(r);
    CHECK(r.leading_digit() == 0);
    doubling_step(r);
    CHECK(r.leading_digit() == 1);
    doubling_step(r);
    CHECK(r.leading_digit() == 1);

    auto q = BitReservoir::dyadic(1, 2);  // 0.25
    doubling_step(q);
    CHECK(q.value() == 0.5);

    SUBCASE("64 shifts expose digits 65..128") {
        std::mt19937_64 rng(17);
        std::vector<std::uint8_t> digits(128);
        for (auto& d : digits) d = static_cast<std::uint8_t>(rng() & 1U);
        auto s = BitReservoir::with_prefix(digits, 5);
        std::uint64_t expect = 0;
        for (int i = 64; i < 128; ++i) expect = (expect << 1) | digits[i];
        for (int i = 0; i < 64; ++i) doubling_step(s);
        CHECK(s.leading64() == expect);
    }
    SUBCASE("at least 128 digits stay buffered") {
        BitReservoir s(1);
        for (int i = 0; i < 1000; ++i) {
            CHECK(s.buffered() >= 128);
            s.shift();
        }
    }
}

TEST_CASE("tent_step") {
    auto a = BitReservoir::dyadic(1, 2);
    tent_step(a);
    CHECK(exact64(a) == (static_cast<unsigned __int128>(1) << 63));

    auto b = BitReservoir::dyadic(3, 2);  // 0.75 -> 2 - 1.5
    tent_step(b);
    CHECK(exact64(b) == (static_cast<unsigned __int128>(1) << 63));
    CHECK(std::abs(b.value() - 0.5) <= 0x1p-64);

    auto z = BitReservoir::dyadic(0, 8);
    tent_step(z);
    CHECK(z.value() == 0.0);
}

TEST_CASE("dyadic orbits agree with rational arithmetic for 60 steps") {
    // x = N / 2^60; doubling N -> 2N mod 2^60, tent N -> 2N or 2^61 - 2N
    std::mt19937_64 rng(2024);
    const std::uint64_t one = std::uint64_t{1} << 60;
    for (int trial = 0; trial < 200; ++trial) {
        const std::uint64_t n0 = rng() >> 4;
        auto dbl = BitReservoir::dyadic(n0, 60);
        auto tnt = BitReservoir::dyadic(n0, 60);
        unsigned __int128 nd = n0;
        unsigned __int128 nt = n0;
        for (int s = 1; s <= 60; ++s) {
            doubling_step(dbl);
            tent_step(tnt);
            nd = (2 * nd) % one;
            nt = nt < one / 2 ? 2 * nt : 2 * static_cast<unsigned __int128>(one) - 2 * nt;
            REQUIRE(exact64(dbl) == nd << 4);
            REQUIRE(exact64(tnt) == nt << 4);
        }
    }
}

TEST_CASE("cat map") {
    CHECK(catmap_step({0, 0}) == FixedPair{0, 0});
    const std::uint64_t half = std::uint64_t{1} << 63;
    CHECK(catmap_step({half, half}) == FixedPair{half, 0});
    CHECK(to_fixed(0.5) == half);
    CHECK(from_fixed(half) == 0.5);
    CHECK(to_fixed(1.0) == 0);

    std::mt19937_64 rng(77);
    for (int i = 0; i < 10000; ++i) {
        const FixedPair s{rng(), rng()};
        REQUIRE(catmap_inverse(catmap_step(s)) == s);
        REQUIRE(catmap_step(catmap_inverse(s)) == s);
    }
}

TEST_CASE("distance") {
    const auto lsv = SystemDescriptor::make(SystemId::LSV, 0.5);
    CHECK(distance(OrbitState{0.9}, {0.1, 0}, lsv) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(distance(OrbitState{0.3}, {0.3, 0}, lsv) == 0x1p-63);

    const auto cat = SystemDescriptor::make(SystemId::CatMap);
    const OrbitState s = FixedPair{to_fixed(0.95), to_fixed(0.5)};
    CHECK(distance(s, {0.05, 0.5}, cat) == doctest::Approx(0.1).epsilon(1e-14));
    const OrbitState diag = FixedPair{to_fixed(0.1), to_fixed(0.9)};
    CHECK(distance(diag, {0.9, 0.1}, cat) == doctest::Approx(std::sqrt(0.08)).epsilon(1e-14));

    const auto dbl = SystemDescriptor::make(SystemId::Doubling);
    CHECK(distance(OrbitState{BitReservoir::dyadic(3, 2)}, {0.25, 0}, dbl) == 0.5);
    CHECK(distance(OrbitState{BitReservoir::dyadic(1, 1)}, {0.5, 0}, dbl) == 0x1p-63);
    // a complemented zero tail is the all-ones tail: 0.0111... = 1/2
    auto r = BitReservoir::dyadic(3, 2);
    tent_step(r);
    CHECK(distance(OrbitState{r}, {0.5, 0}, SystemDescriptor::make(SystemId::Tent)) <= 0x1p-63);

    const auto logi = SystemDescriptor::make(SystemId::Logistic);
    CHECK(distance(OrbitState{FoldedUnit{1e-17, true}}, {1.0, 0}, logi) == 1e-17);
    CHECK(distance(OrbitState{FoldedUnit{0.25, true}}, {0.3, 0}, logi) == doctest::Approx(0.45));
    CHECK(distance(OrbitState{0.9}, {0.1, 0}, logi) == doctest::Approx(0.8));
}

TEST_CASE("initial states and step dispatch") {
    for (auto id : {SystemId::LSV, SystemId::Doubling, SystemId::Tent, SystemId::Logistic, SystemId::CatMap}) {
        const auto sys = SystemDescriptor::make(id, id == SystemId::LSV ? 0.5 : 0.0);
        auto a = initial_state(sys, 11);
        auto b = initial_state(sys, 11);
        for (int i = 0; i < 1000; ++i) {
            step(a, sys);
            step(b, sys);
        }
        CHECK(distance(a, {0.1, 0.2}, sys) == distance(b, {0.1, 0.2}, sys));
        CHECK(distance(a, {0.1, 0.2}, sys) != distance(initial_state(sys, 12), {0.1, 0.2}, sys));
    }
    // plain doubles are accepted for the logistic map
    OrbitState x = 0.75;
    step(x, SystemDescriptor::make(SystemId::Logistic));
    CHECK(std::get<FoldedUnit>(x).value() == 0.75);
}

TEST_CASE("logistic orbit follows the arcsine law") {
    const auto sys = SystemDescriptor::make(SystemId::Logistic);
    auto f = std::get<FoldedUnit>(initial_state(sys, 4242));
    for (int i = 0; i < 10000; ++i) f = logistic_step(f);
    const int bins = 100;
    const int steps = 10'000'000;
    std::vector<double> hist(bins, 0.0);
    for (int i = 0; i < steps; ++i) {
        f = logistic_step(f);
        const int b = std::min(bins - 1, static_cast<int>(f.value() * bins));
        hist[b] += 1.0;
    }
    auto F = [](double x) { return 2.0 / M_PI * std::asin(std::sqrt(x)); };
    double tv = 0.0;
    for (int b = 0; b < bins; ++b) {
        tv += std::abs(hist[b] / steps - (F((b + 1.0) / bins) - F(static_cast<double>(b) / bins)));
    }
    tv *= 0.5;
    CHECK(tv < 0.02);
}

TEST_CASE("LSV mass near the fixed point scales like x^(1-alpha)") {
    const double alpha = 0.5;
    const auto sys = SystemDescriptor::make(SystemId::LSV, alpha);
    double x = std::get<double>(initial_state(sys, 99));
    const std::vector<double> xs = {1e-4, 1e-3, 1e-2};
    std::vector<double> below(xs.size(), 0.0);
    const int steps = 10'000'000;
    for (int i = 0; i < steps; ++i) {
        x = lsv_step(x, alpha);
        for (std::size_t t = 0; t < xs.size(); ++t) below[t] += x < xs[t];
    }
    const double slope = (std::log(below[2]) - std::log(below[0])) / (std::log(xs[2]) - std::log(xs[0]));
    CHECK(slope == doctest::Approx(1.0 - alpha).epsilon(0.2));
    CHECK(std::abs(slope - (1.0 - alpha)) <= 0.1);
}
