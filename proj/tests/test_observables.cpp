#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "birklab/observables.hpp"

using namespace birklab;

TEST_CASE("values at a distance") {
    const ObservableSpec pow2{ObservableKind::PowerDistance, {0.3, 0}, 2.0};
    CHECK(pow2.at_distance(0.1) == doctest::Approx(100.0).epsilon(1e-15));
    for (double k : {0.5, 1.0, 2.0, 3.0, 4.0, 7.5}) {
        const ObservableSpec s{ObservableKind::PowerDistance, {0.3, 0}, k};
        CHECK(s.at_distance(1.0) == 1.0);
    }
    const ObservableSpec lg{ObservableKind::LogDistance, {0.3, 0}, 1.0};
    CHECK(lg.at_distance(std::exp(-3.0)) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("evaluate goes through the clamped distance") {
    const auto lsv = SystemDescriptor::make(SystemId::LSV, 0.5);
    const ObservableSpec s{ObservableKind::PowerDistance, {0.3, 0}, 2.0};
    CHECK(evaluate(s, OrbitState{0.4}, lsv) == doctest::Approx(100.0).epsilon(1e-12));
    const double at_p = evaluate(s, OrbitState{0.3}, lsv);
    CHECK(std::isfinite(at_p));
    CHECK(at_p == std::pow(0x1p-63, -2.0));

    const auto cat = SystemDescriptor::make(SystemId::CatMap);
    const ObservableSpec c{ObservableKind::PowerDistance, {0.05, 0.5}, 4.0};
    CHECK(evaluate(c, OrbitState{FixedPair{to_fixed(0.95), to_fixed(0.5)}}, cat) ==
          doctest::Approx(1e4).epsilon(1e-12));
}

TEST_CASE("monotone in distance; power is exp(k log)") {
    for (double k : {0.5, 1.0, 2.0, 4.0, 2.7}) {
        const ObservableSpec pw{ObservableKind::PowerDistance, {0.5, 0}, k};
        const ObservableSpec lg{ObservableKind::LogDistance, {0.5, 0}, k};
        double prev_pw = INFINITY;
        double prev_lg = INFINITY;
        for (int i = 0; i <= 2000; ++i) {
            const double d = std::pow(10.0, -18.0 + 18.0 * i / 2000.0);
            const double a = pw.at_distance(d);
            const double b = lg.at_distance(d);
            CHECK(a < prev_pw);
            CHECK(b < prev_lg);
            CHECK(a == doctest::Approx(std::exp(k * b)).epsilon(1e-12));
            prev_pw = a;
            prev_lg = b;
        }
    }
}

TEST_CASE("validation") {
    const auto lsv = SystemDescriptor::make(SystemId::LSV, 0.5);
    CHECK_THROWS_WITH_AS((ObservableSpec{ObservableKind::PowerDistance, {0.3, 0}, 0.0}.validate(lsv)),
                         doctest::Contains("k > 0"), std::invalid_argument);
    CHECK_THROWS_AS((ObservableSpec{ObservableKind::PowerDistance, {0.3, 0}, -1.0}.validate(lsv)),
                    std::invalid_argument);
    CHECK_THROWS_AS((ObservableSpec{ObservableKind::PowerDistance, {1.3, 0}, 1.0}.validate(lsv)),
                    std::invalid_argument);
    CHECK_NOTHROW((ObservableSpec{ObservableKind::PowerDistance, {1.0, 0}, 1.0}.validate(lsv)));
    CHECK(parse_observable_kind("log") == ObservableKind::LogDistance);
    CHECK(parse_observable_kind(to_string(ObservableKind::PowerDistance)) == ObservableKind::PowerDistance);
    CHECK_THROWS_AS(parse_observable_kind("exp"), std::invalid_argument);
}
