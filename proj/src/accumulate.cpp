#include "birklab/accumulate.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>

#include <fmt/format.h>

#include "birklab/summation.hpp"

namespace birklab {

std::vector<std::uint64_t> checkpoint_schedule(std::uint64_t n_max, double ratio) {
    if (!(ratio > 1.0)) throw std::invalid_argument("checkpoint_ratio must exceed 1");
    if (n_max == 0) throw std::invalid_argument("n_max must be positive");
    std::vector<std::uint64_t> out;
    std::uint64_t prev = 0;
    for (int i = 1;; ++i) {
        const double raw = std::round(std::pow(ratio, i));
        if (raw > static_cast<double>(n_max)) break;
        const auto n = std::max(static_cast<std::uint64_t>(raw), prev + 1);
        if (n > n_max) break;
        out.push_back(n);
        prev = n;
    }
    if (out.empty() || out.back() != n_max) out.push_back(n_max);
    return out;
}

double aaronson_ratio(double S, std::uint64_t n, double local_dimension, double k, double eta) {
    const double log_s = std::max(1.0, std::log(S));
    return std::pow(S, local_dimension / k) / std::pow(log_s, 1.0 + eta) / static_cast<double>(n);
}

namespace {

/// The `capacity` largest values seen so far.
class TopTerms {
public:
    explicit TopTerms(std::size_t capacity) : capacity_(capacity) {}

    void offer(double v) {
        if (heap_.size() < capacity_) {
            heap_.push(v);
        } else if (v > heap_.top()) {
            heap_.pop();
            heap_.push(v);
        }
    }

    std::vector<double> sorted() const {
        auto copy = heap_;
        std::vector<double> out;
        out.reserve(copy.size());
        while (!copy.empty()) {
            out.push_back(copy.top());
            copy.pop();
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

private:
    std::size_t capacity_;
    std::priority_queue<double, std::vector<double>, std::greater<>> heap_;
};

double fixed_interval_gap(std::uint64_t x, unsigned __int128 p) {
    const auto xx = static_cast<unsigned __int128>(x);
    const unsigned __int128 gap = xx > p ? xx - p : p - xx;
    return std::max(std::ldexp(static_cast<double>(gap), -64), kDistanceFloor);
}

unsigned __int128 fixed_coordinate(double u) {
    return u == 1.0 ? static_cast<unsigned __int128>(1) << 64 : to_fixed(u);
}

double torus_gap(std::uint64_t a, std::uint64_t b) {
    const std::uint64_t d = a - b;
    return from_fixed(std::min(d, std::uint64_t{0} - d));
}

double sq(double v) { return v * v; }

}  // namespace

Experiment::Experiment(SystemDescriptor system, ObservableSpec observable, TargetSchedule schedule,
                       ExperimentOptions options)
    : system_(system),
      observable_(observable),
      schedule_(std::move(schedule)),
      options_(options),
      prediction_(predicted_exponent(system_, observable_.p, observable_.k)),
      checkpoints_(checkpoint_schedule(options_.n_max, options_.checkpoint_ratio)),
      expected_(schedule_.expected_hits(checkpoints_)) {
    observable_.validate(system_);
    if (options_.n_max < 1000) throw std::invalid_argument("n_max must be at least 1000");
}

template <class Advance, class Distance, class TargetDistance>
void Experiment::accumulate(Advance&& advance, Distance&& dist, TargetDistance&& target_dist, RunResult& out) const {
    const Point& p = observable_.p;
    const Point& target = schedule_.center();
    const bool shared_center = p.x == target.x && p.y == target.y;
    const bool power = observable_.kind == ObservableKind::PowerDistance;

    CompensatedSum S;
    double M = -std::numeric_limits<double>::infinity();
    std::uint64_t hits = 0;
    std::uint64_t last_hit = 0;
    TopTerms top(kTopTerms);
    std::size_t next = 0;

    for (std::uint64_t j = 1; j <= options_.n_max; ++j) {
        advance();
        const double d = dist();
        const double phi = observable_.at_distance(d);
        S.add(phi);
        M = std::max(M, phi);
        top.offer(phi);
        if (schedule_.contains(j, shared_center ? d : target_dist())) {
            ++hits;
            last_hit = j;
        }
        const double s = S.value();
        if (!(s <= kOverflowLimit)) {
            out.overflow = true;
            return;
        }
        if (j == checkpoints_[next]) {
            CheckpointRecord rec;
            rec.n = j;
            rec.S_n = s;
            rec.M_n = M;
            rec.hits = hits;
            rec.E_n = expected_[next];
            rec.last_hit_index = last_hit;
            rec.top_terms = top.sorted();
            rec.aaronson_ratio = power ? aaronson_ratio(s, j, prediction_.local_dimension(), observable_.k,
                                                        options_.eta)
                                       : NAN;
            out.checkpoints.push_back(std::move(rec));
            ++next;
        }
    }
}

RunResult Experiment::run(std::uint64_t seed) const { return run_from(initial_state(system_, seed), seed); }

RunResult Experiment::run_from(OrbitState initial, std::uint64_t seed) const {
    RunResult out;
    out.seed = seed;
    out.system = system_;
    out.observable = observable_;
    out.schedule_kind = schedule_.kind();
    out.schedule_params = schedule_.params();
    out.checkpoints.reserve(checkpoints_.size());

    switch (system_.representation()) {
        case Representation::Float64: {
            const double px = observable_.p.x;
            const double tx = schedule_.center().x;
            if (system_.id() == SystemId::LSV) {
                double x = std::get<double>(initial);
                const double alpha = system_.alpha();
                auto dist = [&] { return std::max(std::abs(x - px), kDistanceFloor); };
                auto target_dist = [&] { return std::max(std::abs(x - tx), kDistanceFloor); };
                accumulate([&] { x = lsv_step(x, alpha); }, dist, target_dist, out);
            } else {
                auto f = std::holds_alternative<double>(initial) ? FoldedUnit::from_value(std::get<double>(initial))
                                                                  : std::get<FoldedUnit>(initial);
                auto dist = [&] { return std::max(f.distance_to(px), kDistanceFloor); };
                auto target_dist = [&] { return std::max(f.distance_to(tx), kDistanceFloor); };
                accumulate([&] { f = logistic_step(f); }, dist, target_dist, out);
            }
            break;
        }
        case Representation::BitReservoir: {
            auto& bits = std::get<BitReservoir>(initial);
            const auto px = fixed_coordinate(observable_.p.x);
            const auto tx = fixed_coordinate(schedule_.center().x);
            auto dist = [&] { return fixed_interval_gap(bits.leading64(), px); };
            auto target_dist = [&] { return fixed_interval_gap(bits.leading64(), tx); };
            if (system_.id() == SystemId::Tent) {
                accumulate([&] { tent_step(bits); }, dist, target_dist, out);
            } else {
                accumulate([&] { doubling_step(bits); }, dist, target_dist, out);
            }
            break;
        }
        case Representation::FixedPoint64: {
            auto s = std::get<FixedPair>(initial);
            const FixedPair pf{to_fixed(observable_.p.x), to_fixed(observable_.p.y)};
            const FixedPair tf{to_fixed(schedule_.center().x), to_fixed(schedule_.center().y)};
            auto gap = [&](const FixedPair& c) {
                return std::max(std::sqrt(sq(torus_gap(s.x, c.x)) + sq(torus_gap(s.y, c.y))), kDistanceFloor);
            };
            accumulate([&] { s = catmap_step(s); }, [&] { return gap(pf); }, [&] { return gap(tf); }, out);
            break;
        }
    }
    finish(out);
    return out;
}

void Experiment::finish(RunResult& out) const {
    const double half = 0.5 + options_.delta;
    std::size_t grown = 0;
    std::size_t counted = 0;
    for (const auto& c : out.checkpoints) {
        out.sbc_ratio_series.push_back(static_cast<double>(c.hits) / c.E_n);
        out.qsbc_residual_series.push_back((static_cast<double>(c.hits) - c.E_n) / std::pow(c.E_n, half));
        if (c.n >= 2) {
            const double e = prediction_.exponent;
            const double bound = e * (std::log(static_cast<double>(c.n)) + std::log(std::log(static_cast<double>(c.n))));
            ++counted;
            if (std::log(c.S_n) >= bound) ++grown;
        }
    }
    if (observable_.kind == ObservableKind::PowerDistance && counted > 0) {
        out.growth_occupation = static_cast<double>(grown) / static_cast<double>(counted);
    }
    if (out.overflow) return;
    try {
        const auto est = estimate_exponent(out.checkpoints);
        out.exponent_estimate = est.slope;
        out.exponent_pointwise = est.pointwise;
    } catch (const std::invalid_argument&) {
        // too few checkpoints for a trailing-decade fit
        const auto& last = out.checkpoints.back();
        out.exponent_pointwise = std::log(last.S_n) / std::log(static_cast<double>(last.n));
    }
}

RunResult run_orbit(const SystemDescriptor& system, const ObservableSpec& observable, const TargetSchedule& schedule,
                    std::uint64_t n_max, std::uint64_t seed, double checkpoint_ratio) {
    ExperimentOptions options;
    options.n_max = n_max;
    options.checkpoint_ratio = checkpoint_ratio;
    return Experiment(system, observable, schedule, options).run(seed);
}

ExponentEstimate estimate_exponent(std::span<const CheckpointRecord> checkpoints) {
    if (checkpoints.empty()) throw std::invalid_argument("estimate_exponent: no checkpoints");
    const auto& last = checkpoints.back();
    const double floor_n = static_cast<double>(last.n) / 10.0;
    double sx = 0.0, sy = 0.0;
    std::size_t m = 0;
    for (const auto& c : checkpoints) {
        if (static_cast<double>(c.n) < floor_n) continue;
        if (!(c.S_n > 0.0)) throw std::invalid_argument("estimate_exponent: S_n must be positive");
        sx += std::log(static_cast<double>(c.n));
        sy += std::log(c.S_n);
        ++m;
    }
    if (m < 4) {
        throw std::invalid_argument(fmt::format("estimate_exponent: {} checkpoints in the trailing decade, need 4", m));
    }
    const double mx = sx / static_cast<double>(m);
    const double my = sy / static_cast<double>(m);
    double sxy = 0.0, sxx = 0.0;
    for (const auto& c : checkpoints) {
        if (static_cast<double>(c.n) < floor_n) continue;
        const double dx = std::log(static_cast<double>(c.n)) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(c.S_n) - my);
    }
    return {sxy / sxx, std::log(last.S_n) / std::log(static_cast<double>(last.n))};
}

double trimmed_sum(const CheckpointRecord& record, std::size_t b) {
    if (b > kTopTerms) throw std::invalid_argument(fmt::format("trimmed_sum: b = {} exceeds b_max = {}", b, kTopTerms));
    CompensatedSum removed;
    const auto take = std::min(b, record.top_terms.size());
    for (std::size_t i = 0; i < take; ++i) removed.add(record.top_terms[i]);
    return record.S_n - removed.value();
}

std::uint64_t escape_time(double alpha, double m, double gamma, double epsilon0) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("escape_time: alpha must lie in (0,1)");
    if (!(m >= 2.0)) throw std::invalid_argument("escape_time: m must be at least 2");
    if (!(gamma >= 1.0)) throw std::invalid_argument("escape_time: gamma must be at least 1");
    if (!(epsilon0 > 0.0 && epsilon0 < 0.5)) throw std::invalid_argument("escape_time: epsilon0 must lie in (0,1/2)");
    const double depth = std::pow(m, -gamma);
    // below 2^-40 the injection point 1/2 + depth/2 and the slow drift lose resolution
    if (depth < 0x1p-40) throw std::invalid_argument("escape_time: m^gamma exceeds 2^40");

    double x = lsv_step(0.5 + 0.5 * depth, alpha);
    std::uint64_t count = 0;
    while (x <= epsilon0) {
        x = lsv_step(x, alpha);
        ++count;
    }
    return count;
}

double mn_fluctuation(std::span<const CheckpointRecord> checkpoints, double scaling_exponent) {
    if (checkpoints.size() < 8) throw std::invalid_argument("mn_fluctuation: need at least 8 checkpoints");
    double hi = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& c : checkpoints) {
        if (c.n < 10'000) continue;
        const double scaled = c.M_n / std::pow(static_cast<double>(c.n), scaling_exponent);
        hi = std::max(hi, scaled);
        lo = std::min(lo, scaled);
    }
    if (!std::isfinite(lo)) throw std::invalid_argument("mn_fluctuation: no checkpoint with n >= 10^4");
    return hi / lo;
}

}  // namespace birklab
