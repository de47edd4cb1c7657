#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "birklab/dynamics.hpp"
#include "birklab/measure.hpp"
#include "birklab/observables.hpp"

namespace birklab {

/// 10^{1/8}: about eight checkpoints per decade.
inline const double kDefaultCheckpointRatio = std::pow(10.0, 0.125);
inline constexpr std::size_t kTopTerms = 64;
inline constexpr double kOverflowLimit = 1e300;

/// Snapshot of one orbit at time n.
struct CheckpointRecord {
    std::uint64_t n = 0;
    double S_n = 0.0;  // sum_{j=1}^n phi(T^j x)
    double M_n = 0.0;  // max_{1<=j<=n} phi(T^j x)
    std::uint64_t hits = 0;
    double E_n = 0.0;
    std::uint64_t last_hit_index = 0;  // 0 until the first hit
    std::vector<double> top_terms;     // largest terms, descending
    double aaronson_ratio = 0.0;       // a(S_n)/n
};

struct ExponentEstimate {
    double slope = 0.0;      // least squares over the trailing decade
    double pointwise = 0.0;  // log S_n / log n at the last checkpoint
};

struct RunResult {
    std::uint64_t seed = 0;
    SystemDescriptor system;
    ObservableSpec observable;
    ScheduleKind schedule_kind = ScheduleKind::RadiusPower;
    ScheduleParams schedule_params;
    std::vector<CheckpointRecord> checkpoints;
    double exponent_estimate = NAN;
    double exponent_pointwise = NAN;
    std::vector<double> sbc_ratio_series;
    std::vector<double> qsbc_residual_series;
    /// Fraction of checkpoints where S_n >= (n log n)^{exponent}.
    double growth_occupation = NAN;
    /// S_n passed kOverflowLimit; checkpoints stop where the run was cut.
    bool overflow = false;
};

struct ExperimentOptions {
    std::uint64_t n_max = 1'000'000;
    double checkpoint_ratio = kDefaultCheckpointRatio;
    double delta = 0.1;  // QSBC residual exponent 1/2 + delta
    double eta = 0.1;    // a(x) = x^{D/k} / log(x)^{1+eta}
};

/// n_i = max(round(ratio^i), n_{i-1} + 1) for i >= 1 while n_i <= n_max,
/// followed by n_max itself when it is not on the grid.
std::vector<std::uint64_t> checkpoint_schedule(std::uint64_t n_max, double ratio);

/// a(S)/n with a(x) = x^{dim/k} / max(1, log x)^{1+eta}.
double aaronson_ratio(double S, std::uint64_t n, double local_dimension, double k, double eta);

/// One (system, observable, schedule) configuration. Expected hit counts at
/// the checkpoints are computed once here and shared by every orbit.
class Experiment {
public:
    Experiment(SystemDescriptor system, ObservableSpec observable, TargetSchedule schedule,
               ExperimentOptions options);

    /// Orbit started from the invariant measure (burn-in for LSV).
    RunResult run(std::uint64_t seed) const;
    /// Orbit started from an explicit state; `seed` is only recorded.
    RunResult run_from(OrbitState initial, std::uint64_t seed) const;

    const SystemDescriptor& system() const { return system_; }
    const ObservableSpec& observable() const { return observable_; }
    const TargetSchedule& schedule() const { return schedule_; }
    const ExperimentOptions& options() const { return options_; }
    const Prediction& prediction() const { return prediction_; }
    std::span<const std::uint64_t> checkpoints() const { return checkpoints_; }
    std::span<const double> expected_hits() const { return expected_; }

private:
    template <class Advance, class Distance, class TargetDistance>
    void accumulate(Advance&& advance, Distance&& dist, TargetDistance&& target_dist, RunResult& out) const;
    void finish(RunResult& out) const;

    SystemDescriptor system_;
    ObservableSpec observable_;
    TargetSchedule schedule_;
    ExperimentOptions options_;
    Prediction prediction_;
    std::vector<std::uint64_t> checkpoints_;
    std::vector<double> expected_;
};

/// Convenience wrapper building a one-off Experiment.
RunResult run_orbit(const SystemDescriptor& system, const ObservableSpec& observable,
                    const TargetSchedule& schedule, std::uint64_t n_max, std::uint64_t seed,
                    double checkpoint_ratio = kDefaultCheckpointRatio);

/// Throws std::invalid_argument with fewer than 4 checkpoints in the window
/// n >= n_final / 10.
ExponentEstimate estimate_exponent(std::span<const CheckpointRecord> checkpoints);

/// S_n minus its b largest terms; b must not exceed kTopTerms.
double trimmed_sum(const CheckpointRecord& record, std::size_t b);

/// Iterates needed by an LSV orbit injected at m^{-gamma} to leave [0, epsilon0].
std::uint64_t escape_time(double alpha, double m, double gamma, double epsilon0);

/// max/min of M_n / n^s over checkpoints with n >= 10^4 (needs >= 8 checkpoints).
double mn_fluctuation(std::span<const CheckpointRecord> checkpoints, double scaling_exponent);

}  // namespace birklab
