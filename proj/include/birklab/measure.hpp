#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "birklab/dynamics.hpp"

namespace birklab {

// ---------------------------------------------------------------------------
// Ball measures

enum class BallRegime { LebesgueLike, ArcsineBoundary, IntermittentOrigin, Empirical };

std::string_view to_string(BallRegime r);

/// Piecewise-linear CDF on [0,1] with nodes at i/bins.
class EmpiricalCdf {
public:
    /// `nodes` holds F(i/bins) for i = 0..bins; must start at 0, end at 1 and never decrease.
    explicit EmpiricalCdf(std::vector<double> nodes);
    static EmpiricalCdf from_histogram(std::span<const std::uint64_t> counts);

    double operator()(double x) const;
    std::size_t bins() const { return nodes_.size() - 1; }
    std::span<const double> nodes() const { return nodes_; }

private:
    std::vector<double> nodes_;
};

/// Orbit statistics of an LSV map used to calibrate ball measures.
struct LsvSample {
    double alpha = 0.0;
    std::uint64_t samples = 0;
    std::vector<std::uint64_t> histogram;  // uniform bins on [0,1]
    std::vector<double> origin_thresholds;  // log-spaced over [1e-4, 1e-2]
    std::vector<std::uint64_t> below;       // #{x < threshold}

    EmpiricalCdf cdf() const { return EmpiricalCdf::from_histogram(histogram); }
    double origin_mass(std::size_t i) const { return static_cast<double>(below[i]) / static_cast<double>(samples); }
};

struct LsvSampleOptions {
    std::uint64_t samples = 10'000'000;
    int burn_in = kLsvBurnIn;
    std::size_t bins = 4096;
    int thresholds_per_decade = 10;
};

LsvSample sample_lsv(double alpha, std::uint64_t seed, const LsvSampleOptions& options = {});

/// mu[0,x] ~ c x^{1-alpha}: c from least squares through the origin against
/// x^{1-alpha}; `slope` is the unconstrained log-log slope over the same range.
struct OriginFit {
    double constant = 0.0;
    double slope = 0.0;
};

OriginFit fit_origin(const LsvSample& sample);

struct BallMeasureModel {
    BallRegime regime = BallRegime::LebesgueLike;
    int dimension = 1;
    double alpha = 0.0;            // density singularity exponent
    double origin_constant = 0.0;  // IntermittentOrigin only
    std::shared_ptr<const EmpiricalCdf> empirical_cdf;

    static BallMeasureModel lebesgue(int dimension);
    static BallMeasureModel arcsine();
    static BallMeasureModel intermittent_origin(double alpha, double constant);
    static BallMeasureModel empirical(EmpiricalCdf cdf);
};

/// Fixed seed for calibration orbits, so a model depends only on (system, p).
inline constexpr std::uint64_t kCalibrationSeed = 0xB1A5'CA11'B4A7'E000ULL;

/// Picks the ball-measure model for balls about p. LSV maps (alpha > 0) are
/// calibrated from a sampled orbit.
BallMeasureModel resolve_ball_model(const SystemDescriptor& system, const Point& p,
                                    const LsvSampleOptions& options = {});

double arcsine_cdf(double x);

/// mu(B(p,r)). Throws std::invalid_argument when r <= 0 or the model lacks
/// the data its regime requires.
double mu_ball(const BallMeasureModel& model, const Point& p, double r);

/// Radius beyond which the ball covers the whole space.
double max_radius(const BallMeasureModel& model);

/// Inverts mu_ball by bisection: |mu_ball(r) - target| <= 1e-12 target.
double radius_for_measure(const BallMeasureModel& model, const Point& p, double target_mu);

// ---------------------------------------------------------------------------
// Growth-exponent predictions

enum class RegimeLabel { GenericBoundedDensity, IndifferentFixedPoint, SingularDensity };

std::string_view to_string(RegimeLabel r);

struct Prediction {
    double exponent = 1.0;
    RegimeLabel regime_label = RegimeLabel::GenericBoundedDensity;
    double k = 1.0;
    int dimension = 1;
    double alpha = 0.0;       // local density singularity exponent at p
    bool integrable = false;  // phi integrable: ergodic theorem, exponent 1
    std::string warning;

    /// Scaling dimension of mu(B(p,r)) ~ r^{D - alpha}.
    double local_dimension() const { return dimension - alpha; }
};

Prediction predicted_exponent(const SystemDescriptor& system, const Point& p, double k);

/// One-line record, e.g. "exponent 1.5 (IndifferentFixedPoint)".
std::string format_prediction(const Prediction& prediction);

// ---------------------------------------------------------------------------
// Shrinking target schedules

enum class ScheduleKind { RadiusPower, MeasureHarmonic, KimNonBC };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

struct ScheduleParams {
    double c = 0.25;
    double beta = 0.0;
    double gamma = 2.0;
};

/// Nested balls B_j = B(center, r_j), j >= 1, evaluated by formula.
///
///   RadiusPower      r_j = c j^{-1/D}
///   MeasureHarmonic  mu_j = min(1, c log^beta j / j), made nonincreasing
///   KimNonBC         B_j = [0, j^{-gamma}) about the LSV fixed point
class TargetSchedule {
public:
    TargetSchedule(ScheduleKind kind, ScheduleParams params, Point center, int dimension, std::uint64_t n_max,
                   BallMeasureModel model);

    ScheduleKind kind() const { return kind_; }
    const ScheduleParams& params() const { return params_; }
    const Point& center() const { return center_; }
    std::uint64_t n_max() const { return n_max_; }
    const BallMeasureModel& model() const { return model_; }

    double radius(std::uint64_t j) const;
    double measure(std::uint64_t j) const;

    /// T^j x in B_j, given d = d(T^j x, center).
    bool contains(std::uint64_t j, double d) const {
        switch (kind_) {
            case ScheduleKind::RadiusPower:
            case ScheduleKind::KimNonBC: return d < radius(j);
            case ScheduleKind::MeasureHarmonic: return mu_ball(model_, center_, d) < measure(j);
        }
        return false;
    }

    /// E_n = sum_{j<=n} mu(B_j) at every n in `ns` (nondecreasing).
    std::vector<double> expected_hits(std::span<const std::uint64_t> ns) const;

private:
    double harmonic_raw(double j) const;

    ScheduleKind kind_;
    ScheduleParams params_;
    Point center_;
    int dimension_;
    std::uint64_t n_max_;
    BallMeasureModel model_;
    double inv_dimension_;
    std::uint64_t harmonic_peak_ = 1;
};

/// Validates parameters against the system and returns the schedule.
/// Rejects KimNonBC unless the system is LSV, the center is 0, and
/// 1 < gamma <= 1/(1-alpha).
TargetSchedule build_schedule(ScheduleKind kind, const ScheduleParams& params, const SystemDescriptor& system,
                              const Point& p, std::uint64_t n_max, BallMeasureModel model);

}  // namespace birklab
