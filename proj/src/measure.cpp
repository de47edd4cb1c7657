#include "birklab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "birklab/summation.hpp"

namespace birklab {

std::string_view to_string(BallRegime r) {
    switch (r) {
        case BallRegime::LebesgueLike: return "LebesgueLike";
        case BallRegime::ArcsineBoundary: return "ArcsineBoundary";
        case BallRegime::IntermittentOrigin: return "IntermittentOrigin";
        case BallRegime::Empirical: return "Empirical";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// EmpiricalCdf

EmpiricalCdf::EmpiricalCdf(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw std::invalid_argument("EmpiricalCdf: need at least one bin");
    if (nodes_.front() != 0.0 || nodes_.back() != 1.0) {
        throw std::invalid_argument("EmpiricalCdf: nodes must run from 0 to 1");
    }
    if (!std::is_sorted(nodes_.begin(), nodes_.end())) throw std::invalid_argument("EmpiricalCdf: decreasing nodes");
}

EmpiricalCdf EmpiricalCdf::from_histogram(std::span<const std::uint64_t> counts) {
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) throw std::invalid_argument("EmpiricalCdf: empty histogram");
    std::vector<double> nodes(counts.size() + 1, 0.0);
    std::uint64_t running = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        running += counts[i];
        nodes[i + 1] = static_cast<double>(running) / static_cast<double>(total);
    }
    nodes.back() = 1.0;
    return EmpiricalCdf(std::move(nodes));
}

double EmpiricalCdf::operator()(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double scaled = x * static_cast<double>(bins());
    const auto i = std::min(static_cast<std::size_t>(scaled), bins() - 1);
    const double frac = scaled - static_cast<double>(i);
    return nodes_[i] + frac * (nodes_[i + 1] - nodes_[i]);
}

// ---------------------------------------------------------------------------
// LSV calibration

LsvSample sample_lsv(double alpha, std::uint64_t seed, const LsvSampleOptions& options) {
    (void)SystemDescriptor::make(SystemId::LSV, alpha);  // validates alpha
    if (options.bins == 0 || options.samples == 0) throw std::invalid_argument("sample_lsv: empty sample");

    LsvSample out;
    out.alpha = alpha;
    out.samples = options.samples;
    out.histogram.assign(options.bins, 0);

    const int steps = 2 * options.thresholds_per_decade;
    for (int i = 0; i <= steps; ++i) {
        out.origin_thresholds.push_back(1e-4 * std::pow(10.0, static_cast<double>(i) / options.thresholds_per_decade));
    }
    std::vector<std::uint64_t> bucket(out.origin_thresholds.size(), 0);
    const double top = out.origin_thresholds.back();

    std::mt19937_64 rng(seed);
    double x = unit_interval(rng());
    for (int i = 0; i < options.burn_in; ++i) x = lsv_step(x, alpha);

    const auto bins = static_cast<double>(options.bins);
    for (std::uint64_t n = 0; n < options.samples; ++n) {
        x = lsv_step(x, alpha);
        const auto b = std::min(static_cast<std::size_t>(x * bins), options.bins - 1);
        ++out.histogram[b];
        if (x < top) {
            const auto it = std::upper_bound(out.origin_thresholds.begin(), out.origin_thresholds.end(), x);
            ++bucket[static_cast<std::size_t>(it - out.origin_thresholds.begin())];
        }
    }
    out.below.resize(bucket.size());
    std::uint64_t running = 0;
    for (std::size_t i = 0; i < bucket.size(); ++i) {
        running += bucket[i];
        out.below[i] = running;
    }
    return out;
}

OriginFit fit_origin(const LsvSample& sample) {
    const double e = 1.0 - sample.alpha;
    double num = 0.0;
    double den = 0.0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (std::size_t i = 0; i < sample.origin_thresholds.size(); ++i) {
        const double t = sample.origin_thresholds[i];
        const double mass = sample.origin_mass(i);
        const double basis = std::pow(t, e);
        num += mass * basis;
        den += basis * basis;
        if (mass > 0.0) {
            const double lx = std::log(t);
            const double ly = std::log(mass);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++m;
        }
    }
    OriginFit fit;
    fit.constant = num / den;
    if (m >= 2) fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return fit;
}

// ---------------------------------------------------------------------------
// Models

BallMeasureModel BallMeasureModel::lebesgue(int dimension) {
    if (dimension != 1 && dimension != 2) throw std::invalid_argument("lebesgue: dimension must be 1 or 2");
    BallMeasureModel m;
    m.regime = BallRegime::LebesgueLike;
    m.dimension = dimension;
    return m;
}

BallMeasureModel BallMeasureModel::arcsine() {
    BallMeasureModel m;
    m.regime = BallRegime::ArcsineBoundary;
    m.alpha = 0.5;
    return m;
}

BallMeasureModel BallMeasureModel::intermittent_origin(double alpha, double constant) {
    if (!(constant > 0.0)) throw std::invalid_argument("intermittent_origin: constant must be positive");
    BallMeasureModel m;
    m.regime = BallRegime::IntermittentOrigin;
    m.alpha = alpha;
    m.origin_constant = constant;
    return m;
}

BallMeasureModel BallMeasureModel::empirical(EmpiricalCdf cdf) {
    BallMeasureModel m;
    m.regime = BallRegime::Empirical;
    m.empirical_cdf = std::make_shared<const EmpiricalCdf>(std::move(cdf));
    return m;
}

BallMeasureModel resolve_ball_model(const SystemDescriptor& system, const Point& p, const LsvSampleOptions& options) {
    switch (system.id()) {
        case SystemId::Doubling:
        case SystemId::Tent: return BallMeasureModel::lebesgue(1);
        case SystemId::CatMap: return BallMeasureModel::lebesgue(2);
        case SystemId::Logistic: return BallMeasureModel::arcsine();
        case SystemId::LSV: {
            if (system.alpha() == 0.0) return BallMeasureModel::lebesgue(1);
            const auto sample = sample_lsv(system.alpha(), kCalibrationSeed, options);
            if (p.x == 0.0) return BallMeasureModel::intermittent_origin(system.alpha(), fit_origin(sample).constant);
            return BallMeasureModel::empirical(sample.cdf());
        }
    }
    throw std::logic_error("resolve_ball_model: unhandled system");
}

double arcsine_cdf(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return 2.0 / std::numbers::pi * std::asin(std::sqrt(x));
}

namespace {

// F(b) - F(a) for the arcsine law, using the upper tail near 1 so that
// balls about p = 1 keep full relative precision.
double arcsine_mass(double a, double b) {
    if (a >= 0.5) {
        auto tail = [](double u) { return 2.0 / std::numbers::pi * std::asin(std::sqrt(std::max(0.0, 1.0 - u))); };
        return tail(a) - tail(b);
    }
    return arcsine_cdf(b) - arcsine_cdf(a);
}

double torus_disk_area(double r) {
    constexpr double pi = std::numbers::pi;
    if (r <= 0.5) return pi * r * r;
    if (r >= std::numbers::sqrt2 / 2.0) return 1.0;
    const double segment = r * r * std::acos(0.5 / r) - 0.5 * std::sqrt(r * r - 0.25);
    return std::min(1.0, pi * r * r - 4.0 * segment);
}

}  // namespace

double mu_ball(const BallMeasureModel& model, const Point& p, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("mu_ball: radius must be positive");
    const double lo = std::max(p.x - r, 0.0);
    const double hi = std::min(p.x + r, 1.0);
    switch (model.regime) {
        case BallRegime::LebesgueLike:
            if (model.dimension == 2) return torus_disk_area(r);
            return std::max(0.0, hi - lo);
        case BallRegime::ArcsineBoundary: return std::clamp(arcsine_mass(lo, hi), 0.0, 1.0);
        case BallRegime::IntermittentOrigin:
            if (p.x != 0.0) throw std::invalid_argument("mu_ball: IntermittentOrigin model only covers p = 0");
            return std::min(1.0, model.origin_constant * std::pow(r, 1.0 - model.alpha));
        case BallRegime::Empirical: {
            if (!model.empirical_cdf) throw std::invalid_argument("mu_ball: Empirical model without a CDF");
            const auto& cdf = *model.empirical_cdf;
            return std::clamp(cdf(hi) - cdf(lo), 0.0, 1.0);
        }
    }
    return 0.0;
}

double max_radius(const BallMeasureModel& model) {
    return model.regime == BallRegime::LebesgueLike && model.dimension == 2 ? std::numbers::sqrt2 / 2.0 : 1.0;
}

double radius_for_measure(const BallMeasureModel& model, const Point& p, double target_mu) {
    if (!(target_mu > 0.0 && target_mu <= 1.0)) throw std::invalid_argument("radius_for_measure: target outside (0,1]");
    double hi = max_radius(model);
    const double top = mu_ball(model, p, hi);
    if (target_mu > top * (1.0 + 1e-12)) {
        throw std::invalid_argument(fmt::format("radius_for_measure: target {} exceeds the maximal ball measure {}",
                                                target_mu, top));
    }
    double lo = 0.0;
    double mid = hi;
    for (int it = 0; it < 400; ++it) {
        mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double m = mu_ball(model, p, mid);
        if (std::abs(m - target_mu) <= 1e-12 * target_mu) return mid;
        (m < target_mu ? lo : hi) = mid;
    }
    return hi;
}

// ---------------------------------------------------------------------------
// Predictions

std::string_view to_string(RegimeLabel r) {
    switch (r) {
        case RegimeLabel::GenericBoundedDensity: return "GenericBoundedDensity";
        case RegimeLabel::IndifferentFixedPoint: return "IndifferentFixedPoint";
        case RegimeLabel::SingularDensity: return "SingularDensity";
    }
    return "?";
}

Prediction predicted_exponent(const SystemDescriptor& system, const Point& p, double k) {
    if (!(k > 0.0)) throw std::invalid_argument("predicted_exponent: k must be positive");
    if (!system.contains(p)) throw std::invalid_argument("predicted_exponent: p outside phase space");

    Prediction out;
    out.k = k;
    out.dimension = system.dimension();
    const double d = out.dimension;

    if (system.id() == SystemId::LSV && p.x == 0.0) {
        out.regime_label = RegimeLabel::IndifferentFixedPoint;
        out.alpha = system.alpha();
        out.exponent = k + out.alpha;
    } else if (system.id() == SystemId::Logistic && (p.x == 0.0 || p.x == 1.0)) {
        out.regime_label = RegimeLabel::SingularDensity;
        out.alpha = 0.5;
        out.exponent = k / (d - out.alpha);
    } else {
        out.regime_label = RegimeLabel::GenericBoundedDensity;
        out.exponent = k / d;
    }

    if (k < out.local_dimension()) {
        out.integrable = true;
        out.exponent = 1.0;
        out.warning = fmt::format("k = {} < {} makes phi integrable; the ergodic theorem gives exponent 1", k,
                                  out.local_dimension());
    }
    return out;
}

std::string format_prediction(const Prediction& prediction) {
    return fmt::format("exponent {} ({})", prediction.exponent, to_string(prediction.regime_label));
}

// ---------------------------------------------------------------------------
// Schedules

std::string_view to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::RadiusPower: return "radius_power";
        case ScheduleKind::MeasureHarmonic: return "measure_harmonic";
        case ScheduleKind::KimNonBC: return "kim";
    }
    return "?";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
    for (auto k : {ScheduleKind::RadiusPower, ScheduleKind::MeasureHarmonic, ScheduleKind::KimNonBC}) {
        if (name == to_string(k)) return k;
    }
    throw std::invalid_argument("unknown schedule '" + std::string(name) +
                                "' (expected radius_power, measure_harmonic or kim)");
}

TargetSchedule::TargetSchedule(ScheduleKind kind, ScheduleParams params, Point center, int dimension,
                               std::uint64_t n_max, BallMeasureModel model)
    : kind_(kind),
      params_(params),
      center_(center),
      dimension_(dimension),
      n_max_(n_max),
      model_(std::move(model)),
      inv_dimension_(1.0 / dimension) {
    if (kind_ == ScheduleKind::MeasureHarmonic) {
        // log^beta j / j increases up to j = e^beta; hold the peak value before it
        harmonic_peak_ = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(std::exp(params_.beta))));
    }
}

double TargetSchedule::harmonic_raw(double j) const {
    if (params_.beta == 0.0) return params_.c / j;
    return params_.c * std::pow(std::log(j), params_.beta) / j;
}

double TargetSchedule::radius(std::uint64_t j) const {
    const auto jj = static_cast<double>(j);
    switch (kind_) {
        case ScheduleKind::RadiusPower:
            if (dimension_ == 1) return params_.c / jj;
            return params_.c * std::pow(jj, -inv_dimension_);
        case ScheduleKind::KimNonBC:
            if (params_.gamma == 2.0) return 1.0 / (jj * jj);
            return std::pow(jj, -params_.gamma);
        case ScheduleKind::MeasureHarmonic: return radius_for_measure(model_, center_, measure(j));
    }
    return 0.0;
}

double TargetSchedule::measure(std::uint64_t j) const {
    if (kind_ == ScheduleKind::MeasureHarmonic) {
        double v;
        if (j >= harmonic_peak_) {
            v = harmonic_raw(static_cast<double>(j));
        } else {
            const auto left = std::max<std::uint64_t>(j, harmonic_peak_ - 1);
            v = std::max(harmonic_raw(static_cast<double>(left)), harmonic_raw(static_cast<double>(harmonic_peak_)));
        }
        return std::min(1.0, v);
    }
    return mu_ball(model_, center_, radius(j));
}

std::vector<double> TargetSchedule::expected_hits(std::span<const std::uint64_t> ns) const {
    std::vector<double> out;
    out.reserve(ns.size());
    CompensatedSum total;
    std::uint64_t j = 0;
    for (const auto n : ns) {
        if (n < j) throw std::invalid_argument("expected_hits: checkpoints must be nondecreasing");
        while (j < n) total.add(measure(++j));
        out.push_back(total.value());
    }
    return out;
}

TargetSchedule build_schedule(ScheduleKind kind, const ScheduleParams& params, const SystemDescriptor& system,
                              const Point& p, std::uint64_t n_max, BallMeasureModel model) {
    if (!system.contains(p)) throw std::invalid_argument("schedule center outside phase space");
    switch (kind) {
        case ScheduleKind::RadiusPower:
            if (!(params.c > 0.0)) throw std::invalid_argument("schedule_c must be positive");
            break;
        case ScheduleKind::MeasureHarmonic:
            if (!(params.c > 0.0)) throw std::invalid_argument("schedule_c must be positive");
            if (!(params.beta >= 0.0)) throw std::invalid_argument("schedule_beta must be nonnegative");
            break;
        case ScheduleKind::KimNonBC: {
            if (system.id() != SystemId::LSV || system.alpha() == 0.0) {
                throw std::invalid_argument("kim schedule needs an LSV map with alpha > 0");
            }
            if (p.x != 0.0) throw std::invalid_argument("kim schedule targets [0, j^-gamma): p must be 0");
            const double upper = 1.0 / (1.0 - system.alpha());
            if (!(params.gamma > 1.0 && params.gamma <= upper)) {
                throw std::invalid_argument(fmt::format("schedule_gamma = {} violates 1 < γ ≤ 1/(1−α) = {}",
                                                        params.gamma, upper));
            }
            break;
        }
    }
    return TargetSchedule(kind, params, p, system.dimension(), n_max, std::move(model));
}

}  // namespace birklab
