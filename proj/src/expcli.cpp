#include "birklab/expcli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

namespace birklab {

namespace {

std::string error_text(const std::string& origin, int line, const std::string& message) {
    if (line > 0) return fmt::format("{}:{}: {}", origin, line, message);
    return fmt::format("{}: {}", origin, message);
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

double parse_real(std::string_view text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw std::invalid_argument(fmt::format("'{}' is not a finite number", text));
    }
    return v;
}

// Accepts 10000000 as well as 1e7.
std::uint64_t parse_count(std::string_view text) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec == std::errc() && ptr == end) return v;
    const double d = parse_real(text);
    if (d < 0.0 || d > 0x1p53 || d != std::floor(d)) {
        throw std::invalid_argument(fmt::format("'{}' is not a nonnegative integer", text));
    }
    return static_cast<std::uint64_t>(d);
}

std::vector<double> parse_reals(std::string_view text) {
    std::vector<double> out;
    for (const auto& part : split(text, ',')) out.push_back(parse_real(part));
    return out;
}

Point parse_point(std::string_view text) {
    const auto v = parse_reals(text);
    if (v.empty() || v.size() > 2) throw std::invalid_argument(fmt::format("'{}' is not x or x,y", text));
    return {v[0], v.size() == 2 ? v[1] : 0.0};
}

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

[[noreturn]] void fail_at(const ExperimentConfig& config, const std::string& key, const std::string& message) {
    const auto it = config.lines.find(key);
    if (it == config.lines.end()) throw ConfigError(config.origin, 0, message);
    if (it->second == 0) throw ConfigError("--" + key, 0, message);
    throw ConfigError(config.origin, it->second, message);
}

// Key that an error message from a lower layer refers to.
std::string blame(const std::string& message, const std::string& fallback) {
    for (const auto& key : config_keys()) {
        if (message.rfind(key + " ", 0) == 0) return key;
    }
    return fallback;
}

double log_ratio(const CheckpointRecord& c) {
    if (c.n < 2 || !(c.S_n > 0.0)) return NAN;
    return std::log(c.S_n) / std::log(static_cast<double>(c.n));
}

nlohmann::ordered_json quantile_record(const std::vector<double>& values) {
    nlohmann::ordered_json j;
    j["count"] = values.size();
    for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        j[fmt::format("q{:02.0f}", q * 100)] = values.empty() ? NAN : quantile(values, q);
    }
    return j;
}

std::vector<const RunResult*> completed_runs(const std::vector<RunResult>& runs) {
    std::vector<const RunResult*> done;
    for (const auto& r : runs) {
        if (!r.overflow) done.push_back(&r);
    }
    return done;
}

double predicted_value(const ExperimentConfig& config, const Experiment& experiment) {
    // -log d is integrable for every system here: ergodic growth.
    return config.observable == ObservableKind::LogDistance ? 1.0 : experiment.prediction().exponent;
}

}  // namespace

ConfigError::ConfigError(const std::string& origin, int line, const std::string& message)
    : std::runtime_error(error_text(origin, line, message)), line_(line) {}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "system",         "alpha",      "observable", "p",           "k",
        "schedule",       "schedule_c", "schedule_beta", "schedule_gamma", "n_max",
        "ensemble_size",  "master_seed", "checkpoint_ratio", "delta", "eta",
        "estimator",      "tolerance",  "csv_path",   "summary_path"};
    return keys;
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& raw, int line) {
    const std::string value(trim(raw));
    const std::string origin = line > 0 ? config.origin : "--" + key;
    try {
        if (key == "system") {
            config.system = parse_system_id(value);
        } else if (key == "alpha") {
            config.alpha = parse_real(value);
        } else if (key == "observable") {
            config.observable = parse_observable_kind(value);
        } else if (key == "p") {
            config.p = parse_point(value);
        } else if (key == "k") {
            config.k = parse_real(value);
        } else if (key == "schedule") {
            config.schedule = parse_schedule_kind(value);
        } else if (key == "schedule_c") {
            config.schedule_params.c = parse_real(value);
        } else if (key == "schedule_beta") {
            config.schedule_params.beta = parse_real(value);
        } else if (key == "schedule_gamma") {
            config.schedule_params.gamma = parse_real(value);
        } else if (key == "n_max") {
            config.n_max = parse_count(value);
        } else if (key == "ensemble_size") {
            config.ensemble_size = parse_count(value);
        } else if (key == "master_seed") {
            config.master_seed = parse_count(value);
        } else if (key == "checkpoint_ratio") {
            config.checkpoint_ratio = parse_real(value);
        } else if (key == "delta") {
            config.delta = parse_real(value);
        } else if (key == "eta") {
            config.eta = parse_real(value);
        } else if (key == "estimator") {
            if (value == "slope") {
                config.estimator = Estimator::Slope;
            } else if (value == "pointwise") {
                config.estimator = Estimator::Pointwise;
            } else {
                throw std::invalid_argument("expected slope or pointwise");
            }
        } else if (key == "tolerance") {
            config.tolerance = parse_real(value);
        } else if (key == "csv_path") {
            config.csv_path = value;
        } else if (key == "summary_path") {
            config.summary_path = value;
        } else {
            throw ConfigError(origin, line, fmt::format("unknown key '{}'", key));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(origin, line, fmt::format("{}: {}", key, e.what()));
    }
    config.lines[key] = line;
}

ExperimentConfig parse_config(std::string_view text, const std::string& origin) {
    ExperimentConfig config;
    config.origin = origin;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        auto line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(origin, line_no, "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw ConfigError(origin, line_no, "missing key before '='");
        if (config.lines.count(key)) {
            throw ConfigError(origin, line_no, fmt::format("'{}' already set on line {}", key, config.lines[key]));
        }
        apply_setting(config, key, std::string(line.substr(eq + 1)), line_no);
    }
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot open config file");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text, path);
}

void validate(const ExperimentConfig& config) {
    if (!config.master_seed) fail_at(config, "master_seed", "master_seed is mandatory");
    SystemDescriptor system;
    try {
        system = SystemDescriptor::make(config.system, config.alpha);
    } catch (const std::invalid_argument& e) {
        fail_at(config, "alpha", e.what());
    }
    if (config.system != SystemId::LSV && config.alpha != 0.0) {
        fail_at(config, "alpha", "alpha only applies to system = lsv");
    }
    const ObservableSpec observable{config.observable, config.p, config.k};
    try {
        observable.validate(system);
    } catch (const std::invalid_argument& e) {
        fail_at(config, blame(e.what(), "p"), e.what());
    }
    if (config.n_max < 1000) fail_at(config, "n_max", fmt::format("n_max = {} violates n_max ≥ 1000", config.n_max));
    if (config.ensemble_size < 1) fail_at(config, "ensemble_size", "ensemble_size must be at least 1");
    if (!(config.checkpoint_ratio > 1.0)) fail_at(config, "checkpoint_ratio", "checkpoint_ratio must exceed 1");
    if (!(config.delta >= 0.0)) fail_at(config, "delta", "delta must be nonnegative");
    if (!(config.eta > 0.0)) fail_at(config, "eta", "eta must be positive");
    if (!(config.tolerance > 0.0)) fail_at(config, "tolerance", "tolerance must be positive");
    try {
        // the ball model plays no part in parameter checks
        (void)build_schedule(config.schedule, config.schedule_params, system, config.p, config.n_max,
                             BallMeasureModel::lebesgue(system.dimension()));
    } catch (const std::invalid_argument& e) {
        fail_at(config, blame(e.what(), "schedule"), e.what());
    }
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& config) {
    nlohmann::ordered_json j;
    j["system"] = to_string(config.system);
    j["alpha"] = config.alpha;
    j["observable"] = to_string(config.observable);
    j["p"] = SystemDescriptor::make(config.system, config.alpha).dimension() == 2
                 ? nlohmann::ordered_json::array({config.p.x, config.p.y})
                 : nlohmann::ordered_json::array({config.p.x});
    j["k"] = config.k;
    j["schedule"] = to_string(config.schedule);
    j["schedule_c"] = config.schedule_params.c;
    j["schedule_beta"] = config.schedule_params.beta;
    j["schedule_gamma"] = config.schedule_params.gamma;
    j["n_max"] = config.n_max;
    j["ensemble_size"] = config.ensemble_size;
    j["master_seed"] = config.master_seed.value_or(0);
    j["checkpoint_ratio"] = config.checkpoint_ratio;
    j["delta"] = config.delta;
    j["eta"] = config.eta;
    j["estimator"] = config.estimator == Estimator::Slope ? "slope" : "pointwise";
    j["tolerance"] = config.tolerance;
    j["csv_path"] = config.csv_path;
    j["summary_path"] = config.summary_path;
    return j;
}

std::uint64_t orbit_seed(std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t z = master_seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

unsigned default_workers() {
    if (const char* env = std::getenv("BIRKLAB_WORKERS")) {
        unsigned v = 0;
        const std::string_view s(env);
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc() && ptr == s.data() + s.size() && v > 0) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

Experiment make_experiment(const ExperimentConfig& config) {
    const auto system = SystemDescriptor::make(config.system, config.alpha);
    const ObservableSpec observable{config.observable, config.p, config.k};
    auto schedule = build_schedule(config.schedule, config.schedule_params, system, config.p, config.n_max,
                                   resolve_ball_model(system, config.p));
    ExperimentOptions options;
    options.n_max = config.n_max;
    options.checkpoint_ratio = config.checkpoint_ratio;
    options.delta = config.delta;
    options.eta = config.eta;
    return Experiment(system, observable, std::move(schedule), options);
}

std::vector<RunResult> run_ensemble(const Experiment& experiment, std::uint64_t master_seed, std::uint64_t orbits,
                                    unsigned workers) {
    std::vector<RunResult> results(orbits);
    std::vector<std::exception_ptr> errors(orbits);
    std::atomic<std::uint64_t> next{0};
    auto work = [&] {
        for (auto i = next++; i < orbits; i = next++) {
            try {
                results[i] = experiment.run(orbit_seed(master_seed, i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n = static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, workers), orbits));
    if (n <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n; ++t) pool.emplace_back(work);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

void write_csv(std::ostream& out, const std::vector<RunResult>& runs) {
    out << kCsvHeader << '\n';
    fmt::memory_buffer buf;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        for (std::size_t c = 0; c < r.checkpoints.size(); ++c) {
            const auto& rec = r.checkpoints[c];
            fmt::format_to(std::back_inserter(buf), "{},{},{},{},{},{},{},{},{},{},{},{},{}\n", i, r.seed, rec.n,
                           format_real(rec.S_n), format_real(log_ratio(rec)), format_real(rec.M_n), rec.hits,
                           format_real(rec.E_n), format_real(r.sbc_ratio_series[c]),
                           format_real(r.qsbc_residual_series[c]), format_real(trimmed_sum(rec, 8)),
                           format_real(rec.aaronson_ratio), rec.last_hit_index);
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        buf.clear();
    }
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

nlohmann::ordered_json summarize(const ExperimentConfig& config, const Experiment& experiment,
                                 const std::vector<RunResult>& runs) {
    using json = nlohmann::ordered_json;
    const auto done = completed_runs(runs);
    const auto ns = experiment.checkpoints();
    const double predicted = predicted_value(config, experiment);

    json summary;
    const auto& pred = experiment.prediction();
    summary["prediction"] = {{"exponent", predicted},
                             {"regime", config.observable == ObservableKind::LogDistance ? "Integrable"
                                                                                         : to_string(pred.regime_label)},
                             {"text", format_prediction(pred)},
                             {"warning", pred.warning}};

    std::vector<std::uint64_t> overflowed;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i].overflow) overflowed.push_back(i);
    }
    summary["orbits"] = {{"requested", runs.size()},
                         {"completed", done.size()},
                         {"overflowed", overflowed.size()},
                         {"overflowed_run_ids", overflowed}};

    json rows = json::array();
    for (std::size_t c = 0; c < ns.size(); ++c) {
        std::vector<double> v;
        for (const auto* r : done) {
            const double x = log_ratio(r->checkpoints[c]);
            if (std::isfinite(x)) v.push_back(x);
        }
        json row;
        row["n"] = ns[c];
        row["count"] = v.size();
        if (v.empty()) {
            row["median"] = nullptr;
            row["q25"] = nullptr;
            row["q75"] = nullptr;
            row["iqr"] = nullptr;
        } else {
            const double q25 = quantile(v, 0.25);
            const double q75 = quantile(v, 0.75);
            row["median"] = quantile(v, 0.5);
            row["q25"] = q25;
            row["q75"] = q75;
            row["iqr"] = q75 - q25;
        }
        rows.push_back(row);
    }
    summary["log_Sn_over_log_n"] = rows;

    std::vector<double> slopes, pointwise;
    for (const auto* r : done) {
        if (std::isfinite(r->exponent_estimate)) slopes.push_back(r->exponent_estimate);
        if (std::isfinite(r->exponent_pointwise)) pointwise.push_back(r->exponent_pointwise);
    }
    const auto& chosen = config.estimator == Estimator::Slope ? slopes : pointwise;
    const double median = chosen.empty() ? NAN : quantile(chosen, 0.5);
    summary["exponent"] = {{"estimator", config.estimator == Estimator::Slope ? "slope" : "pointwise"},
                           {"median", median},
                           {"median_slope", slopes.empty() ? NAN : quantile(slopes, 0.5)},
                           {"median_pointwise", pointwise.empty() ? NAN : quantile(pointwise, 0.5)},
                           {"predicted", predicted},
                           {"tolerance", config.tolerance},
                           {"pass", std::isfinite(median) && std::abs(median - predicted) <= config.tolerance}};

    std::vector<double> sbc, qsbc, qsbc_max, aaronson, occupation;
    for (const auto* r : done) {
        sbc.push_back(r->sbc_ratio_series.back());
        qsbc.push_back(r->qsbc_residual_series.back());
        double worst = NAN;
        double a_start = NAN;
        for (std::size_t c = 0; c < r->checkpoints.size(); ++c) {
            if (r->checkpoints[c].n < 10'000) continue;
            if (std::isnan(a_start)) a_start = r->checkpoints[c].aaronson_ratio;
            const double q = std::abs(r->qsbc_residual_series[c]);
            worst = std::isnan(worst) ? q : std::max(worst, q);
        }
        if (std::isfinite(worst)) qsbc_max.push_back(worst);
        if (std::isfinite(a_start) && a_start > 0.0) aaronson.push_back(r->checkpoints.back().aaronson_ratio / a_start);
        if (std::isfinite(r->growth_occupation)) occupation.push_back(r->growth_occupation);
    }
    summary["sbc_ratio_final"] = quantile_record(sbc);
    summary["qsbc_residual_final"] = quantile_record(qsbc);
    summary["qsbc_max_abs_residual"] = quantile_record(qsbc_max);
    summary["aaronson_final_over_1e4"] = quantile_record(aaronson);
    summary["growth_occupation"] = quantile_record(occupation);
    summary["config"] = config_to_json(config);
    return summary;
}

namespace {

struct KeyFlags {
    std::map<std::string, std::string> values;
    std::string config_path;

    void attach(CLI::App& cmd) {
        cmd.add_option("--config", config_path, "Config file (key = value lines)");
        for (const auto& key : config_keys()) cmd.add_option("--" + key, values[key], "Overrides config key " + key);
    }

    ExperimentConfig load(const CLI::App& cmd) const {
        ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        for (const auto& key : config_keys()) {
            if (cmd.count("--" + key) > 0) apply_setting(config, key, values.at(key), 0);
        }
        return config;
    }
};

bool overflow_exceeded(const std::vector<RunResult>& runs, std::ostream& err) {
    const auto bad = static_cast<std::size_t>(
        std::count_if(runs.begin(), runs.end(), [](const RunResult& r) { return r.overflow; }));
    if (bad == 0) return false;
    err << fmt::format("{} of {} orbits overflowed (S_n > {:g})\n", bad, runs.size(), kOverflowLimit);
    return 10 * bad > runs.size();
}

void fit_line(const std::vector<double>& x, const std::vector<double>& y, double& slope) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - sx / n) * (x[i] - sx / n);
        sxy += (x[i] - sx / n) * (y[i] - sy / n);
    }
    slope = sxy / sxx;
}

int cmd_run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
    const auto experiment = make_experiment(config);
    const auto runs = run_ensemble(experiment, *config.master_seed, config.ensemble_size, default_workers());
    {
        std::ofstream csv(config.csv_path, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write " + config.csv_path);
        write_csv(csv, runs);
    }
    const auto summary = summarize(config, experiment, runs);
    {
        std::ofstream js(config.summary_path, std::ios::binary);
        if (!js) throw std::runtime_error("cannot write " + config.summary_path);
        js << summary.dump(2) << '\n';
    }
    const auto& ex = summary["exponent"];
    out << fmt::format("{}; median {} {:.4g} over {} orbits: {}\n", format_prediction(experiment.prediction()),
                       ex["estimator"].get<std::string>(), ex["median"].is_null() ? NAN : ex["median"].get<double>(),
                       summary["orbits"]["completed"].get<std::size_t>(), ex["pass"].get<bool>() ? "pass" : "FAIL");
    out << "wrote " << config.csv_path << " and " << config.summary_path << '\n';
    return overflow_exceeded(runs, err) ? kExitOverflow : kExitOk;
}

int cmd_sbc(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
    const auto experiment = make_experiment(config);
    const auto runs = run_ensemble(experiment, *config.master_seed, config.ensemble_size, default_workers());
    out << "run_id,seed,n,hits,E_n,sbc_ratio,qsbc_residual\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        for (std::size_t c = 0; c < r.checkpoints.size(); ++c) {
            const auto& rec = r.checkpoints[c];
            out << fmt::format("{},{},{},{},{},{},{}\n", i, r.seed, rec.n, rec.hits, format_real(rec.E_n),
                               format_real(r.sbc_ratio_series[c]), format_real(r.qsbc_residual_series[c]));
        }
    }
    return overflow_exceeded(runs, err) ? kExitOverflow : kExitOk;
}

int cmd_sweep(ExperimentConfig config, const std::vector<double>& ks, std::ostream& out, std::ostream& err) {
    // validate every k before spending time on any of them
    for (double k : ks) {
        config.k = k;
        config.lines["k"] = 0;
        validate(config);
    }
    out << "k,predicted,median_slope,median_pointwise,pass\n";
    int status = kExitOk;
    for (double k : ks) {
        config.k = k;
        const auto experiment = make_experiment(config);
        const auto runs = run_ensemble(experiment, *config.master_seed, config.ensemble_size, default_workers());
        const auto summary = summarize(config, experiment, runs);
        const auto& ex = summary["exponent"];
        auto num = [](const nlohmann::ordered_json& v) { return format_real(v.is_null() ? NAN : v.get<double>()); };
        out << fmt::format("{},{},{},{},{}\n", format_real(k), num(ex["predicted"]), num(ex["median_slope"]),
                           num(ex["median_pointwise"]), ex["pass"].get<bool>() ? "pass" : "fail");
        if (overflow_exceeded(runs, err)) status = kExitOverflow;
    }
    return status;
}

int cmd_escape(double alpha, const std::vector<double>& gammas, const std::vector<double>& ms, double epsilon0,
               std::ostream& out) {
    if (ms.size() < 2) throw std::invalid_argument("escape needs at least two values of m");
    out << "gamma,m,escape_time,slope\n";
    for (double gamma : gammas) {
        std::vector<std::uint64_t> times;
        std::vector<double> x, y;
        for (double m : ms) {
            times.push_back(escape_time(alpha, m, gamma, epsilon0));
            if (times.back() > 0) {
                x.push_back(std::log(m));
                y.push_back(std::log(static_cast<double>(times.back())));
            }
        }
        double slope = NAN;
        if (x.size() >= 2) fit_line(x, y, slope);
        for (std::size_t i = 0; i < ms.size(); ++i) {
            out << fmt::format("{},{},{},{}\n", format_real(gamma), format_real(ms[i]), times[i], format_real(slope));
        }
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Birkhoff sums of non-integrable observables and shrinking-target hit counts", "birklab"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an ensemble; write the per-orbit CSV and the JSON summary");
    KeyFlags run_flags;
    run_flags.attach(*run);

    auto* sbc = app.add_subcommand("sbc", "Run an ensemble and print hits/E_n per orbit and checkpoint");
    KeyFlags sbc_flags;
    sbc_flags.attach(*sbc);

    auto* sweep = app.add_subcommand("sweep", "Run the configured ensemble once per k; print exponent vs k");
    KeyFlags sweep_flags;
    sweep_flags.attach(*sweep);
    std::string sweep_ks = "1,2,3";
    sweep->add_option("--ks", sweep_ks, "Comma-separated values of k")->capture_default_str();

    auto* predict = app.add_subcommand("predict", "Print the predicted growth exponent");
    std::string predict_system;
    std::string predict_p = "0";
    double predict_alpha = 0.0;
    double predict_k = 1.0;
    predict->add_option("system", predict_system, "lsv, doubling, tent, logistic or catmap")->required();
    predict->add_option("--alpha", predict_alpha, "LSV parameter")->capture_default_str();
    predict->add_option("--p", predict_p, "Target point x or x,y")->capture_default_str();
    predict->add_option("--k", predict_k, "Singularity power")->capture_default_str();

    auto* escape = app.add_subcommand("escape", "Escape times of LSV orbits injected near the fixed point");
    double escape_alpha = 0.5;
    double escape_eps = 0.25;
    std::string escape_gammas = "1";
    std::string escape_ms = "1e2,1e3,1e4,1e5";
    escape->add_option("--alpha", escape_alpha, "LSV parameter")->capture_default_str();
    escape->add_option("--gamma", escape_gammas, "Comma-separated injection exponents")->capture_default_str();
    escape->add_option("--m", escape_ms, "Comma-separated values of m")->capture_default_str();
    escape->add_option("--epsilon0", escape_eps, "Exit threshold")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed() || sbc->parsed() || sweep->parsed()) {
            const auto* cmd = run->parsed() ? run : sbc->parsed() ? sbc : sweep;
            const auto& flags = run->parsed() ? run_flags : sbc->parsed() ? sbc_flags : sweep_flags;
            auto config = flags.load(*cmd);
            if (sweep->parsed()) return cmd_sweep(config, parse_reals(sweep_ks), out, err);
            validate(config);
            return run->parsed() ? cmd_run(config, out, err) : cmd_sbc(config, out, err);
        }
        if (predict->parsed()) {
            const auto system = SystemDescriptor::make(parse_system_id(predict_system), predict_alpha);
            const ObservableSpec observable{ObservableKind::PowerDistance, parse_point(predict_p), predict_k};
            observable.validate(system);
            const auto prediction = predicted_exponent(system, observable.p, observable.k);
            out << format_prediction(prediction) << '\n';
            if (!prediction.warning.empty()) err << "warning: " << prediction.warning << '\n';
            return kExitOk;
        }
        if (escape->parsed()) {
            return cmd_escape(escape_alpha, parse_reals(escape_gammas), parse_reals(escape_ms), escape_eps, out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace birklab
