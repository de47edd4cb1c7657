#pragma once

// Configuration, ensemble orchestration and durable output.
//
// Config files are flat `key = value` lines; `#` starts a comment. Every key
// can also be given as a `--key value` flag, which wins over the file.
//
//   system            lsv | doubling | tent | logistic | catmap
//   alpha             LSV parameter, 0 <= alpha < 1
//   observable        power | log
//   p                 target point: "x" or "x,y"
//   k                 power of the singularity
//   schedule          radius_power | measure_harmonic | kim
//   schedule_c, schedule_beta, schedule_gamma
//   n_max             orbit length (>= 1000)
//   ensemble_size     number of orbits
//   master_seed       mandatory
//   checkpoint_ratio  geometric checkpoint spacing
//   delta, eta        QSBC residual exponent 1/2+delta; Aaronson log power 1+eta
//   estimator         slope | pointwise (exponent used for pass/fail)
//   tolerance         allowed |median exponent - prediction|
//   csv_path, summary_path

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "birklab/accumulate.hpp"

namespace birklab {

/// A bad key, value or parameter combination. `line` is 0 when the value came
/// from a flag.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& origin, int line, const std::string& message);
    int line() const { return line_; }

private:
    int line_;
};

enum class Estimator { Slope, Pointwise };

struct ExperimentConfig {
    SystemId system = SystemId::Doubling;
    double alpha = 0.0;
    ObservableKind observable = ObservableKind::PowerDistance;
    Point p;
    double k = 1.0;
    ScheduleKind schedule = ScheduleKind::RadiusPower;
    ScheduleParams schedule_params;
    std::uint64_t n_max = 1'000'000;
    std::uint64_t ensemble_size = 32;
    std::optional<std::uint64_t> master_seed;
    double checkpoint_ratio = kDefaultCheckpointRatio;
    double delta = 0.1;
    double eta = 0.1;
    Estimator estimator = Estimator::Slope;
    double tolerance = 0.2;
    std::string csv_path = "orbits.csv";
    std::string summary_path = "summary.json";

    // where each key was last set, for error messages
    std::string origin = "<flags>";
    std::map<std::string, int> lines;
};

/// Every recognized key, in documentation order.
const std::vector<std::string>& config_keys();

/// Sets one key; throws ConfigError for unknown keys and unparsable values.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value, int line);

/// Parses config text without cross-key validation.
ExperimentConfig parse_config(std::string_view text, const std::string& origin);
ExperimentConfig load_config(const std::string& path);

/// Checks every module precondition; throws ConfigError naming the line of
/// the offending key.
void validate(const ExperimentConfig& config);

/// Config echo as it appears in the summary.
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);

/// Seed of orbit `index`: the (index+1)-th output of a splitmix64 stream
/// started at master_seed.
std::uint64_t orbit_seed(std::uint64_t master_seed, std::uint64_t index);

/// Worker count from BIRKLAB_WORKERS, else the hardware concurrency.
unsigned default_workers();

/// Builds the Experiment a validated config describes.
Experiment make_experiment(const ExperimentConfig& config);

/// Runs ensemble_size orbits over `workers` threads. Results are in orbit
/// order and do not depend on the worker count.
std::vector<RunResult> run_ensemble(const Experiment& experiment, std::uint64_t master_seed, std::uint64_t orbits,
                                    unsigned workers);

inline constexpr std::string_view kCsvHeader =
    "run_id,seed,n,S_n,log_Sn_over_log_n,M_n,hits,E_n,sbc_ratio,qsbc_residual,trimmed_b8,aaronson_ratio,"
    "last_hit_index";

/// One row per (orbit, checkpoint), 17 significant digits.
void write_csv(std::ostream& out, const std::vector<RunResult>& runs);

/// Type-7 sample quantile of an unsorted sample (copied).
double quantile(std::vector<double> values, double q);

/// Ensemble statistics over orbits that did not overflow, plus the config echo.
nlohmann::ordered_json summarize(const ExperimentConfig& config, const Experiment& experiment,
                                 const std::vector<RunResult>& runs);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitOverflow = 3;

/// Entry point of the command-line tool; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace birklab
