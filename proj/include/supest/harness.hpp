#pragma once

// Multi-trial experiment driver. Every trial draws a fresh sample from its own
// RNG substream, so results depend only on (config, master seed) and not on
// the number of worker threads.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "supest/distributions.hpp"
#include "supest/estimators.hpp"
#include "supest/predictors.hpp"

namespace supest {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error("config." + field + ": " + what), field_(field) {}
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class EstimatorKind { learned, wy, cr, naive };
enum class SamplingMode { fixed, poisson };

std::string to_string(EstimatorKind kind);

struct SampleSize {
  bool is_fraction = true;
  double value = 0.0;

  /// Number of samples (or the Poisson rate) for a distribution with parameter n.
  [[nodiscard]] std::uint64_t resolve(std::uint64_t n) const;
};

struct ExperimentConfig {
  // zipf:<domain>:<exponent> | uniform:<support>[:<n>] | hard:<k>:<n>:<P|Q>
  // | file:<path> | tokens:<path>
  std::string distribution;
  // oracle | noisy:<b> | empirical:<fraction> | table:<path>
  std::string predictor = "oracle";
  std::vector<EstimatorKind> estimators;
  std::vector<SampleSize> sample_sizes;
  SamplingMode sampling = SamplingMode::fixed;
  std::uint64_t trials = 50;
  std::uint64_t seed = 0;
  double l_constant = 0.45;
  double threshold_constant = 0.5;
  std::optional<int> degree;  // overrides l_constant when set
  std::vector<double> bases;  // base sweep only
  unsigned workers = 0;       // 0 = hardware concurrency
};

/// Flat `key = value` text; '#' starts a comment. Lists are comma-separated.
/// Sample sizes containing '.' or ending in '%' are fractions of n; plain
/// integers are absolute counts. Bases accept `lo-hi` integer ranges.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError naming the offending field.
void validate(const ExperimentConfig& cfg);

struct Workload {
  Distribution distribution;
  Predictor predictor;
};

/// Distribution named by a source string (formats as in ExperimentConfig).
Distribution distribution_from_spec(const std::string& spec);
/// Predictor named by a spec string; seeded kinds draw from substreams of master.
Predictor predictor_from_spec(const std::string& spec, const Distribution& d,
                              std::uint64_t master);

/// Builds the distribution and predictor named by the config. Seeded
/// predictors use a substream of the master seed that no trial uses.
Workload make_workload(const ExperimentConfig& cfg);

struct ResultRow {
  std::string estimator;
  std::uint64_t sample_size;
  std::uint64_t trial;
  double estimate_raw;
  double estimate_clamped;
  std::uint64_t true_support;
  double rel_error;
  std::optional<double> base;
  std::uint64_t seed;
};

struct SummaryRow {
  std::string estimator;
  std::uint64_t sample_size;
  double median_rel_error;
  double std_rel_error;
  std::uint64_t trials;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  // ordered by (estimator, sample size, trial)
  std::vector<SummaryRow> summary;
};

/// Seed of trial `trial` at sample-size index `size_index`. All estimators
/// of that (size, trial) cell see the same sample.
std::uint64_t trial_seed(std::uint64_t master, std::size_t size_index, std::uint64_t trial);

ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Workload& workload);

struct SweepRow {
  double base;
  double median_rel_error;
  double failing_fraction;  // mean over trials
};

struct SweepResult {
  std::uint64_t sample_size = 0;
  std::vector<SweepRow> rows;
  double wy_median_rel_error = 0.0;
};

/// For each base: learned estimate with failing intervals replaced by their
/// distinct seen count, at the config's first sample size.
SweepResult base_sweep(const ExperimentConfig& cfg, const Workload& workload,
                       const std::vector<double>& bases);
SweepResult base_sweep(const ExperimentConfig& cfg, const std::vector<double>& bases);

/// |1 - estimate / true_support|.
double relative_error(double estimate, std::uint64_t true_support);

/// Lower median (element (m-1)/2 of the sorted values).
double lower_median(std::vector<double> values);
/// Sample standard deviation; 0 for fewer than two values.
double sample_stddev(const std::vector<double>& values);

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

void write_rows_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void write_summary_csv(const std::vector<SummaryRow>& summary, std::ostream& out);
/// WY is emitted as a final `wy` row with failing fraction 0.
void write_sweep_csv(const SweepResult& sweep, std::ostream& out);

}  // namespace supest
