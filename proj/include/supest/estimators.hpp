#pragma once

// Support-size estimators.
//
// learned_estimate partitions [1/n, 1] into geometric intervals
// I_j = [b^j/n, b^{j+1}/n) and assigns every seen element to an interval using
// its predicted probability. Intervals whose left endpoint is at most
// c * ln(n) / N are estimated with the shifted Chebyshev polynomial on
// [1, b^2] (scale n / b^j); the rest just count distinct seen elements.
// Unseen elements contribute nothing, so only the sample is iterated.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "supest/chebyshev.hpp"
#include "supest/predictors.hpp"
#include "supest/sampling.hpp"

namespace supest {

enum class IntervalMode { chebyshev, count_distinct };

struct IntervalEstimate {
  int index;
  double left;   // l_j = b^j / n
  double right;  // r_j = b^{j+1} / n
  IntervalMode mode;
  double estimate;
  std::uint64_t seen;  // distinct seen elements assigned here
  bool sanity_ok;      // estimate in [0, 1 / l_j]
};

struct EstimateReport {
  double estimate = 0.0;
  double clamped_estimate = 0.0;  // min(n, max(distinct_seen, estimate))
  double base_used = 0.0;
  int degree = 0;
  std::vector<IntervalEstimate> intervals;
  std::uint64_t distinct_seen = 0;

  [[nodiscard]] bool all_sane() const;
};

struct EstimatorOptions {
  /// Leading constant of the c * ln(n) / N threshold.
  double threshold_constant = 0.5;
  /// Value of N used in the threshold and in the correction terms. Defaults to
  /// the realized sample size; Poissonized runs pass the Poisson rate.
  std::optional<double> sample_size;
};

/// floor(l_constant * ln n), at least 1.
int default_degree(std::uint64_t n, double l_constant = 0.45);

/// Number of intervals minus one: the largest j with b^j <= n.
int top_interval(std::uint64_t n, double base);

/// floor(log_b(n * prediction)) clamped to [0, top_interval]. A prediction on
/// an interval boundary goes to the higher interval.
int interval_index(double prediction, std::uint64_t n, double base);

/// A seen element's count together with its (clamped) prediction.
struct Observation {
  ElementId id;
  std::uint64_t count;
  double prediction;
};

std::vector<Observation> observe(const SampleCounts& counts, const Predictor& pred);

EstimateReport learned_estimate(const SampleCounts& counts, const Predictor& pred,
                                std::uint64_t n, double base, int degree,
                                const EstimatorOptions& opts = {});

/// Same as above on pre-computed observations (base search reuses them).
EstimateReport learned_estimate(std::span<const Observation> obs, std::uint64_t total,
                                std::uint64_t n, double base, const ShiftedPolynomial& poly,
                                const EstimatorOptions& opts = {});

struct SanityResult {
  bool ok = true;
  std::vector<int> failing;
  double failing_fraction = 0.0;  // over all intervals 0..top_interval
};

SanityResult sanity_check(std::span<const IntervalEstimate> intervals);

struct BaseTraceEntry {
  double base;
  double failing_fraction;
};

struct BaseSelection {
  double base = 0.0;          // 2 * minimal passing base, or the degenerate base
  std::uint64_t minimal_base = 0;  // 0 when no base passed
  bool degenerate = false;
  std::vector<BaseTraceEntry> trace;
  EstimateReport report;  // learned_estimate at `base`
};

/// Tries b = b_start, b_start + 1, ... up to n; the first base at which every
/// interval passes the sanity check is b_min, and the result uses 2 * b_min.
/// When nothing passes, falls back to base n + 1 (one interval) and sets
/// `degenerate`.
BaseSelection select_base(const SampleCounts& counts, const Predictor& pred, std::uint64_t n,
                          int degree, std::uint64_t b_start = 2,
                          const EstimatorOptions& opts = {});

/// Predictor-free single-interval estimator: polynomial on [1, R] with
/// R = c * n * ln(n) / N and scale n. Falls back to the distinct count when
/// c * ln(n) / N >= 1.
EstimateReport wy_estimate(const SampleCounts& counts, std::uint64_t n, int degree,
                           const EstimatorOptions& opts = {});

/// Mean of 1 / max(Pi(i), 1/n) over sample occurrences (with multiplicity).
double cr_estimate(const SampleCounts& counts, const Predictor& pred, std::uint64_t n);
double cr_estimate(std::span<const double> predictions, std::uint64_t n);

/// Number of distinct elements in the sample.
std::uint64_t naive_estimate(const SampleCounts& counts);

/// Sum of interval estimates with every failing interval replaced by its
/// distinct seen count. Diagnostic only (base sweeps).
double naive_substituted_estimate(const EstimateReport& report);

}  // namespace supest
