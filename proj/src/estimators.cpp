#include "supest/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "numeric.hpp"

namespace supest {

namespace {

// Relative slack when comparing n * prediction against powers of the base,
// so log/pow rounding cannot move an exact boundary value down an interval.
constexpr double kBoundaryGuard = 1e-12;

double resolve_sample_size(std::uint64_t total, const EstimatorOptions& opts) {
  const double n_samples = opts.sample_size.value_or(static_cast<double>(total));
  if (!(n_samples > 0.0)) throw std::invalid_argument("estimator needs a nonempty sample");
  return n_samples;
}

// 1 / l_j recomputed from the stored l_j can land a few ulps under the true
// capacity n / b^j, which an interval filled exactly to capacity must still pass.
constexpr double kCapacitySlack = 1e-12;

bool within_capacity(double estimate, double left) {
  return estimate >= 0.0 && estimate <= (1.0 / left) * (1.0 + kCapacitySlack);
}

void check_base(double base) {
  if (!(base > 1.0) || !std::isfinite(base)) {
    throw std::invalid_argument("base must be > 1, got " + std::to_string(base));
  }
}

EstimateReport finish(EstimateReport report, std::uint64_t n) {
  detail::CompensatedSum total;
  for (const auto& iv : report.intervals) total.add(iv.estimate);
  report.estimate = total.value();
  report.clamped_estimate =
      std::min(static_cast<double>(n),
               std::max(static_cast<double>(report.distinct_seen), report.estimate));
  return report;
}

}  // namespace

bool EstimateReport::all_sane() const {
  return std::all_of(intervals.begin(), intervals.end(),
                     [](const IntervalEstimate& iv) { return iv.sanity_ok; });
}

int default_degree(std::uint64_t n, double l_constant) {
  const double l = std::floor(l_constant * std::log(static_cast<double>(n)));
  return std::clamp(static_cast<int>(l), 1, kMaxChebyshevDegree);
}

int top_interval(std::uint64_t n, double base) {
  check_base(base);
  const double nd = static_cast<double>(n) * (1.0 + kBoundaryGuard);
  int j = 0;
  double power = base;
  while (power <= nd) {
    ++j;
    power *= base;
  }
  return j;
}

int interval_index(double prediction, std::uint64_t n, double base) {
  const int top = top_interval(n, base);
  const double x = static_cast<double>(n) * prediction;
  if (!(x > 1.0)) return 0;
  int j = static_cast<int>(std::floor(std::log(x) / std::log(base)));
  j = std::clamp(j, 0, top);
  const double guarded = x * (1.0 + kBoundaryGuard);
  while (j < top && std::pow(base, j + 1) <= guarded) ++j;
  while (j > 0 && std::pow(base, j) > guarded) --j;
  return j;
}

std::vector<Observation> observe(const SampleCounts& counts, const Predictor& pred) {
  std::vector<Observation> obs;
  obs.reserve(counts.distinct());
  for (const auto& [id, c] : counts.entries()) obs.push_back({id, c, pred.predict(id)});
  return obs;
}

EstimateReport learned_estimate(std::span<const Observation> obs, std::uint64_t total,
                                std::uint64_t n, double base, const ShiftedPolynomial& poly,
                                const EstimatorOptions& opts) {
  check_base(base);
  if (n == 0) throw std::invalid_argument("n must be >= 1");
  const double n_samples = resolve_sample_size(total, opts);
  const double nd = static_cast<double>(n);
  const double threshold = opts.threshold_constant * std::log(nd) / n_samples;
  const int top = top_interval(n, base);

  EstimateReport report;
  report.base_used = base;
  report.degree = poly.degree();
  report.distinct_seen = obs.size();
  report.intervals.reserve(static_cast<std::size_t>(top) + 1);
  for (int j = 0; j <= top; ++j) {
    const double left = std::pow(base, j) / nd;
    report.intervals.push_back({j, left, std::pow(base, j + 1) / nd,
                                left <= threshold ? IntervalMode::chebyshev
                                                  : IntervalMode::count_distinct,
                                0.0, 0, true});
  }

  std::vector<detail::CompensatedSum> sums(report.intervals.size());
  for (const auto& o : obs) {
    const int j = interval_index(o.prediction, n, base);
    auto& iv = report.intervals[static_cast<std::size_t>(j)];
    ++iv.seen;
    if (iv.mode == IntervalMode::chebyshev) {
      sums[static_cast<std::size_t>(j)].add(
          1.0 + correction_term(poly, o.count, 1.0 / iv.left, n_samples));
    } else {
      sums[static_cast<std::size_t>(j)].add(1.0);
    }
  }
  for (std::size_t j = 0; j < sums.size(); ++j) {
    auto& iv = report.intervals[j];
    iv.estimate = sums[j].value();
    iv.sanity_ok = within_capacity(iv.estimate, iv.left);
  }
  return finish(std::move(report), n);
}

EstimateReport learned_estimate(const SampleCounts& counts, const Predictor& pred,
                                std::uint64_t n, double base, int degree,
                                const EstimatorOptions& opts) {
  if (counts.total() == 0 && !opts.sample_size) {
    throw std::invalid_argument("learned_estimate needs at least one sample");
  }
  check_base(base);
  const auto poly = shifted_polynomial(degree, base * base);
  const auto obs = observe(counts, pred);
  return learned_estimate(obs, counts.total(), n, base, poly, opts);
}

SanityResult sanity_check(std::span<const IntervalEstimate> intervals) {
  SanityResult r;
  for (const auto& iv : intervals) {
    if (!within_capacity(iv.estimate, iv.left)) r.failing.push_back(iv.index);
  }
  r.ok = r.failing.empty();
  if (!intervals.empty()) {
    r.failing_fraction =
        static_cast<double>(r.failing.size()) / static_cast<double>(intervals.size());
  }
  return r;
}

BaseSelection select_base(const SampleCounts& counts, const Predictor& pred, std::uint64_t n,
                          int degree, std::uint64_t b_start, const EstimatorOptions& opts) {
  if (counts.total() == 0 && !opts.sample_size) {
    throw std::invalid_argument("select_base needs at least one sample");
  }
  if (b_start < 2) throw std::invalid_argument("base search starts at b >= 2");
  const auto obs = observe(counts, pred);

  BaseSelection sel;
  for (std::uint64_t b = b_start; b <= n; ++b) {
    const auto base = static_cast<double>(b);
    const auto poly = shifted_polynomial(degree, base * base);
    const auto report = learned_estimate(obs, counts.total(), n, base, poly, opts);
    const auto sanity = sanity_check(report.intervals);
    sel.trace.push_back({base, sanity.failing_fraction});
    if (sanity.ok) {
      sel.minimal_base = b;
      break;
    }
  }

  if (sel.minimal_base != 0) {
    sel.base = 2.0 * static_cast<double>(sel.minimal_base);
  } else {
    sel.degenerate = true;
    sel.base = static_cast<double>(n) + 1.0;
  }
  const auto poly = shifted_polynomial(degree, sel.base * sel.base);
  sel.report = learned_estimate(obs, counts.total(), n, sel.base, poly, opts);
  return sel;
}

EstimateReport wy_estimate(const SampleCounts& counts, std::uint64_t n, int degree,
                           const EstimatorOptions& opts) {
  if (counts.total() == 0 && !opts.sample_size) {
    throw std::invalid_argument("wy_estimate needs at least one sample");
  }
  if (n == 0) throw std::invalid_argument("n must be >= 1");
  const double n_samples = resolve_sample_size(counts.total(), opts);
  const double nd = static_cast<double>(n);
  const double upper = opts.threshold_constant * std::log(nd) / n_samples;

  EstimateReport report;
  report.degree = degree;
  report.distinct_seen = counts.distinct();
  const double ratio = std::max(upper * nd, 1.0 + 1e-6);
  report.base_used = std::sqrt(ratio);

  IntervalEstimate iv{0, 1.0 / nd, ratio / nd, IntervalMode::chebyshev, 0.0, counts.distinct(),
                      true};
  detail::CompensatedSum sum;
  if (upper >= 1.0) {
    iv.mode = IntervalMode::count_distinct;
    iv.right = 1.0;
    for (std::size_t i = 0; i < counts.distinct(); ++i) sum.add(1.0);
  } else {
    const auto poly = shifted_polynomial(degree, ratio);
    for (const auto& [id, c] : counts.entries()) {
      sum.add(1.0 + correction_term(poly, c, nd, n_samples));
    }
  }
  iv.estimate = sum.value();
  iv.sanity_ok = within_capacity(iv.estimate, iv.left);
  report.intervals.push_back(iv);
  return finish(std::move(report), n);
}

double cr_estimate(std::span<const double> predictions, std::uint64_t n) {
  if (predictions.empty()) throw std::invalid_argument("cr_estimate needs at least one sample");
  const double floor = 1.0 / static_cast<double>(n);
  detail::CompensatedSum sum;
  for (const double p : predictions) sum.add(1.0 / std::max(p, floor));
  return sum.value() / static_cast<double>(predictions.size());
}

double cr_estimate(const SampleCounts& counts, const Predictor& pred, std::uint64_t n) {
  if (counts.total() == 0) throw std::invalid_argument("cr_estimate needs at least one sample");
  const double floor = 1.0 / static_cast<double>(n);
  detail::CompensatedSum sum;
  for (const auto& [id, c] : counts.entries()) {
    sum.add(static_cast<double>(c) / std::max(pred.predict(id), floor));
  }
  return sum.value() / static_cast<double>(counts.total());
}

std::uint64_t naive_estimate(const SampleCounts& counts) { return counts.distinct(); }

double naive_substituted_estimate(const EstimateReport& report) {
  detail::CompensatedSum sum;
  for (const auto& iv : report.intervals) {
    sum.add(iv.sanity_ok ? iv.estimate : static_cast<double>(iv.seen));
  }
  return sum.value();
}

}  // namespace supest
