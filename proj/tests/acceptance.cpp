// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/rational.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "supest/chebyshev.hpp"
#include "supest/csv.hpp"
#include "supest/distributions.hpp"
#include "supest/estimators.hpp"
#include "supest/harness.hpp"
#include "supest/predictors.hpp"
#include "supest/sampling.hpp"

using namespace supest;

namespace {

// Master seed for every randomized criterion.
constexpr std::uint64_t kSeed = 0;

// Criterion 5 regression anchors (median relative errors, seed 0), frozen from
// the first verified run; compared with a relative tolerance.
constexpr double kAnchorLearned = 0.345645;
constexpr double kAnchorWy = 0.457302;
constexpr double kAnchorCr = 0.488129;
constexpr double kAnchorTolerance = 0.20;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

ExperimentConfig zipf_config() {
  ExperimentConfig cfg;
  cfg.distribution = "zipf:100000:0.5";
  cfg.predictor = "empirical:0.1";
  cfg.estimators = {EstimatorKind::learned, EstimatorKind::wy, EstimatorKind::cr,
                    EstimatorKind::naive};
  cfg.sample_sizes = {SampleSize{true, 0.05}};
  cfg.trials = 50;
  cfg.seed = kSeed;
  return cfg;
}

double median_of(const ExperimentResult& r, const std::string& estimator) {
  for (const auto& s : r.summary) {
    if (s.estimator == estimator) return s.median_rel_error;
  }
  return std::nan("");
}

Outcome polynomial_suite() {
  Outcome out;
  double worst_origin = 0.0;
  double worst_ratio = 0.0;
  double worst_decay = 0.0;
  for (const double R : {2.0, 4.0, 9.0, 100.0}) {
    std::vector<double> eps;
    for (int L = 1; L <= 25; ++L) {
      const auto p = shifted_polynomial(L, R);
      eps.push_back(p.eps());
      const double origin = std::abs(p.evaluate(0.0) + 1.0);
      worst_origin = std::max(worst_origin, origin);
      if (origin > 1e-9) out.pass = false;
      double sup = 0.0;
      for (int i = 0; i < 10000; ++i) {
        sup = std::max(sup, std::abs(p.evaluate(1.0 + (R - 1.0) * i / 9999.0)));
      }
      worst_ratio = std::max(worst_ratio, sup / p.eps());
      if (sup > p.eps() * (1 + 1e-6)) out.pass = false;
    }
    for (std::size_t i = 0; i + 1 < eps.size(); ++i) {
      if (!(eps[i + 1] < eps[i])) out.pass = false;
    }
    for (std::size_t i = 0; i + 2 < eps.size(); ++i) {
      worst_decay = std::max(worst_decay, eps[i + 2] / eps[i]);
      if (!(eps[i + 2] / eps[i] < 1.0)) out.pass = false;
    }
  }
  out.detail = "max|P(0)+1|=" + fmt(worst_origin) + " max sup/eps=" + fmt(worst_ratio) +
               " max eps(L+2)/eps(L)=" + fmt(worst_decay);
  return out;
}

Outcome hard_instance_suite() {
  Outcome out;
  double worst_mass = 0.0;
  double worst_moment = 0.0;
  int worst_moment_k = 0;
  double worst_gap = 0.0;
  for (int k = 1; k <= 8; ++k) {
    const std::uint64_t lcm = hard_instance_lcm(k);
    const std::uint64_t n = std::max<std::uint64_t>(1, (1000000 + lcm / 2) / lcm) * lcm;
    const auto h = build_hard_instance(k, n);
    for (const auto* d : {&h.p, &h.q}) {
      const double mass = std::abs(power_sum(*d, 1) - 1.0);
      worst_mass = std::max(worst_mass, mass);
      if (mass > 1e-9) out.pass = false;
    }
    for (int r = 1; r <= k; ++r) {
      const double a = power_sum(h.p, r);
      const double b = power_sum(h.q, r);
      const double rel = std::abs(a - b) / std::max(a, b);
      if (rel > worst_moment) {
        worst_moment = rel;
        worst_moment_k = k;
      }
      if (rel > 1e-6) out.pass = false;
    }
    const double gap = static_cast<double>(h.p.support_size()) -
                       static_cast<double>(h.q.support_size());
    const double dev = std::abs(gap - h.eps * static_cast<double>(n));
    worst_gap = std::max(worst_gap, dev / (k * k + 1.0));
    if (dev > k * k + 1.0) out.pass = false;

    // eps against the closed form in exact rationals.
    std::int64_t central = 1;
    for (int i = 1; i <= k; ++i) central = central * (k + i) / i;
    const boost::rational<std::int64_t> want(1, k * (std::int64_t{1} << (k - 1)) * central);
    const auto eps = hard_instance_epsilon(k);
    if (boost::rational<std::int64_t>(eps.num, eps.den) != want) out.pass = false;
  }
  out.detail = "max|sum p - 1|=" + fmt(worst_mass) + " max moment rel diff=" + fmt(worst_moment) +
               " (k=" + std::to_string(worst_moment_k) + ")" +
               " max gap dev/(k^2+1)=" + fmt(worst_gap);
  return out;
}

Outcome unbiasedness_variance() {
  Outcome out;
  const std::uint64_t n = 100;
  const auto d = uniform_distribution(50, n);
  const auto pred = oracle_predictor(d);
  const int L = 5;
  const double lambda = L * std::pow(static_cast<double>(n), 1.0 - 1.0 / L);
  const double eps = epsilon_bound(L, 4.0);
  EstimatorOptions opts;
  opts.sample_size = lambda;
  const int trials = 10000;
  Rng root(derive_seed(kSeed, {3}));
  double sum = 0.0;
  double sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng rng = root.split(static_cast<std::uint64_t>(t));
    const auto counts = draw_poissonized(d, lambda, rng);
    const double s = counts.empty() ? 0.0 : learned_estimate(counts, pred, n, 2.0, L, opts).estimate;
    sum += s;
    sq += s * s;
  }
  const double mean = sum / trials;
  const double var = (sq - trials * mean * mean) / (trials - 1);
  const double sd = std::sqrt(var);
  const double bias_bound = eps * 50.0 + 4.0 * sd / 100.0;
  const double var_bound = 2.0 * eps * eps * static_cast<double>(n) * 50.0;
  const bool bias_ok = std::abs(mean - 50.0) <= bias_bound;
  const bool var_ok = var <= var_bound;
  out.pass = bias_ok && var_ok;
  out.detail = "lambda=" + fmt(lambda) + " eps=" + fmt(eps) + " mean=" + fmt(mean) +
               " |bias|=" + fmt(std::abs(mean - 50.0)) + (bias_ok ? "<=" : ">") + fmt(bias_bound) +
               " var=" + fmt(var) + (var_ok ? "<=" : ">") + fmt(var_bound);
  return out;
}

Outcome cr_correctness() {
  Outcome out;
  double worst_exact = 0.0;
  Rng rng(derive_seed(kSeed, {4, 0}));
  for (const auto& [S, n] : std::vector<std::pair<std::uint64_t, std::uint64_t>>{
           {1, 1}, {7, 10}, {50, 100}, {1000, 1000}, {333, 100000}}) {
    const auto d = uniform_distribution(S, n);
    const auto pred = oracle_predictor(d);
    const AliasSampler sampler(d);
    for (int t = 0; t < 200; ++t) {
      const auto counts = draw_fixed(sampler, 1 + static_cast<std::uint64_t>(t) * 7, rng);
      const double dev = std::abs(cr_estimate(counts, pred, n) - static_cast<double>(S));
      worst_exact = std::max(worst_exact, dev / static_cast<double>(S));
    }
  }
  if (worst_exact > 1e-12) out.pass = false;

  const auto z = zipf_distribution(1000, 0.5);
  const auto pred = oracle_predictor(z);
  const AliasSampler sampler(z);
  const int trials = 1000;
  double sum = 0.0;
  double sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng local(derive_seed(kSeed, {4, 1, static_cast<std::uint64_t>(t)}));
    const double e = cr_estimate(draw_fixed(sampler, 10000, local), pred, z.n());
    sum += e;
    sq += e * e;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt((sq - trials * mean * mean) / (trials - 1));
  const double z_score = (mean - 1000.0) / (sd / std::sqrt(trials));
  if (std::abs(z_score) > 4.0) out.pass = false;
  out.detail = "uniform max rel dev=" + fmt(worst_exact) + " zipf mean=" + fmt(mean) +
               " z=" + fmt(z_score);
  return out;
}

struct Fig6 {
  ExperimentResult result;
  std::string rows;
  std::string summary;
};

Fig6 run_fig6(unsigned workers) {
  auto cfg = zipf_config();
  cfg.workers = workers;
  Fig6 f{run_experiment(cfg), {}, {}};
  std::ostringstream rows;
  std::ostringstream summary;
  write_rows_csv(f.result.rows, rows);
  write_summary_csv(f.result.summary, summary);
  f.rows = rows.str();
  f.summary = summary.str();
  return f;
}

Outcome ordering(const Fig6& f) {
  Outcome out;
  const double learned = median_of(f.result, "learned");
  const double wy = median_of(f.result, "wy");
  const double cr = median_of(f.result, "cr");
  const bool order = learned < wy;
  const bool cr_gap = cr > 2.0 * learned;
  auto near = [](double got, double anchor) {
    return anchor > 0 && std::abs(got - anchor) <= kAnchorTolerance * anchor;
  };
  const bool anchors = near(learned, kAnchorLearned) && near(wy, kAnchorWy) && near(cr, kAnchorCr);
  out.pass = order && cr_gap && anchors;
  out.detail = "median learned=" + fmt(learned) + " wy=" + fmt(wy) + " cr=" + fmt(cr) +
               " learned<wy:" + (order ? "yes" : "no") + " cr>2*learned:" +
               (cr_gap ? "yes" : "no") + " anchors:" + (anchors ? "yes" : "no");
  return out;
}

Outcome sweep_shape() {
  Outcome out;
  const auto cfg = zipf_config();
  const auto workload = make_workload(cfg);
  const double nd = static_cast<double>(workload.distribution.n());
  const double N = static_cast<double>(cfg.sample_sizes[0].resolve(workload.distribution.n()));
  const double b_wy = std::sqrt(0.5 * nd * std::log(nd) / N);

  std::vector<double> bases;
  for (int b = 2; b <= 40; ++b) bases.push_back(b);
  bases.push_back(b_wy);
  const auto sweep = base_sweep(cfg, workload, bases);

  std::size_t b_min = 0;
  for (std::size_t i = 0; i + 1 < sweep.rows.size(); ++i) {
    if (sweep.rows[i].failing_fraction == 0.0) {
      b_min = i;
      break;
    }
  }
  bool monotone = sweep.rows[b_min].failing_fraction == 0.0;
  for (std::size_t i = 0; i + 1 < sweep.rows.size(); ++i) {
    const bool failing = sweep.rows[i].failing_fraction > 0.0;
    if (failing != (i < b_min)) monotone = false;
  }
  bool plunge = false;
  std::string plunge_detail = "b_min=" + fmt(sweep.rows[b_min].base);
  if (b_min > 0) {
    const double at = sweep.rows[b_min].median_rel_error;
    const double before = sweep.rows[b_min - 1].median_rel_error;
    plunge = at < 0.5 * before;
    plunge_detail += " err(b_min)=" + fmt(at) + " err(b_min-1)=" + fmt(before);
  }
  const double learned_wy = sweep.rows.back().median_rel_error;
  const bool converge =
      std::abs(learned_wy - sweep.wy_median_rel_error) <= 0.2 * sweep.wy_median_rel_error;
  out.pass = monotone && plunge && converge;
  out.detail = "failing-fraction split:" + std::string(monotone ? "yes " : "no ") + plunge_detail +
               " plunge:" + (plunge ? "yes" : "no") + " err(b=" + fmt(b_wy) +
               ")=" + fmt(learned_wy) + " wy=" + fmt(sweep.wy_median_rel_error) +
               " within 20%:" + (converge ? "yes" : "no");
  return out;
}

Outcome poissonization() {
  Outcome out;
  const Distribution d(5, {{1, 0.5}, {2, 0.3}, {3, 0.2}});
  const AliasSampler sampler(d);
  const double lambda = 6.0;
  const int trials = 100000;
  using Key = std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>;
  std::map<Key, std::pair<std::uint64_t, std::uint64_t>> cells;
  Rng a(derive_seed(kSeed, {7, 0}));
  Rng b(derive_seed(kSeed, {7, 1}));
  for (int t = 0; t < trials; ++t) {
    const auto per = draw_poissonized(d, lambda, a);
    ++cells[{per.count(1), per.count(2), per.count(3)}].first;
    const auto mixed = draw_fixed(sampler, poisson_variate(lambda, b), b);
    ++cells[{mixed.count(1), mixed.count(2), mixed.count(3)}].second;
  }
  // Equal sample sizes: statistic sum (x - y)^2 / (x + y) over cells, with
  // sparse cells pooled so every bin has at least 10 observations in total.
  double stat = 0.0;
  int bins = 0;
  std::uint64_t pool_x = 0;
  std::uint64_t pool_y = 0;
  for (const auto& [key, xy] : cells) {
    const auto [x, y] = xy;
    if (x + y < 10) {
      pool_x += x;
      pool_y += y;
      continue;
    }
    stat += (static_cast<double>(x) - y) * (static_cast<double>(x) - y) / static_cast<double>(x + y);
    ++bins;
  }
  if (pool_x + pool_y > 0) {
    const double diff = static_cast<double>(pool_x) - static_cast<double>(pool_y);
    stat += diff * diff / static_cast<double>(pool_x + pool_y);
    ++bins;
  }
  const boost::math::chi_squared dist(bins - 1);
  const double p_value = boost::math::cdf(boost::math::complement(dist, stat));
  out.pass = p_value >= 1e-3;
  out.detail = "cells=" + std::to_string(cells.size()) + " bins=" + std::to_string(bins) +
               " chi2=" + fmt(stat) + " p=" + fmt(p_value);
  return out;
}

Outcome determinism(const Fig6& first) {
  Outcome out;
  const unsigned hw = std::max(2u, std::thread::hardware_concurrency());
  const auto serial = run_fig6(1);
  const auto parallel = run_fig6(hw);
  const bool same = first.rows == serial.rows && first.rows == parallel.rows &&
                    first.summary == serial.summary && first.summary == parallel.summary;
  out.pass = same;
  out.detail = "workers {default, 1, " + std::to_string(hw) + "} rows " +
               std::to_string(first.rows.size()) + " bytes, identical:" + (same ? "yes" : "no");
  return out;
}

int report(int id, const std::string& name, double limit_s, const std::function<Outcome()>& run) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = run();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = limit_s <= 0 || secs < limit_s;
  const bool pass = out.pass && in_time;
  std::printf("criterion %d %s  %s: %s; %.2f s%s\n", id, pass ? "PASS" : "FAIL", name.c_str(),
              out.detail.c_str(), secs,
              in_time ? "" : (" exceeds " + fmt(limit_s) + " s").c_str());
  std::fflush(stdout);
  return pass ? 0 : 1;
}

}  // namespace

int main() {
  int failed = 0;
  failed += report(1, "polynomial suite", 5, polynomial_suite);
  failed += report(2, "hard-instance suite", 10, hard_instance_suite);
  failed += report(3, "unbiasedness/variance Monte Carlo", 60, unbiasedness_variance);
  failed += report(4, "CR oracle correctness", 60, cr_correctness);
  Fig6 fig6;
  failed += report(5, "Zipf ordering", 600, [&] {
    fig6 = run_fig6(0);
    return ordering(fig6);
  });
  failed += report(6, "base-sweep shape", 600, sweep_shape);
  failed += report(7, "Poissonization equivalence", 30, poissonization);
  failed += report(8, "determinism", 0, [&] { return determinism(fig6); });
  std::printf("%d of 8 criteria failed\n", failed);
  return failed;
}
