#include "supest/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include "supest/csv.hpp"

namespace supest {

namespace {

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  for (const auto part : csv::split(value, ',')) {
    const auto t = csv::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::vector<std::string> split_spec(const std::string& spec) {
  std::vector<std::string> out;
  for (const auto part : csv::split(spec, ':')) out.emplace_back(part);
  return out;
}

double parse_double_field(const std::string& field, std::string_view value) {
  double v = 0.0;
  if (!csv::parse_double(value, v)) {
    throw ConfigError(field, "expected a number, got '" + std::string(value) + "'");
  }
  return v;
}

std::uint64_t parse_u64_field(const std::string& field, std::string_view value) {
  std::uint64_t v = 0;
  if (!csv::parse_u64(value, v)) {
    throw ConfigError(field, "expected a nonnegative integer, got '" + std::string(value) + "'");
  }
  return v;
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "learned") return EstimatorKind::learned;
  if (name == "wy") return EstimatorKind::wy;
  if (name == "cr") return EstimatorKind::cr;
  if (name == "naive") return EstimatorKind::naive;
  throw ConfigError("estimators", "unknown estimator '" + name + "'");
}

SampleSize parse_sample_size(const std::string& text) {
  SampleSize s;
  if (!text.empty() && text.back() == '%') {
    s.is_fraction = true;
    s.value = parse_double_field("sample_sizes", text.substr(0, text.size() - 1)) / 100.0;
  } else if (text.find_first_of(".eE") != std::string::npos) {
    s.is_fraction = true;
    s.value = parse_double_field("sample_sizes", text);
  } else {
    s.is_fraction = false;
    s.value = static_cast<double>(parse_u64_field("sample_sizes", text));
  }
  return s;
}

std::vector<double> parse_bases(std::string_view value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) {
    const auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      const auto lo = parse_u64_field("bases", std::string_view(item).substr(0, dash));
      const auto hi = parse_u64_field("bases", std::string_view(item).substr(dash + 1));
      if (hi < lo) throw ConfigError("bases", "empty range '" + item + "'");
      for (auto b = lo; b <= hi; ++b) out.push_back(static_cast<double>(b));
    } else {
      out.push_back(parse_double_field("bases", item));
    }
  }
  return out;
}

template <typename F>
void parallel_for(std::size_t count, unsigned workers, F&& body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

Distribution distribution_from_spec(const std::string& spec) {
  const auto parts = split_spec(spec);
  const auto& kind = parts.front();
  const auto rest = spec.substr(std::min(spec.size(), kind.size() + 1));
  if (kind == "zipf" && parts.size() == 3) {
    return zipf_distribution(parse_u64_field("distribution", parts[1]),
                             parse_double_field("distribution", parts[2]));
  }
  if (kind == "uniform" && (parts.size() == 2 || parts.size() == 3)) {
    const auto support = parse_u64_field("distribution", parts[1]);
    const auto n = parts.size() == 3 ? parse_u64_field("distribution", parts[2]) : support;
    return uniform_distribution(support, n);
  }
  if (kind == "hard" && parts.size() == 4) {
    const auto k = static_cast<int>(parse_u64_field("distribution", parts[1]));
    auto pair = build_hard_instance(k, parse_u64_field("distribution", parts[2]));
    if (parts[3] == "P") return std::move(pair.p);
    if (parts[3] == "Q") return std::move(pair.q);
    throw ConfigError("distribution", "hard instance side must be P or Q");
  }
  if (kind == "file" && !rest.empty()) return load_distribution(std::filesystem::path(rest));
  if (kind == "tokens" && !rest.empty()) {
    return empirical_distribution(load_tokens(std::filesystem::path(rest)).counts);
  }
  throw ConfigError("distribution", "unrecognized source '" + spec + "'");
}

Predictor predictor_from_spec(const std::string& spec, const Distribution& d,
                              std::uint64_t master) {
  const auto parts = split_spec(spec);
  const auto& kind = parts.front();
  const auto rest = spec.substr(std::min(spec.size(), kind.size() + 1));
  if (kind == "oracle" && parts.size() == 1) return oracle_predictor(d);
  if (kind == "noisy" && parts.size() == 2) {
    return noisy_oracle_predictor(d, parse_double_field("predictor", parts[1]),
                                  derive_seed(master, {0, 1}));
  }
  if (kind == "empirical" && parts.size() == 2) {
    Rng rng(derive_seed(master, {0, 2}));
    return empirical_predictor(d, parse_double_field("predictor", parts[1]), rng);
  }
  if (kind == "table" && !rest.empty()) {
    return load_table_predictor(std::filesystem::path(rest), d.n());
  }
  throw ConfigError("predictor", "unrecognized predictor '" + spec + "'");
}

namespace {

int resolve_degree(const ExperimentConfig& cfg, std::uint64_t n) {
  return cfg.degree ? *cfg.degree : default_degree(n, cfg.l_constant);
}

SampleCounts draw_trial_sample(const ExperimentConfig& cfg, const Distribution& d,
                               const AliasSampler& sampler, std::uint64_t size,
                               std::uint64_t seed) {
  Rng rng(seed);
  if (cfg.sampling == SamplingMode::poisson) {
    return draw_poissonized(d, static_cast<double>(size), rng);
  }
  return draw_fixed(sampler, size, rng);
}

EstimatorOptions trial_options(const ExperimentConfig& cfg, std::uint64_t size) {
  EstimatorOptions opts;
  opts.threshold_constant = cfg.threshold_constant;
  if (cfg.sampling == SamplingMode::poisson) opts.sample_size = static_cast<double>(size);
  return opts;
}

std::string format_optional(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : std::string();
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::learned: return "learned";
    case EstimatorKind::wy: return "wy";
    case EstimatorKind::cr: return "cr";
    case EstimatorKind::naive: return "naive";
  }
  return "unknown";
}

std::uint64_t SampleSize::resolve(std::uint64_t n) const {
  if (!is_fraction) return static_cast<std::uint64_t>(value);
  return static_cast<std::uint64_t>(std::floor(value * static_cast<double>(n)));
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = csv::trim(line);
    if (body.empty() || body.front() == '\r') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line" + std::to_string(line_no), "expected 'key = value'");
    }
    const std::string key(csv::trim(body.substr(0, eq)));
    std::string value(csv::trim(body.substr(eq + 1)));
    if (!value.empty() && value.back() == '\r') value.pop_back();

    if (key == "distribution") {
      cfg.distribution = value;
    } else if (key == "predictor") {
      cfg.predictor = value;
    } else if (key == "estimators") {
      cfg.estimators.clear();
      for (const auto& e : split_list(value)) cfg.estimators.push_back(parse_estimator(e));
    } else if (key == "sample_sizes") {
      cfg.sample_sizes.clear();
      for (const auto& s : split_list(value)) cfg.sample_sizes.push_back(parse_sample_size(s));
    } else if (key == "sampling") {
      if (value == "fixed") {
        cfg.sampling = SamplingMode::fixed;
      } else if (value == "poisson") {
        cfg.sampling = SamplingMode::poisson;
      } else {
        throw ConfigError(key, "expected 'fixed' or 'poisson'");
      }
    } else if (key == "trials") {
      cfg.trials = parse_u64_field(key, value);
    } else if (key == "seed") {
      cfg.seed = parse_u64_field(key, value);
    } else if (key == "l_constant") {
      cfg.l_constant = parse_double_field(key, value);
    } else if (key == "threshold_constant") {
      cfg.threshold_constant = parse_double_field(key, value);
    } else if (key == "degree") {
      cfg.degree = static_cast<int>(parse_u64_field(key, value));
    } else if (key == "bases") {
      cfg.bases = parse_bases(value);
    } else if (key == "workers") {
      cfg.workers = static_cast<unsigned>(parse_u64_field(key, value));
    } else {
      throw ConfigError(key, "unknown field");
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(in);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.distribution.empty()) throw ConfigError("distribution", "missing");
  if (cfg.predictor.empty()) throw ConfigError("predictor", "missing");
  if (cfg.estimators.empty()) throw ConfigError("estimators", "at least one estimator required");
  if (cfg.sample_sizes.empty()) throw ConfigError("sample_sizes", "at least one size required");
  for (std::size_t i = 0; i < cfg.sample_sizes.size(); ++i) {
    const auto& s = cfg.sample_sizes[i];
    const std::string field = "sample_sizes[" + std::to_string(i) + "]";
    if (s.is_fraction && !(s.value > 0.0 && s.value <= 1.0)) {
      throw ConfigError(field, "fraction must be in (0, 1]");
    }
    if (!s.is_fraction && s.value < 1.0) throw ConfigError(field, "sample size must be >= 1");
  }
  if (cfg.trials < 1) throw ConfigError("trials", "must be >= 1");
  if (!(cfg.l_constant > 0.0)) throw ConfigError("l_constant", "must be > 0");
  if (!(cfg.threshold_constant > 0.0)) throw ConfigError("threshold_constant", "must be > 0");
  if (cfg.degree && (*cfg.degree < 1 || *cfg.degree > kMaxChebyshevDegree)) {
    throw ConfigError("degree", "must be in [1, " + std::to_string(kMaxChebyshevDegree) + "]");
  }
  for (std::size_t i = 0; i < cfg.bases.size(); ++i) {
    if (!(cfg.bases[i] > 1.0)) {
      throw ConfigError("bases[" + std::to_string(i) + "]", "base must be > 1");
    }
  }
}

Workload make_workload(const ExperimentConfig& cfg) {
  validate(cfg);
  auto dist = distribution_from_spec(cfg.distribution);
  auto pred = predictor_from_spec(cfg.predictor, dist, cfg.seed);
  return Workload{std::move(dist), std::move(pred)};
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t size_index, std::uint64_t trial) {
  return derive_seed(master, {1, size_index, trial});
}

double relative_error(double estimate, std::uint64_t true_support) {
  return std::abs(1.0 - estimate / static_cast<double>(true_support));
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

double sample_stddev(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<SummaryRow> out;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    std::vector<double> errors;
    while (j < rows.size() && rows[j].estimator == rows[i].estimator &&
           rows[j].sample_size == rows[i].sample_size) {
      errors.push_back(rows[j].rel_error);
      ++j;
    }
    out.push_back({rows[i].estimator, rows[i].sample_size, lower_median(errors),
                   sample_stddev(errors), static_cast<std::uint64_t>(errors.size())});
    i = j;
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, make_workload(cfg));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Workload& workload) {
  validate(cfg);
  const auto& dist = workload.distribution;
  const auto& pred = workload.predictor;
  const std::uint64_t n = dist.n();
  const std::uint64_t true_support = dist.support_size();
  const int degree = resolve_degree(cfg, n);
  const AliasSampler sampler(dist);

  const std::size_t sizes = cfg.sample_sizes.size();
  const std::size_t estimators = cfg.estimators.size();
  const std::size_t cells = sizes * cfg.trials;
  // results[(size * trials + trial) * estimators + e]
  std::vector<ResultRow> results(cells * estimators);

  parallel_for(cells, cfg.workers, [&](std::size_t cell) {
    const std::size_t s = cell / cfg.trials;
    const std::uint64_t trial = cell % cfg.trials;
    const std::uint64_t size = cfg.sample_sizes[s].resolve(n);
    const std::uint64_t seed = trial_seed(cfg.seed, s, trial);
    const auto counts = draw_trial_sample(cfg, dist, sampler, size, seed);
    const auto opts = trial_options(cfg, size);

    for (std::size_t e = 0; e < estimators; ++e) {
      ResultRow row{to_string(cfg.estimators[e]), size, trial, 0.0, 0.0, true_support, 0.0,
                    std::nullopt, seed};
      switch (cfg.estimators[e]) {
        case EstimatorKind::learned: {
          const auto sel = select_base(counts, pred, n, degree, 2, opts);
          row.estimate_raw = sel.report.estimate;
          row.estimate_clamped = sel.report.clamped_estimate;
          row.base = sel.base;
          break;
        }
        case EstimatorKind::wy: {
          const auto rep = wy_estimate(counts, n, degree, opts);
          row.estimate_raw = rep.estimate;
          row.estimate_clamped = rep.clamped_estimate;
          break;
        }
        case EstimatorKind::cr: {
          row.estimate_raw = counts.empty() ? 0.0 : cr_estimate(counts, pred, n);
          row.estimate_clamped = std::min(
              static_cast<double>(n),
              std::max(static_cast<double>(counts.distinct()), row.estimate_raw));
          break;
        }
        case EstimatorKind::naive: {
          row.estimate_raw = static_cast<double>(naive_estimate(counts));
          row.estimate_clamped = row.estimate_raw;
          break;
        }
      }
      row.rel_error = relative_error(row.estimate_clamped, true_support);
      results[cell * estimators + e] = std::move(row);
    }
  });

  ExperimentResult out;
  out.rows.reserve(results.size());
  for (std::size_t e = 0; e < estimators; ++e) {
    for (std::size_t cell = 0; cell < cells; ++cell) {
      out.rows.push_back(std::move(results[cell * estimators + e]));
    }
  }
  out.summary = summarize(out.rows);
  return out;
}

SweepResult base_sweep(const ExperimentConfig& cfg, const std::vector<double>& bases) {
  return base_sweep(cfg, make_workload(cfg), bases);
}

SweepResult base_sweep(const ExperimentConfig& cfg, const Workload& workload,
                       const std::vector<double>& bases) {
  validate(cfg);
  if (bases.empty()) throw ConfigError("bases", "at least one base required");
  for (std::size_t i = 0; i < bases.size(); ++i) {
    if (!(bases[i] > 1.0)) throw ConfigError("bases[" + std::to_string(i) + "]", "must be > 1");
  }
  const auto& dist = workload.distribution;
  const std::uint64_t n = dist.n();
  const std::uint64_t true_support = dist.support_size();
  const int degree = resolve_degree(cfg, n);
  const AliasSampler sampler(dist);
  const std::uint64_t size = cfg.sample_sizes.front().resolve(n);
  const auto opts = trial_options(cfg, size);

  std::vector<ShiftedPolynomial> polys;
  polys.reserve(bases.size());
  for (const double b : bases) polys.push_back(shifted_polynomial(degree, b * b));

  const std::size_t trials = cfg.trials;
  std::vector<double> errors(bases.size() * trials);
  std::vector<double> failing(bases.size() * trials);
  std::vector<double> wy_errors(trials);

  parallel_for(trials, cfg.workers, [&](std::size_t trial) {
    const std::uint64_t seed = trial_seed(cfg.seed, 0, trial);
    const auto counts = draw_trial_sample(cfg, dist, sampler, size, seed);
    const auto obs = observe(counts, workload.predictor);
    for (std::size_t b = 0; b < bases.size(); ++b) {
      const auto rep = learned_estimate(obs, counts.total(), n, bases[b], polys[b], opts);
      const double substituted = naive_substituted_estimate(rep);
      const double clamped =
          std::min(static_cast<double>(n),
                   std::max(static_cast<double>(rep.distinct_seen), substituted));
      errors[b * trials + trial] = relative_error(clamped, true_support);
      failing[b * trials + trial] = sanity_check(rep.intervals).failing_fraction;
    }
    wy_errors[trial] =
        relative_error(wy_estimate(counts, n, degree, opts).clamped_estimate, true_support);
  });

  SweepResult out;
  out.sample_size = size;
  for (std::size_t b = 0; b < bases.size(); ++b) {
    const auto first = errors.begin() + static_cast<std::ptrdiff_t>(b * trials);
    const auto fail_first = failing.begin() + static_cast<std::ptrdiff_t>(b * trials);
    double fail_mean = 0.0;
    for (auto it = fail_first; it != fail_first + static_cast<std::ptrdiff_t>(trials); ++it) {
      fail_mean += *it;
    }
    out.rows.push_back({bases[b],
                        lower_median(std::vector<double>(
                            first, first + static_cast<std::ptrdiff_t>(trials))),
                        fail_mean / static_cast<double>(trials)});
  }
  out.wy_median_rel_error = lower_median(wy_errors);
  return out;
}

void write_rows_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "estimator,sample_size,trial,estimate_raw,estimate_clamped,true_support,rel_error,base,"
         "seed\n";
  for (const auto& r : rows) {
    out << r.estimator << ',' << r.sample_size << ',' << r.trial << ','
        << csv::format_double(r.estimate_raw) << ',' << csv::format_double(r.estimate_clamped)
        << ',' << r.true_support << ',' << csv::format_double(r.rel_error) << ','
        << format_optional(r.base) << ',' << r.seed << '\n';
  }
}

void write_summary_csv(const std::vector<SummaryRow>& summary, std::ostream& out) {
  out << "estimator,sample_size,median_rel_error,std_rel_error,trials\n";
  for (const auto& s : summary) {
    out << s.estimator << ',' << s.sample_size << ',' << csv::format_double(s.median_rel_error)
        << ',' << csv::format_double(s.std_rel_error) << ',' << s.trials << '\n';
  }
}

void write_sweep_csv(const SweepResult& sweep, std::ostream& out) {
  out << "base,median_rel_error,failing_fraction\n";
  for (const auto& r : sweep.rows) {
    out << csv::format_double(r.base) << ',' << csv::format_double(r.median_rel_error) << ','
        << csv::format_double(r.failing_fraction) << '\n';
  }
  out << "wy," << csv::format_double(sweep.wy_median_rel_error) << ",0\n";
}

}  // namespace supest
