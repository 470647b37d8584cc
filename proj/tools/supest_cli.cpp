#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "supest/csv.hpp"
#include "supest/distributions.hpp"
#include "supest/estimators.hpp"
#include "supest/harness.hpp"
#include "supest/predictors.hpp"
#include "supest/sampling.hpp"

namespace fs = std::filesystem;
using namespace supest;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

// Writes to the given path, or stdout when it is empty.
template <typename F>
void emit(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
  } else {
    auto out = open_out(path);
    write(out);
  }
}

fs::path companion(const fs::path& out, const std::string& suffix) {
  auto stem = out.stem().string();
  return out.parent_path() / (stem + suffix + out.extension().string());
}

ExperimentConfig config_from(const Globals& g, bool seed_given) {
  if (g.config.empty()) throw std::runtime_error("--config is required");
  auto cfg = load_config(g.config);
  if (seed_given) cfg.seed = g.seed;
  return cfg;
}

void print_report(const EstimateReport& r, std::ostream& out) {
  out << "interval,left,right,mode,estimate,seen,sanity_ok\n";
  for (const auto& iv : r.intervals) {
    out << iv.index << ',' << csv::format_double(iv.left) << ',' << csv::format_double(iv.right)
        << ',' << (iv.mode == IntervalMode::chebyshev ? "chebyshev" : "count_distinct") << ','
        << csv::format_double(iv.estimate) << ',' << iv.seen << ',' << (iv.sanity_ok ? 1 : 0)
        << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Support size estimation with frequency predictions"};
  app.require_subcommand(1);

  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--out", g.out, "Output path (stdout when omitted)");
  app.add_option("--config", g.config, "Experiment config file");

  // gen-zipf
  auto* zipf = app.add_subcommand("gen-zipf", "Write a Zipf distribution file");
  zipf->fallthrough();
  std::uint64_t zipf_domain = 0;
  double zipf_exp = 1.0;
  zipf->add_option("--domain", zipf_domain, "Domain size")->required()->check(CLI::PositiveNumber);
  zipf->add_option("--exponent", zipf_exp, "Zipf exponent")->capture_default_str();

  // gen-hard-instance
  auto* hard = app.add_subcommand("gen-hard-instance",
                                  "Write a moment-matched pair as <out>_P.csv and <out>_Q.csv");
  hard->fallthrough();
  int hard_k = 1;
  std::uint64_t hard_n = 0;
  bool hard_round = false;
  hard->add_option("-k,--k", hard_k, "Number of matched moments")->required();
  hard->add_option("-n,--n", hard_n, "Domain parameter n")->required();
  hard->add_flag("--round-n", hard_round, "Round n to the nearest multiple making counts exact");

  // gen-predictor
  auto* genpred = app.add_subcommand("gen-predictor", "Write a predictor table");
  genpred->fallthrough();
  std::string gp_dist;
  std::string gp_spec = "empirical:0.1";
  genpred->add_option("--distribution", gp_dist, "Distribution source")->required();
  genpred->add_option("--predictor", gp_spec, "oracle | noisy:<b> | empirical:<fraction>")
      ->capture_default_str();

  // gen-empirical
  auto* genemp = app.add_subcommand("gen-empirical",
                                    "Empirical distribution of a token file (one token per line)");
  genemp->fallthrough();
  std::string ge_tokens;
  std::string ge_vocab;
  genemp->add_option("--tokens", ge_tokens, "Token file")->required()->check(CLI::ExistingFile);
  genemp->add_option("--vocab", ge_vocab, "Optional id,token sidecar path");

  // gen-sample
  auto* gensample = app.add_subcommand("gen-sample", "Draw a sample and write its counts");
  gensample->fallthrough();
  std::string gs_dist;
  double gs_size = 0;
  bool gs_poisson = false;
  gensample->add_option("--distribution", gs_dist, "Distribution source")->required();
  gensample->add_option("--size", gs_size, "Sample size (or Poisson rate)")->required();
  gensample->add_flag("--poisson", gs_poisson, "Poissonized sampling");

  // estimate
  auto* est = app.add_subcommand("estimate", "Single estimate; report CSV plus a summary on stderr");
  est->fallthrough();
  std::string es_dist;
  std::string es_counts;
  std::string es_pred = "oracle";
  std::string es_estimator = "learned";
  double es_size = 0;
  std::optional<double> es_base;
  std::optional<int> es_degree;
  double es_lconst = 0.45;
  double es_threshold = 0.5;
  est->add_option("--distribution", es_dist, "Distribution source (gives n and true support)")
      ->required();
  est->add_option("--counts", es_counts, "Cached sample counts (id,count)");
  est->add_option("--size", es_size, "Sample size to draw when --counts is absent");
  est->add_option("--predictor", es_pred, "oracle | noisy:<b> | empirical:<f> | table:<path>")
      ->capture_default_str();
  est->add_option("--estimator", es_estimator, "learned | wy | cr | naive")
      ->check(CLI::IsMember({"learned", "wy", "cr", "naive"}))
      ->capture_default_str();
  est->add_option("--base", es_base, "Fixed base (learned; skips the base search)");
  est->add_option("--degree", es_degree, "Polynomial degree");
  est->add_option("--l-constant", es_lconst, "Degree constant")->capture_default_str();
  est->add_option("--threshold-constant", es_threshold, "Threshold constant")
      ->capture_default_str();

  // experiment
  auto* exp = app.add_subcommand("experiment",
                                 "Multi-trial experiment; rows to --out, summary to <out>_summary");
  exp->fallthrough();
  std::string ex_summary;
  std::optional<unsigned> ex_workers;
  exp->add_option("--summary", ex_summary, "Summary CSV path");
  exp->add_option("--workers", ex_workers, "Worker threads (0 = all cores)");

  // base-sweep
  auto* sweep = app.add_subcommand("base-sweep", "Error and failing fraction per base");
  sweep->fallthrough();
  std::string sw_bases;
  std::optional<unsigned> sw_workers;
  sweep->add_option("--bases", sw_bases, "Bases, e.g. 2-40 or 2,4,8 (default: config bases)");
  sweep->add_option("--workers", sw_workers, "Worker threads (0 = all cores)");

  CLI11_PARSE(app, argc, argv);
  const bool seed_given = seed_opt->count() > 0;

  try {
    if (*zipf) {
      const auto d = zipf_distribution(zipf_domain, zipf_exp);
      emit(g.out, [&](std::ostream& out) { save_distribution(d, out); });
    } else if (*hard) {
      if (g.out.empty()) throw std::runtime_error("gen-hard-instance requires --out <prefix>");
      const auto n = hard_round ? exact_hard_instance_n(hard_k, hard_n) : hard_n;
      const auto pair = build_hard_instance(hard_k, n);
      save_distribution(pair.p, fs::path(g.out + "_P.csv"));
      save_distribution(pair.q, fs::path(g.out + "_Q.csv"));
      std::cerr << "k=" << pair.k << " n=" << pair.n << " eps=" << pair.eps
                << " support P=" << pair.p.support_size() << " (core " << pair.p_core_support
                << ") Q=" << pair.q.support_size() << " (core " << pair.q_core_support << ")\n";
    } else if (*genpred) {
      const auto d = distribution_from_spec(gp_dist);
      const auto pred = predictor_from_spec(gp_spec, d, g.seed);
      std::vector<ElementId> ids;
      if (pred.kind() == Predictor::Kind::empirical) {
        ids = known_ids(pred);
      } else {
        for (const auto& m : d.entries()) ids.push_back(m.id);
      }
      emit(g.out, [&](std::ostream& out) { save_predictor_table(pred, ids, out); });
    } else if (*genemp) {
      const auto tokens = load_tokens(fs::path(ge_tokens));
      const auto d = empirical_distribution(tokens.counts);
      emit(g.out, [&](std::ostream& out) { save_distribution(d, out); });
      if (!ge_vocab.empty()) save_vocabulary(tokens, ge_vocab);
    } else if (*gensample) {
      const auto d = distribution_from_spec(gs_dist);
      Rng rng(g.seed);
      const auto counts = gs_poisson ? draw_poissonized(d, gs_size, rng)
                                     : draw_fixed(d, static_cast<std::uint64_t>(gs_size), rng);
      emit(g.out, [&](std::ostream& out) { save_counts(counts, out); });
    } else if (*est) {
      const auto d = distribution_from_spec(es_dist);
      const auto pred = predictor_from_spec(es_pred, d, g.seed);
      SampleCounts counts;
      if (!es_counts.empty()) {
        counts = load_counts(fs::path(es_counts));
      } else {
        if (!(es_size >= 1)) throw std::runtime_error("estimate needs --counts or --size");
        Rng rng(derive_seed(g.seed, {1}));
        counts = draw_fixed(d, static_cast<std::uint64_t>(es_size), rng);
      }
      EstimatorOptions opts;
      opts.threshold_constant = es_threshold;
      const auto n = d.n();
      const int degree = es_degree ? *es_degree : default_degree(n, es_lconst);

      EstimateReport report;
      std::optional<std::uint64_t> minimal;
      if (es_estimator == "learned") {
        if (es_base) {
          report = learned_estimate(counts, pred, n, *es_base, degree, opts);
        } else {
          const auto sel = select_base(counts, pred, n, degree, 2, opts);
          report = sel.report;
          if (!sel.degenerate) minimal = sel.minimal_base;
        }
      } else if (es_estimator == "wy") {
        report = wy_estimate(counts, n, degree, opts);
      } else if (es_estimator == "cr") {
        report.estimate = cr_estimate(counts, pred, n);
        report.distinct_seen = counts.distinct();
        report.clamped_estimate = std::min(
            static_cast<double>(n),
            std::max(static_cast<double>(counts.distinct()), report.estimate));
      } else {
        report.estimate = static_cast<double>(naive_estimate(counts));
        report.distinct_seen = counts.distinct();
        report.clamped_estimate = report.estimate;
      }
      emit(g.out, [&](std::ostream& out) { print_report(report, out); });

      const auto truth = d.support_size();
      std::cerr << es_estimator << ": N=" << counts.total() << " distinct=" << counts.distinct()
                << " n=" << n << " L=" << degree;
      if (es_estimator == "learned") std::cerr << " base=" << report.base_used;
      if (minimal) std::cerr << " (minimal passing base " << *minimal << ")";
      std::cerr << "\n  estimate raw=" << csv::format_double(report.estimate)
                << " clamped=" << csv::format_double(report.clamped_estimate)
                << " true=" << truth
                << " rel_error=" << relative_error(report.clamped_estimate, truth) << '\n';
    } else if (*exp) {
      auto cfg = config_from(g, seed_given);
      if (ex_workers) cfg.workers = *ex_workers;
      const auto result = run_experiment(cfg);
      emit(g.out, [&](std::ostream& out) { write_rows_csv(result.rows, out); });
      std::string summary_path = ex_summary;
      if (summary_path.empty() && !g.out.empty()) {
        summary_path = companion(g.out, "_summary").string();
      }
      if (summary_path.empty()) {
        write_summary_csv(result.summary, std::cerr);
      } else {
        auto out = open_out(summary_path);
        write_summary_csv(result.summary, out);
      }
    } else if (*sweep) {
      auto cfg = config_from(g, seed_given);
      if (sw_workers) cfg.workers = *sw_workers;
      if (!sw_bases.empty()) {
        std::istringstream line("bases = " + sw_bases);
        cfg.bases = parse_config(line).bases;
      }
      const auto result = base_sweep(cfg, cfg.bases);
      emit(g.out, [&](std::ostream& out) { write_sweep_csv(result, out); });
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
