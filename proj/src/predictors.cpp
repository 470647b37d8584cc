#include "supest/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <variant>

#include "supest/csv.hpp"

namespace supest {

namespace {

struct OracleData {
  Distribution dist;
};

struct NoisyData {
  Distribution dist;
  double b_noise;
  std::uint64_t seed;
};

struct EmpiricalData {
  SampleCounts sample;
};

struct TableData {
  std::vector<std::pair<ElementId, double>> table;  // sorted by id
};

double clamp_unit(double x, double floor) { return std::clamp(x, floor, 1.0); }

double lookup_support(const Distribution& d, ElementId id) {
  const auto i = d.index_of(id);
  if (i == d.support_size()) {
    throw std::out_of_range("predictor queried for id " + std::to_string(id) +
                            " outside the support");
  }
  return d.entries()[i].prob;
}

// u in [1, b], a pure function of (seed, id).
double noise_factor(std::uint64_t seed, ElementId id, double b_noise) {
  const auto bits = mix64(seed ^ mix64(id));
  const double unit = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return 1.0 + (b_noise - 1.0) * unit;
}

}  // namespace

struct Predictor::State {
  std::variant<OracleData, NoisyData, EmpiricalData, TableData> data;
};

double Predictor::predict(ElementId id) const {
  const double lo = floor();
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, OracleData>) {
          return clamp_unit(lookup_support(d.dist, id), lo);
        } else if constexpr (std::is_same_v<T, NoisyData>) {
          const double p = lookup_support(d.dist, id);
          double pred = p / noise_factor(d.seed, id, d.b_noise);
          // Division rounding may push p / pred a hair past b_noise.
          while (p > d.b_noise * pred) pred = std::nextafter(pred, 2.0);
          return std::min(p, clamp_unit(pred, lo));
        } else if constexpr (std::is_same_v<T, EmpiricalData>) {
          const double freq = static_cast<double>(d.sample.count(id)) /
                              static_cast<double>(d.sample.total());
          return clamp_unit(freq, lo);
        } else {
          const auto it = std::lower_bound(
              d.table.begin(), d.table.end(), id,
              [](const std::pair<ElementId, double>& e, ElementId v) { return e.first < v; });
          const double v = (it != d.table.end() && it->first == id) ? it->second : 0.0;
          return clamp_unit(v, lo);
        }
      },
      state_->data);
}

std::string to_string(Predictor::Kind kind) {
  switch (kind) {
    case Predictor::Kind::oracle: return "oracle";
    case Predictor::Kind::noisy_oracle: return "noisy-oracle";
    case Predictor::Kind::empirical: return "empirical";
    case Predictor::Kind::table: return "table";
  }
  return "unknown";
}

Predictor oracle_predictor(const Distribution& d) {
  auto state = std::make_shared<Predictor::State>(Predictor::State{OracleData{d}});
  return Predictor(Predictor::Kind::oracle, d.n(), std::move(state));
}

Predictor noisy_oracle_predictor(const Distribution& d, double b_noise, std::uint64_t seed) {
  if (!(b_noise >= 1.0) || !std::isfinite(b_noise)) {
    throw std::invalid_argument("noisy oracle needs b_noise >= 1");
  }
  auto state =
      std::make_shared<Predictor::State>(Predictor::State{NoisyData{d, b_noise, seed}});
  return Predictor(Predictor::Kind::noisy_oracle, d.n(), std::move(state));
}

Predictor empirical_predictor(const Distribution& d, double fraction, Rng& rng) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw std::invalid_argument("empirical predictor fraction must be in (0, 1]");
  }
  const auto size = static_cast<std::uint64_t>(std::floor(fraction * static_cast<double>(d.n())));
  if (size == 0) throw std::invalid_argument("empirical predictor sample would be empty");
  auto sample = draw_fixed(d, size, rng);
  auto state =
      std::make_shared<Predictor::State>(Predictor::State{EmpiricalData{std::move(sample)}});
  return Predictor(Predictor::Kind::empirical, d.n(), std::move(state));
}

Predictor table_predictor(std::vector<std::pair<ElementId, double>> table, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("table predictor needs n >= 1");
  std::sort(table.begin(), table.end());
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (table[i].first == table[i - 1].first) {
      throw std::invalid_argument("duplicate id " + std::to_string(table[i].first) +
                                  " in predictor table");
    }
  }
  auto state = std::make_shared<Predictor::State>(Predictor::State{TableData{std::move(table)}});
  return Predictor(Predictor::Kind::table, n, std::move(state));
}

Predictor load_table_predictor(std::istream& in, std::uint64_t n, const std::string& source) {
  csv::LineReader reader(in, source);
  std::string line;
  if (!reader.next(line)) reader.fail("empty predictor table");
  if (csv::trim(line) != "id,predicted_prob") reader.fail("expected header 'id,predicted_prob'");
  std::vector<std::pair<ElementId, double>> table;
  while (reader.next(line)) {
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    std::pair<ElementId, double> row{};
    if (fields.size() != 2 || !csv::parse_u64(fields[0], row.first) ||
        !csv::parse_double(fields[1], row.second)) {
      reader.fail("expected '<id>,<predicted probability>'");
    }
    if (row.second < 0.0 || row.second > 1.0) reader.fail("predicted probability outside [0, 1]");
    table.push_back(row);
  }
  try {
    return table_predictor(std::move(table), n);
  } catch (const std::invalid_argument& e) {
    reader.fail(e.what());
  }
}

Predictor load_table_predictor(const std::filesystem::path& path, std::uint64_t n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load_table_predictor(in, n, path.string());
}

void save_predictor_table(const Predictor& pred, std::span<const ElementId> ids,
                          std::ostream& out) {
  out << "id,predicted_prob\n";
  for (const auto id : ids) out << id << ',' << csv::format_double(pred.predict(id)) << '\n';
}

void save_predictor_table(const Predictor& pred, std::span<const ElementId> ids,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_predictor_table(pred, ids, out);
}

std::vector<ElementId> known_ids(const Predictor& pred) {
  std::vector<ElementId> ids;
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, OracleData> || std::is_same_v<T, NoisyData>) {
          for (const auto& e : d.dist.entries()) ids.push_back(e.id);
        } else if constexpr (std::is_same_v<T, EmpiricalData>) {
          for (const auto& e : d.sample.entries()) ids.push_back(e.first);
        } else {
          for (const auto& e : d.table) ids.push_back(e.first);
        }
      },
      pred.state_->data);
  return ids;
}

}  // namespace supest
