#pragma once

// Frequency predictors Pi(i). Every flavor clamps its answer into [1/n, 1]
// and is a pure function of the element id once constructed.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "supest/distributions.hpp"
#include "supest/sampling.hpp"

namespace supest {

class Predictor {
 public:
  enum class Kind { oracle, noisy_oracle, empirical, table };

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] std::uint64_t n() const { return n_; }
  [[nodiscard]] double floor() const { return 1.0 / static_cast<double>(n_); }

  /// Oracle kinds throw std::out_of_range for ids outside the support.
  [[nodiscard]] double predict(ElementId id) const;

  struct State;

 private:
  friend Predictor oracle_predictor(const Distribution& d);
  friend Predictor noisy_oracle_predictor(const Distribution& d, double b_noise,
                                          std::uint64_t seed);
  friend Predictor empirical_predictor(const Distribution& d, double fraction, Rng& rng);
  friend Predictor table_predictor(std::vector<std::pair<ElementId, double>> table,
                                   std::uint64_t n);
  friend std::vector<ElementId> known_ids(const Predictor& pred);

  Predictor(Kind kind, std::uint64_t n, std::shared_ptr<const State> state)
      : kind_(kind), n_(n), state_(std::move(state)) {}

  Kind kind_;
  std::uint64_t n_;
  std::shared_ptr<const State> state_;
};

std::string to_string(Predictor::Kind kind);

/// predict(i) = p_i.
Predictor oracle_predictor(const Distribution& d);

/// predict(i) = p_i / u_i with u_i uniform in [1, b_noise], a pure function of
/// (seed, id). Guarantees predict(i) <= p_i <= b_noise * predict(i).
Predictor noisy_oracle_predictor(const Distribution& d, double b_noise, std::uint64_t seed);

/// Draws one sample of floor(fraction * n) elements; predict(i) is the
/// empirical frequency of i in that sample, floored at 1/n.
Predictor empirical_predictor(const Distribution& d, double fraction, Rng& rng);

/// predict(i) = max(table[i], 1/n); ids missing from the table get 1/n.
Predictor table_predictor(std::vector<std::pair<ElementId, double>> table, std::uint64_t n);

// Predictor table file: header `id,predicted_prob`.
Predictor load_table_predictor(std::istream& in, std::uint64_t n,
                               const std::string& source = "<stream>");
Predictor load_table_predictor(const std::filesystem::path& path, std::uint64_t n);
void save_predictor_table(const Predictor& pred, std::span<const ElementId> ids, std::ostream& out);
void save_predictor_table(const Predictor& pred, std::span<const ElementId> ids,
                          const std::filesystem::path& path);

/// Ids that have an explicit entry in the predictor's backing table or
/// sample (all support ids for the oracle kinds).
std::vector<ElementId> known_ids(const Predictor& pred);

}  // namespace supest
