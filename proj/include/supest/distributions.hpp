#pragma once

// Discrete distributions with the minimum-mass promise (every nonzero
// probability is at least 1/n), plus the generators used by the experiments:
// Zipf, empirical distributions from counts/tokens, and the moment-matched
// hard-instance pair.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace supest {

using ElementId = std::uint64_t;

struct Mass {
  ElementId id;
  double prob;

  friend bool operator==(const Mass&, const Mass&) = default;
};

class Distribution {
 public:
  /// Validates: ids unique, probabilities in [1/n - 1e-12, 1], sum within 1e-9 of 1.
  /// Entries are stored sorted by id.
  Distribution(std::uint64_t n, std::vector<Mass> entries);

  [[nodiscard]] std::uint64_t n() const { return n_; }
  [[nodiscard]] std::size_t support_size() const { return entries_.size(); }
  [[nodiscard]] std::span<const Mass> entries() const { return entries_; }

  /// 0 for ids outside the support.
  [[nodiscard]] double prob(ElementId id) const;
  [[nodiscard]] bool contains(ElementId id) const;
  /// Position of id in entries(), or support_size() when absent.
  [[nodiscard]] std::size_t index_of(ElementId id) const;

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::uint64_t n_;
  std::vector<Mass> entries_;
};

inline std::size_t support_size(const Distribution& d) { return d.support_size(); }

/// probs[i] proportional to i^-exponent for i in 1..domain_size (ids are the
/// ranks). n = ceil(1 / min probability).
Distribution zipf_distribution(std::uint64_t domain_size, double exponent);

/// Uniform over ids 1..support inside a domain with parameter n >= support.
Distribution uniform_distribution(std::uint64_t support, std::uint64_t n);

/// n = total count, probs[i] = counts[i] / n. Zero counts are dropped.
Distribution empirical_distribution(const std::map<ElementId, std::uint64_t>& counts);

/// Sum of p_i^r over the support (compensated).
double power_sum(const Distribution& d, int r);

// ---------------------------------------------------------------------------
// Hard instances: two distributions supported on {k/n, ..., 2k/n} whose first
// k power sums agree while their support sizes differ by eps * n.

struct Fraction {
  std::int64_t num;
  std::int64_t den;

  [[nodiscard]] double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Fraction&, const Fraction&) = default;
};

inline constexpr int kMaxHardInstanceK = 12;

/// a_i = (-1)^i C(k,i) / (2^{k-1} (k+i)), i = 0..k, in lowest terms.
std::vector<Fraction> hard_instance_coefficients(int k);

/// eps = 1 / (k 2^{k-1} C(2k,k)).
Fraction hard_instance_epsilon(int k);

/// lcm(2^{k-1}, k, k+1, ..., 2k). For k >= 2 a multiple of this does not make
/// every a_i * n integral; build_hard_instance rounds down and pads instead.
std::uint64_t hard_instance_lcm(int k);

/// lcm of the denominators of a_0..a_k: multiples make every a_i * n integral.
std::uint64_t hard_instance_exact_lcm(int k);

/// Nearest positive multiple of hard_instance_exact_lcm(k) to target (ties round up).
std::uint64_t exact_hard_instance_n(int k, std::uint64_t target);

struct HardInstancePair {
  int k;
  std::uint64_t n;
  Distribution p;
  Distribution q;
  double eps;
  std::vector<double> coeffs;
  std::vector<Fraction> exact_coeffs;
  // Element counts before padding, and the number of 1/n padding elements.
  std::uint64_t p_core_support;
  std::uint64_t q_core_support;
  std::uint64_t p_padding;
  std::uint64_t q_padding;
};

/// Requires 1 <= k <= 12 and n >= 10 k 2^k. Group i gets floor(|a_i| n)
/// elements of probability (k+i)/n (P for a_i > 0, Q for a_i < 0); leftover
/// mass on each side is filled with 1/n elements.
HardInstancePair build_hard_instance(int k, std::uint64_t n);

// ---------------------------------------------------------------------------
// Files.
//
// Distribution file:
//   # n=<n>            (optional; otherwise n = ceil(1 / min prob))
//   id,prob
//   <id>,<prob>        one row per support element

void save_distribution(const Distribution& d, std::ostream& out);
void save_distribution(const Distribution& d, const std::filesystem::path& path);
Distribution load_distribution(std::istream& in, const std::string& source = "<stream>");
Distribution load_distribution(const std::filesystem::path& path);

/// Token stream: one token per line. Ids are dense and assigned in order of
/// first appearance; vocabulary[id] is the token.
struct TokenCounts {
  std::map<ElementId, std::uint64_t> counts;
  std::vector<std::string> vocabulary;
};

TokenCounts load_tokens(std::istream& in);
TokenCounts load_tokens(const std::filesystem::path& path);

/// Sidecar map with header `id,token`.
void save_vocabulary(const TokenCounts& tokens, const std::filesystem::path& path);

}  // namespace supest
