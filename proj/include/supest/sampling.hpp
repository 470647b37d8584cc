#pragma once

// Reproducible iid sampling from a Distribution: alias-table draws, fixed-size
// samples, and Poissonized samples (independent per-element Poisson counts).

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "supest/distributions.hpp"

namespace supest {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for an independent substream identified by a path of indices.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Seedable, splittable generator. Single-owner; split() for parallel work.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, {stream})); }

  result_type operator()() { return engine_(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Poisson(mean) variate: sequential inversion below mean 10, Hormann's
/// transformed rejection (PTRS) above.
std::uint64_t poisson_variate(double mean, Rng& rng);

/// Per-element counts N_i (all positive) plus the total N.
class SampleCounts {
 public:
  using Entry = std::pair<ElementId, std::uint64_t>;

  SampleCounts() = default;
  /// Entries are sorted by id; duplicate ids are merged, zero counts dropped.
  explicit SampleCounts(std::vector<Entry> entries);

  [[nodiscard]] std::uint64_t total() const { return total_; }
  [[nodiscard]] std::size_t distinct() const { return entries_.size(); }
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] std::span<const Entry> entries() const { return entries_; }
  [[nodiscard]] std::uint64_t count(ElementId id) const;

  friend bool operator==(const SampleCounts&, const SampleCounts&) = default;

 private:
  std::vector<Entry> entries_;
  std::uint64_t total_ = 0;
};

/// Vose alias table over a distribution's support; O(1) per draw.
class AliasSampler {
 public:
  explicit AliasSampler(const Distribution& d);

  /// Index into the distribution's entries().
  std::size_t draw_index(Rng& rng) const;
  ElementId draw(Rng& rng) const { return ids_[draw_index(rng)]; }
  [[nodiscard]] std::size_t size() const { return ids_.size(); }
  [[nodiscard]] std::span<const ElementId> ids() const { return ids_; }

 private:
  std::vector<double> threshold_;
  std::vector<std::uint32_t> alias_;
  std::vector<ElementId> ids_;
};

SampleCounts draw_fixed(const AliasSampler& sampler, std::uint64_t sample_size, Rng& rng);
SampleCounts draw_fixed(const Distribution& d, std::uint64_t sample_size, Rng& rng);

/// Independent N_i ~ Poisson(lambda p_i) over the support.
SampleCounts draw_poissonized(const Distribution& d, double lambda, Rng& rng);

/// N ~ Poisson(lambda), then N iid draws. Same law as draw_poissonized.
SampleCounts draw_poissonized_by_total(const AliasSampler& sampler, double lambda, Rng& rng);

// SampleCounts file: header `id,count`, one row per seen element.
void save_counts(const SampleCounts& counts, std::ostream& out);
void save_counts(const SampleCounts& counts, const std::filesystem::path& path);
SampleCounts load_counts(std::istream& in, const std::string& source = "<stream>");
SampleCounts load_counts(const std::filesystem::path& path);

}  // namespace supest
