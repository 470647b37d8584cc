#include "supest/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "supest/csv.hpp"

namespace supest {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (const auto idx : path) s = mix64(s ^ mix64(idx + 0x632be59bd9b4e019ull));
  return s;
}

namespace {

std::uint64_t poisson_inversion(double mean, Rng& rng) {
  // Sequential search; mean < 10 keeps exp(-mean) well away from underflow.
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  while (u >= cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    const double next = cdf + p;
    if (next == cdf) break;
    cdf = next;
  }
  return k;
}

// W. Hormann, "The transformed rejection method for generating Poisson random
// variables", Insurance: Mathematics and Economics 12 (1993).
std::uint64_t poisson_ptrs(double mean, Rng& rng) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  while (true) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace

std::uint64_t poisson_variate(double mean, Rng& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("poisson mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  return mean < 10.0 ? poisson_inversion(mean, rng) : poisson_ptrs(mean, rng);
}

SampleCounts::SampleCounts(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end());
  for (const auto& [id, c] : entries) {
    if (c == 0) continue;
    if (!entries_.empty() && entries_.back().first == id) {
      entries_.back().second += c;
    } else {
      entries_.emplace_back(id, c);
    }
    total_ += c;
  }
}

std::uint64_t SampleCounts::count(ElementId id) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                                   [](const Entry& e, ElementId v) { return e.first < v; });
  return (it != entries_.end() && it->first == id) ? it->second : 0;
}

AliasSampler::AliasSampler(const Distribution& d) {
  const auto entries = d.entries();
  const std::size_t size = entries.size();
  if (size > std::numeric_limits<std::uint32_t>::max()) {
    throw std::length_error("alias sampler supports at most 2^32 - 1 elements");
  }
  ids_.reserve(size);
  threshold_.assign(size, 1.0);
  alias_.resize(size);
  std::vector<double> scaled(size);
  std::vector<std::uint32_t> small;
  std::vector<std::uint32_t> large;
  for (std::size_t i = 0; i < size; ++i) {
    ids_.push_back(entries[i].id);
    alias_[i] = static_cast<std::uint32_t>(i);
    scaled[i] = entries[i].prob * static_cast<double>(size);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    threshold_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (const auto i : small) threshold_[i] = 1.0;
  for (const auto i : large) threshold_[i] = 1.0;
}

std::size_t AliasSampler::draw_index(Rng& rng) const {
  const double u = rng.uniform() * static_cast<double>(ids_.size());
  const auto i = std::min(static_cast<std::size_t>(u), ids_.size() - 1);
  return (u - static_cast<double>(i)) < threshold_[i] ? i : alias_[i];
}

namespace {

SampleCounts collect(std::span<const ElementId> ids, const std::vector<std::uint64_t>& tally) {
  std::vector<SampleCounts::Entry> entries;
  for (std::size_t i = 0; i < tally.size(); ++i) {
    if (tally[i] > 0) entries.emplace_back(ids[i], tally[i]);
  }
  return SampleCounts(std::move(entries));
}

}  // namespace

SampleCounts draw_fixed(const AliasSampler& sampler, std::uint64_t sample_size, Rng& rng) {
  std::vector<std::uint64_t> tally(sampler.size(), 0);
  for (std::uint64_t t = 0; t < sample_size; ++t) ++tally[sampler.draw_index(rng)];
  return collect(sampler.ids(), tally);
}

SampleCounts draw_fixed(const Distribution& d, std::uint64_t sample_size, Rng& rng) {
  return draw_fixed(AliasSampler(d), sample_size, rng);
}

SampleCounts draw_poissonized(const Distribution& d, double lambda, Rng& rng) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("poissonization rate must be finite and >= 0");
  }
  std::vector<SampleCounts::Entry> entries;
  for (const auto& e : d.entries()) {
    const auto c = poisson_variate(lambda * e.prob, rng);
    if (c > 0) entries.emplace_back(e.id, c);
  }
  return SampleCounts(std::move(entries));
}

SampleCounts draw_poissonized_by_total(const AliasSampler& sampler, double lambda, Rng& rng) {
  const auto total = poisson_variate(lambda, rng);
  return draw_fixed(sampler, total, rng);
}

void save_counts(const SampleCounts& counts, std::ostream& out) {
  out << "id,count\n";
  for (const auto& [id, c] : counts.entries()) out << id << ',' << c << '\n';
}

void save_counts(const SampleCounts& counts, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_counts(counts, out);
}

SampleCounts load_counts(std::istream& in, const std::string& source) {
  csv::LineReader reader(in, source);
  std::string line;
  if (!reader.next(line)) reader.fail("empty counts file");
  if (csv::trim(line) != "id,count") reader.fail("expected header 'id,count'");
  std::vector<SampleCounts::Entry> entries;
  while (reader.next(line)) {
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    SampleCounts::Entry e{};
    if (fields.size() != 2 || !csv::parse_u64(fields[0], e.first) ||
        !csv::parse_u64(fields[1], e.second) || e.second == 0) {
      reader.fail("expected '<id>,<positive count>'");
    }
    if (!entries.empty() && entries.back().first >= e.first) {
      reader.fail("ids must be strictly increasing");
    }
    entries.push_back(e);
  }
  return SampleCounts(std::move(entries));
}

SampleCounts load_counts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load_counts(in, path.string());
}

}  // namespace supest
