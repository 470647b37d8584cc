#include "supest/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include <boost/rational.hpp>

#include "numeric.hpp"
#include "supest/csv.hpp"

namespace supest {

namespace {

__extension__ typedef unsigned __int128 u128;

constexpr double kSumTolerance = 1e-9;
constexpr double kFileSumTolerance = 1e-6;
constexpr double kMassSlack = 1e-12;

using Rational = boost::rational<std::int64_t>;

std::int64_t binomial(int n, int k) {
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void check_k(int k) {
  if (k < 1 || k > kMaxHardInstanceK) {
    throw std::invalid_argument("hard instance k must be in [1, " +
                                std::to_string(kMaxHardInstanceK) + "], got " +
                                std::to_string(k));
  }
}

Fraction to_fraction(const Rational& r) { return Fraction{r.numerator(), r.denominator()}; }

}  // namespace

Distribution::Distribution(std::uint64_t n, std::vector<Mass> entries)
    : n_(n), entries_(std::move(entries)) {
  if (n_ == 0) throw std::invalid_argument("distribution needs n >= 1");
  if (entries_.empty()) throw std::invalid_argument("distribution needs a nonempty support");
  std::sort(entries_.begin(), entries_.end(),
            [](const Mass& a, const Mass& b) { return a.id < b.id; });
  const double floor = 1.0 / static_cast<double>(n_) - kMassSlack;
  detail::CompensatedSum total;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (i > 0 && entries_[i - 1].id == e.id) {
      throw std::invalid_argument("duplicate element id " + std::to_string(e.id));
    }
    if (!(e.prob > 0.0) || e.prob > 1.0 + kMassSlack) {
      throw std::invalid_argument("probability of id " + std::to_string(e.id) +
                                  " out of (0, 1]: " + csv::format_double(e.prob));
    }
    if (e.prob < floor) {
      throw std::invalid_argument("probability of id " + std::to_string(e.id) +
                                  " is below 1/n with n=" + std::to_string(n_));
    }
    total.add(e.prob);
  }
  if (std::abs(total.value() - 1.0) > kSumTolerance) {
    throw std::invalid_argument("probabilities sum to " + csv::format_double(total.value()) +
                                ", not 1");
  }
}

std::size_t Distribution::index_of(ElementId id) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                                   [](const Mass& m, ElementId v) { return m.id < v; });
  if (it == entries_.end() || it->id != id) return entries_.size();
  return static_cast<std::size_t>(it - entries_.begin());
}

double Distribution::prob(ElementId id) const {
  const auto i = index_of(id);
  return i == entries_.size() ? 0.0 : entries_[i].prob;
}

bool Distribution::contains(ElementId id) const { return index_of(id) != entries_.size(); }

Distribution zipf_distribution(std::uint64_t domain_size, double exponent) {
  if (domain_size == 0) throw std::invalid_argument("zipf domain size must be >= 1");
  if (!(exponent >= 0.0)) throw std::invalid_argument("zipf exponent must be >= 0");
  std::vector<double> weights(domain_size);
  detail::CompensatedSum norm;
  for (std::uint64_t i = 0; i < domain_size; ++i) {
    weights[i] = std::pow(static_cast<double>(i + 1), -exponent);
    norm.add(weights[i]);
  }
  std::vector<Mass> entries;
  entries.reserve(domain_size);
  double min_prob = 1.0;
  for (std::uint64_t i = 0; i < domain_size; ++i) {
    const double p = weights[i] / norm.value();
    min_prob = std::min(min_prob, p);
    entries.push_back({i + 1, p});
  }
  const auto n = static_cast<std::uint64_t>(detail::tight_domain_size(min_prob));
  return Distribution(n, std::move(entries));
}

Distribution uniform_distribution(std::uint64_t support, std::uint64_t n) {
  if (support == 0 || n < support) {
    throw std::invalid_argument("uniform distribution needs 1 <= support <= n");
  }
  std::vector<Mass> entries;
  entries.reserve(support);
  const double p = 1.0 / static_cast<double>(support);
  for (std::uint64_t i = 1; i <= support; ++i) entries.push_back({i, p});
  return Distribution(n, std::move(entries));
}

Distribution empirical_distribution(const std::map<ElementId, std::uint64_t>& counts) {
  std::uint64_t total = 0;
  for (const auto& [id, c] : counts) total += c;
  if (total == 0) throw std::invalid_argument("empirical distribution needs a positive count");
  std::vector<Mass> entries;
  entries.reserve(counts.size());
  for (const auto& [id, c] : counts) {
    if (c > 0) entries.push_back({id, static_cast<double>(c) / static_cast<double>(total)});
  }
  return Distribution(total, std::move(entries));
}

double power_sum(const Distribution& d, int r) {
  if (r < 1) throw std::invalid_argument("power_sum needs r >= 1");
  detail::CompensatedSum s;
  for (const auto& e : d.entries()) s.add(std::pow(e.prob, r));
  return s.value();
}

std::vector<Fraction> hard_instance_coefficients(int k) {
  check_k(k);
  const std::int64_t pow2 = std::int64_t{1} << (k - 1);
  std::vector<Fraction> out;
  for (int i = 0; i <= k; ++i) {
    const std::int64_t sign = (i % 2 == 0) ? 1 : -1;
    out.push_back(to_fraction(Rational(sign * binomial(k, i), pow2 * (k + i))));
  }
  return out;
}

Fraction hard_instance_epsilon(int k) {
  check_k(k);
  const std::int64_t pow2 = std::int64_t{1} << (k - 1);
  return to_fraction(Rational(1, k * pow2 * binomial(2 * k, k)));
}

std::uint64_t hard_instance_lcm(int k) {
  check_k(k);
  std::uint64_t l = std::uint64_t{1} << (k - 1);
  for (int j = k; j <= 2 * k; ++j) l = std::lcm(l, static_cast<std::uint64_t>(j));
  return l;
}

std::uint64_t hard_instance_exact_lcm(int k) {
  std::uint64_t l = 1;
  for (const auto& a : hard_instance_coefficients(k)) {
    l = std::lcm(l, static_cast<std::uint64_t>(a.den));
  }
  return l;
}

std::uint64_t exact_hard_instance_n(int k, std::uint64_t target) {
  const std::uint64_t l = hard_instance_exact_lcm(k);
  const std::uint64_t multiples = std::max<std::uint64_t>(1, (target + l / 2) / l);
  return multiples * l;
}

HardInstancePair build_hard_instance(int k, std::uint64_t n) {
  check_k(k);
  const std::uint64_t min_n = 10ull * static_cast<std::uint64_t>(k) << k;
  if (n < min_n) {
    throw std::invalid_argument("hard instance with k=" + std::to_string(k) + " needs n >= " +
                                std::to_string(min_n) + ", got " + std::to_string(n));
  }
  auto exact = hard_instance_coefficients(k);
  const double nd = static_cast<double>(n);

  std::vector<Mass> p_entries;
  std::vector<Mass> q_entries;
  // Assigned mass in units of 1/n; stays integral so padding is exact.
  std::uint64_t p_units = 0;
  std::uint64_t q_units = 0;
  for (int i = 0; i <= k; ++i) {
    const auto& a = exact[static_cast<std::size_t>(i)];
    const auto mag = static_cast<u128>(a.num < 0 ? -a.num : a.num);
    const auto count = static_cast<std::uint64_t>(mag * n / static_cast<u128>(a.den));
    const auto size = static_cast<std::uint64_t>(k + i);
    auto& side = a.num > 0 ? p_entries : q_entries;
    auto& units = a.num > 0 ? p_units : q_units;
    const double prob = static_cast<double>(size) / nd;
    for (std::uint64_t c = 0; c < count; ++c) side.push_back({side.size(), prob});
    units += count * size;
  }
  if (p_units > n || q_units > n) throw std::logic_error("hard instance overfills its mass");

  const std::uint64_t p_core = p_entries.size();
  const std::uint64_t q_core = q_entries.size();
  const std::uint64_t p_pad = n - p_units;
  const std::uint64_t q_pad = n - q_units;
  for (std::uint64_t c = 0; c < p_pad; ++c) p_entries.push_back({p_entries.size(), 1.0 / nd});
  for (std::uint64_t c = 0; c < q_pad; ++c) q_entries.push_back({q_entries.size(), 1.0 / nd});

  std::vector<double> coeffs;
  for (const auto& a : exact) coeffs.push_back(a.value());

  return HardInstancePair{k,
                          n,
                          Distribution(n, std::move(p_entries)),
                          Distribution(n, std::move(q_entries)),
                          hard_instance_epsilon(k).value(),
                          std::move(coeffs),
                          std::move(exact),
                          p_core,
                          q_core,
                          p_pad,
                          q_pad};
}

// ---------------------------------------------------------------------------

void save_distribution(const Distribution& d, std::ostream& out) {
  out << "# n=" << d.n() << '\n';
  out << "id,prob\n";
  for (const auto& e : d.entries()) out << e.id << ',' << csv::format_double(e.prob) << '\n';
}

void save_distribution(const Distribution& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_distribution(d, out);
}

Distribution load_distribution(std::istream& in, const std::string& source) {
  csv::LineReader reader(in, source);
  std::string line;
  std::uint64_t n = 0;
  bool have_header = false;
  while (reader.next(line)) {
    if (line.rfind("#", 0) == 0) {
      const auto body = csv::trim(std::string_view(line).substr(1));
      if (body.rfind("n=", 0) == 0 && (!csv::parse_u64(body.substr(2), n) || n == 0)) {
        reader.fail("malformed n in comment line");
      }
      continue;
    }
    if (csv::trim(line) != "id,prob") reader.fail("expected header 'id,prob'");
    have_header = true;
    break;
  }
  if (!have_header) reader.fail("empty distribution file");

  std::vector<Mass> entries;
  detail::CompensatedSum total;
  double min_prob = 1.0;
  while (reader.next(line)) {
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    Mass m{};
    if (fields.size() != 2 || !csv::parse_u64(fields[0], m.id) ||
        !csv::parse_double(fields[1], m.prob)) {
      reader.fail("expected '<id>,<probability>'");
    }
    if (!(m.prob > 0.0) || m.prob > 1.0) reader.fail("probability outside (0, 1]");
    total.add(m.prob);
    min_prob = std::min(min_prob, m.prob);
    entries.push_back(m);
  }
  if (entries.empty()) reader.fail("distribution file has no rows");
  const double sum = total.value();
  if (std::abs(sum - 1.0) > kFileSumTolerance) {
    reader.fail("probabilities sum to " + csv::format_double(sum) + ", not 1");
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    for (auto& e : entries) e.prob /= sum;
    min_prob /= sum;
  }
  if (n == 0) n = static_cast<std::uint64_t>(detail::tight_domain_size(min_prob));
  try {
    return Distribution(n, std::move(entries));
  } catch (const std::invalid_argument& e) {
    reader.fail(e.what());
  }
}

Distribution load_distribution(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load_distribution(in, path.string());
}

TokenCounts load_tokens(std::istream& in) {
  TokenCounts out;
  std::unordered_map<std::string, ElementId> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto [it, inserted] = ids.try_emplace(line, out.vocabulary.size());
    if (inserted) out.vocabulary.push_back(line);
    ++out.counts[it->second];
  }
  if (out.counts.empty()) throw std::invalid_argument("token stream is empty");
  return out;
}

TokenCounts load_tokens(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load_tokens(in);
}

void save_vocabulary(const TokenCounts& tokens, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "id,token\n";
  for (std::size_t id = 0; id < tokens.vocabulary.size(); ++id) {
    out << id << ',' << tokens.vocabulary[id] << '\n';
  }
}

}  // namespace supest
