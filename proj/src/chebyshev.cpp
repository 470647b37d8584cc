#include "supest/chebyshev.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace supest {

namespace {

// 50 decimal digits. Composition with the affine map cancels up to ~30 digits
// at L = 25, R = 2, which double (or compensated double) cannot absorb.
using Extended = boost::multiprecision::cpp_bin_float_50;

void check_degree(int degree) {
  if (degree < 0) {
    throw std::invalid_argument("chebyshev degree must be nonnegative, got " +
                                std::to_string(degree));
  }
  if (degree > kMaxChebyshevDegree) {
    throw std::out_of_range("chebyshev degree " + std::to_string(degree) +
                            " exceeds cap " + std::to_string(kMaxChebyshevDegree));
  }
}

template <typename T>
std::vector<T> chebyshev_recurrence(int degree) {
  std::vector<T> prev{T(1)};
  if (degree == 0) return prev;
  std::vector<T> cur{T(0), T(1)};
  for (int m = 1; m < degree; ++m) {
    // Q_{m+1} = 2x Q_m - Q_{m-1}
    std::vector<T> next(cur.size() + 1, T(0));
    for (std::size_t k = 0; k < cur.size(); ++k) next[k + 1] = 2 * cur[k];
    for (std::size_t k = 0; k < prev.size(); ++k) next[k] -= prev[k];
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

namespace detail {
struct ExtendedCoeffs {
  std::vector<Extended> a;
};
}  // namespace detail

MonomialPoly chebyshev_coeffs(int degree) {
  check_degree(degree);
  return MonomialPoly{chebyshev_recurrence<double>(degree)};
}

double eval_poly(std::span<const double> coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

ShiftedPolynomial shifted_polynomial(int degree, double ratio) {
  check_degree(degree);
  if (degree < 1) throw std::invalid_argument("shifted polynomial needs degree >= 1");
  if (!(ratio > 1.0) || !std::isfinite(ratio)) {
    throw std::invalid_argument("shifted polynomial needs ratio > 1, got " +
                                std::to_string(ratio));
  }

  const auto q = chebyshev_recurrence<Extended>(degree);
  const Extended r(ratio);
  const Extended slope = Extended(2) / (r - 1);
  const Extended offset = -(r + 1) / (r - 1);

  // Synthetic substitution: Horner over Q_L's coefficients with the linear
  // polynomial (slope*x + offset) in place of x.
  std::vector<Extended> composed(static_cast<std::size_t>(degree) + 1, Extended(0));
  std::size_t len = 0;
  for (int m = degree; m >= 0; --m) {
    for (std::size_t k = len; k-- > 0;) {
      composed[k + 1] += slope * composed[k];
      composed[k] *= offset;
    }
    composed[0] += q[static_cast<std::size_t>(m)];
    len = std::min(len + 1, composed.size());
  }

  // composed[0] = Q_L(offset); normalizing by it pins a_0 = -1 exactly.
  const Extended at_zero = composed[0];
  auto extended = std::make_shared<detail::ExtendedCoeffs>();
  extended->a.reserve(composed.size());
  for (const auto& c : composed) extended->a.push_back(-c / at_zero);

  ShiftedPolynomial p;
  p.degree_ = degree;
  p.ratio_ = ratio;
  p.eps_ = static_cast<double>(Extended(1) / abs(at_zero));
  for (const auto& a : extended->a) {
    p.coeffs_.push_back(static_cast<double>(a));
    if (a == 0) {
      p.log_abs_.push_back(-std::numeric_limits<double>::infinity());
      p.signs_.push_back(0);
    } else {
      p.log_abs_.push_back(static_cast<double>(log(abs(a))));
      p.signs_.push_back(a < 0 ? -1 : 1);
    }
  }
  p.extended_ = std::move(extended);
  return p;
}

double ShiftedPolynomial::coeff(std::uint64_t k) const {
  return k < coeffs_.size() ? coeffs_[k] : 0.0;
}

double ShiftedPolynomial::log_abs_coeff(std::uint64_t k) const {
  return k < log_abs_.size() ? log_abs_[k] : -std::numeric_limits<double>::infinity();
}

int ShiftedPolynomial::coeff_sign(std::uint64_t k) const {
  return k < signs_.size() ? signs_[k] : 0;
}

double ShiftedPolynomial::evaluate(double x) const {
  const Extended xe(x);
  Extended acc(0);
  for (auto it = extended_->a.rbegin(); it != extended_->a.rend(); ++it) acc = acc * xe + *it;
  return static_cast<double>(acc);
}

double epsilon_bound(int degree, double ratio) {
  check_degree(degree);
  if (!(ratio > 1.0)) throw std::invalid_argument("epsilon_bound needs ratio > 1");
  // |Q_L(t)| = cosh(L acosh |t|) for |t| >= 1.
  const Extended r(ratio);
  const Extended t = (r + 1) / (r - 1);
  return static_cast<double>(Extended(1) / cosh(degree * acosh(t)));
}

double correction_term(const ShiftedPolynomial& poly, std::uint64_t k, double scale,
                       double sample_size) {
  if (!(scale > 0.0) || !(sample_size > 0.0)) {
    throw std::invalid_argument("correction_term needs scale > 0 and sample size > 0");
  }
  if (k > static_cast<std::uint64_t>(poly.degree())) return 0.0;
  const int sign = poly.coeff_sign(k);
  if (sign == 0) return 0.0;
  const double kd = static_cast<double>(k);
  const double log_mag = poly.log_abs_coeff(k) + kd * std::log(scale) + std::lgamma(kd + 1.0) -
                         kd * std::log(sample_size);
  if (log_mag > std::log(std::numeric_limits<double>::max())) {
    throw std::overflow_error("correction term overflows at k=" + std::to_string(k) +
                              " (log magnitude " + std::to_string(log_mag) +
                              "); scale/sample size are mis-tuned");
  }
  return sign * std::exp(log_mag);
}

}  // namespace supest
