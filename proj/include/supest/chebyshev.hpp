#pragma once

// Chebyshev polynomials of the first kind in the monomial basis, and the
// shifted/scaled variant P_L that drives every estimator's bias correction:
//
//   P_L(x) = -Q_L((2x - (R+1)) / (R-1)) / Q_L(-(R+1) / (R-1))
//
// P_L(0) = -1 and |P_L(x)| <= eps on [1, R], eps = 1 / |Q_L(-(R+1)/(R-1))|.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace supest {

/// Largest degree accepted by chebyshev_coeffs / shifted_polynomial.
inline constexpr int kMaxChebyshevDegree = 64;

struct MonomialPoly {
  // coeffs[k] multiplies x^k.
  std::vector<double> coeffs;

  [[nodiscard]] int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

/// Monomial coefficients of Q_L(x) = cos(L arccos x), built with the three-term
/// recurrence. Throws std::out_of_range for L > kMaxChebyshevDegree.
MonomialPoly chebyshev_coeffs(int degree);

/// Horner evaluation of sum_k coeffs[k] x^k.
double eval_poly(std::span<const double> coeffs, double x);

namespace detail {
struct ExtendedCoeffs;
}

class ShiftedPolynomial {
 public:
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] double ratio() const { return ratio_; }
  [[nodiscard]] double eps() const { return eps_; }

  // a_k as doubles; a_k = 0 for k > degree().
  [[nodiscard]] std::span<const double> coeffs() const { return coeffs_; }
  [[nodiscard]] double coeff(std::uint64_t k) const;
  [[nodiscard]] double log_abs_coeff(std::uint64_t k) const;
  [[nodiscard]] int coeff_sign(std::uint64_t k) const;

  // Evaluates P_L(x) from the working-precision coefficients. The monomial
  // form cancels heavily on [1, R] (|P_L| ~ eps while sum |a_k| x^k is many
  // orders larger), so double Horner on coeffs() cannot resolve values near eps.
  [[nodiscard]] double evaluate(double x) const;

 private:
  friend ShiftedPolynomial shifted_polynomial(int degree, double ratio);
  ShiftedPolynomial() = default;

  int degree_ = 0;
  double ratio_ = 0.0;
  double eps_ = 0.0;
  std::vector<double> coeffs_;
  std::vector<double> log_abs_;
  std::vector<int> signs_;
  std::shared_ptr<const detail::ExtendedCoeffs> extended_;
};

/// Builds P_L on the scaled interval [1, R]. Requires L >= 1 and R > 1.
ShiftedPolynomial shifted_polynomial(int degree, double ratio);

/// eps = 1 / |Q_L(-(R+1)/(R-1))|, the sup-norm of P_L on [1, R].
double epsilon_bound(int degree, double ratio);

/// a_k * scale^k * k! / N^k, evaluated in log space. Zero for k > L.
/// Throws std::overflow_error when the magnitude exceeds the double range.
double correction_term(const ShiftedPolynomial& poly, std::uint64_t k, double scale,
                       double sample_size);

}  // namespace supest
