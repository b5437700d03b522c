#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace flatten {

/// Real polynomial, coefficients in ascending degree order.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs);
  Polynomial(std::initializer_list<double> coeffs) : Polynomial(std::vector<double>(coeffs)) {}

  static Polynomial monomial(std::size_t degree, double c = 1.0);

  /// -1 for the zero polynomial.
  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const noexcept { return coeffs_.empty(); }
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }

  double operator()(double x) const noexcept;
  Polynomial derivative(unsigned order = 1) const;

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend bool operator==(const Polynomial& a, const Polynomial& b) = default;

 private:
  void trim();
  std::vector<double> coeffs_;
};

}  // namespace flatten
