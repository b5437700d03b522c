#include "flatten/rational.hpp"

#include <cmath>
#include <vector>

#include "flatten/error.hpp"

namespace flatten {

Rational to_rational(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidArgument, "cannot convert a non-finite double");
  if (x == 0.0) return Rational(0);
  int exp = 0;
  const double mant = std::frexp(x, &exp);  // x = mant * 2^exp, 0.5 <= |mant| < 1
  const auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  BigInt num(scaled);
  exp -= 53;
  if (exp >= 0) return Rational(num << exp);
  return Rational(num, BigInt(1) << -exp);
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

BigInt binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  std::vector<BigInt> row{1};
  for (unsigned i = 1; i <= n; ++i) {
    std::vector<BigInt> next(i + 1);
    next[0] = 1;
    next[i] = 1;
    for (unsigned j = 1; j < i; ++j) next[j] = row[j - 1] + row[j];
    row = std::move(next);
  }
  return row[k];
}

}  // namespace flatten
