#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace flatten {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// The exact value of a finite double.
Rational to_rational(double x);
double to_double(const Rational& q);

/// C(n, k) by Pascal's recurrence in exact integers.
BigInt binomial(unsigned n, unsigned k);

}  // namespace flatten
