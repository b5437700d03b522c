#include "flatten/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "flatten/error.hpp"
#include "flatten/numeric.hpp"
#include "flatten/rational.hpp"

namespace flatten {

CurveSpec::CurveSpec(Kind kind, std::vector<Polynomial> components, Interval domain)
    : kind_(kind), components_(std::move(components)), domain_(domain) {
  if (!(domain_.lo <= domain_.hi) || !std::isfinite(domain_.lo) || !std::isfinite(domain_.hi)) {
    throw Error(ErrorCode::kInvalidArgument, "curve domain must be a nonempty closed interval");
  }
  for (const auto& g : components_) {
    for (double c : g.coeffs()) {
      if (!std::isfinite(c)) throw Error(ErrorCode::kInvalidArgument, "curve coefficients must be finite");
    }
  }
}

CurveSpec CurveSpec::moment(std::size_t d, Interval domain) {
  if (d == 0) throw Error(ErrorCode::kInvalidArgument, "moment curve dimension must be positive");
  std::vector<Polynomial> components;
  for (std::size_t k = 2; k <= d; ++k) components.push_back(Polynomial::monomial(k));
  return CurveSpec(Kind::kMoment, std::move(components), domain);
}

CurveSpec CurveSpec::graph(std::vector<Polynomial> components, Interval domain) {
  return CurveSpec(Kind::kGraph, std::move(components), domain);
}

CurveSpec CurveSpec::with_domain(Interval domain) const { return CurveSpec(kind_, components_, domain); }

Interval default_curve_domain(const WeightedIFS& ifs, double inflation) {
  const Interval j = attractor_interval(ifs);
  const double pad = inflation * j.length();
  return {j.lo - pad, j.hi + pad};
}

namespace {

void check_domain(const CurveSpec& c, double x) {
  if (!c.domain().contains(x)) {
    throw Error(ErrorCode::kDomainViolation, "x = " + format_double(x) + " lies outside [" +
                                                 format_double(c.domain().lo) + ", " + format_double(c.domain().hi) +
                                                 "]");
  }
}

}  // namespace

void evaluate_into(const CurveSpec& c, double x, std::span<double> out) {
  out[0] = x;
  const auto& g = c.components();
  for (std::size_t r = 0; r < g.size(); ++r) out[r + 1] = g[r](x);
}

std::vector<double> evaluate(const CurveSpec& c, double x) {
  check_domain(c, x);
  std::vector<double> out(c.ambient_dim());
  evaluate_into(c, x, out);
  return out;
}

SquareMatrix derivative_matrix(const CurveSpec& c, double x) {
  check_domain(c, x);
  const std::size_t d = c.ambient_dim();
  SquareMatrix m{d, std::vector<double>(d * d, 0.0)};
  m(0, 0) = 1.0;
  for (std::size_t r = 1; r < d; ++r) {
    for (std::size_t k = 1; k <= d; ++k) m(r, k - 1) = c.components()[r - 1].derivative(static_cast<unsigned>(k))(x);
  }
  return m;
}

double determinant(SquareMatrix m) {
  const std::size_t n = m.n;
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(m(r, col)) > std::fabs(m(pivot, col))) pivot = r;
    }
    if (m(pivot, col) == 0.0) return 0.0;
    if (pivot != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(m(pivot, k), m(col, k));
      det = -det;
    }
    det *= m(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m(r, col) / m(col, col);
      for (std::size_t k = col; k < n; ++k) m(r, k) -= f * m(col, k);
    }
  }
  return det;
}

double nondegeneracy_det(const CurveSpec& c, double x) { return determinant(derivative_matrix(c, x)); }

namespace {

/// Exact polynomial over Q, ascending coefficients, no trailing zeros.
struct RPoly {
  std::vector<Rational> c;

  void trim() {
    while (!c.empty() && c.back() == 0) c.pop_back();
  }
  bool zero() const { return c.empty(); }
  int degree() const { return static_cast<int>(c.size()) - 1; }

  Rational operator()(const Rational& x) const {
    Rational acc = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
};

RPoly exact(const Polynomial& p) {
  RPoly r;
  for (double v : p.coeffs()) r.c.push_back(to_rational(v));
  r.trim();
  return r;
}

RPoly derivative(const RPoly& p, unsigned order = 1) {
  RPoly r = p;
  for (unsigned o = 0; o < order; ++o) {
    if (r.c.size() <= 1) return {};
    std::vector<Rational> next(r.c.size() - 1);
    for (std::size_t k = 1; k < r.c.size(); ++k) next[k - 1] = Rational(static_cast<long long>(k)) * r.c[k];
    r.c = std::move(next);
  }
  r.trim();
  return r;
}

RPoly mul(const RPoly& a, const RPoly& b) {
  if (a.zero() || b.zero()) return {};
  RPoly r;
  r.c.assign(a.c.size() + b.c.size() - 1, Rational(0));
  for (std::size_t i = 0; i < a.c.size(); ++i) {
    for (std::size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  }
  r.trim();
  return r;
}

RPoly add(const RPoly& a, const RPoly& b, int sign = 1) {
  RPoly r;
  r.c.assign(std::max(a.c.size(), b.c.size()), Rational(0));
  for (std::size_t i = 0; i < a.c.size(); ++i) r.c[i] += a.c[i];
  for (std::size_t i = 0; i < b.c.size(); ++i) r.c[i] += sign > 0 ? b.c[i] : -b.c[i];
  r.trim();
  return r;
}

/// Quotient and remainder of a / b.
std::pair<RPoly, RPoly> divmod(RPoly a, const RPoly& b) {
  RPoly q;
  if (a.degree() < b.degree()) return {q, a};
  q.c.assign(static_cast<std::size_t>(a.degree() - b.degree() + 1), Rational(0));
  while (!a.zero() && a.degree() >= b.degree()) {
    const std::size_t shift = static_cast<std::size_t>(a.degree() - b.degree());
    const Rational f = a.c.back() / b.c.back();
    q.c[shift] = f;
    for (std::size_t k = 0; k < b.c.size(); ++k) a.c[k + shift] -= f * b.c[k];
    a.c.pop_back();
    a.trim();
  }
  q.trim();
  return {q, a};
}

/// Scales to a monic-magnitude leading coefficient (sign kept).
RPoly normalized(RPoly p) {
  if (p.zero()) return p;
  Rational lc = p.c.back();
  if (lc < 0) lc = -lc;
  for (auto& v : p.c) v /= lc;
  return p;
}

RPoly gcd(RPoly a, RPoly b) {
  while (!b.zero()) {
    RPoly r = divmod(a, b).second;
    a = std::move(b);
    b = normalized(std::move(r));
  }
  return normalized(std::move(a));
}

int sign(const Rational& v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

class SturmChain {
 public:
  explicit SturmChain(const RPoly& squarefree) {
    chain_.push_back(normalized(squarefree));
    chain_.push_back(normalized(derivative(squarefree)));
    while (!chain_.back().zero()) {
      RPoly r = divmod(chain_[chain_.size() - 2], chain_.back()).second;
      for (auto& v : r.c) v = -v;
      chain_.push_back(normalized(std::move(r)));
    }
    chain_.pop_back();
  }

  int variations(const Rational& x) const {
    int count = 0;
    int last = 0;
    for (const auto& p : chain_) {
      const int s = sign(p(x));
      if (s == 0) continue;
      if (last != 0 && s != last) ++count;
      last = s;
    }
    return count;
  }

  /// Distinct roots in (a, b].
  int count(const Rational& a, const Rational& b) const { return variations(a) - variations(b); }

  const RPoly& base() const { return chain_.front(); }

 private:
  std::vector<RPoly> chain_;
};

void isolate(const SturmChain& chain, Rational a, Rational b, const Rational& width, std::vector<double>& roots) {
  const int n = chain.count(a, b);
  if (n == 0) return;
  if (n >= 2) {
    const Rational mid = (a + b) / 2;
    isolate(chain, a, mid, width, roots);
    isolate(chain, mid, b, width, roots);
    return;
  }
  if (chain.base()(b) == 0) {
    roots.push_back(to_double(b));
    return;
  }
  while (b - a > width) {
    const Rational mid = (a + b) / 2;
    if (chain.count(a, mid) == 1) {
      if (chain.base()(mid) == 0) {
        roots.push_back(to_double(mid));
        return;
      }
      b = mid;
    } else {
      a = mid;
    }
  }
  roots.push_back(to_double((a + b) / 2));
}

std::vector<double> real_roots_exact(const RPoly& p, Interval range, double width) {
  if (p.zero()) throw Error(ErrorCode::kIdenticallyZero, "cannot isolate the roots of the zero polynomial");
  std::vector<double> roots;
  if (p.degree() == 0) return roots;
  const RPoly squarefree = divmod(p, gcd(p, derivative(p))).first;
  const SturmChain chain(squarefree);
  const Rational lo = to_rational(range.lo);
  const Rational hi = to_rational(range.hi);
  if (chain.base()(lo) == 0) roots.push_back(range.lo);
  isolate(chain, lo, hi, to_rational(width), roots);
  std::sort(roots.begin(), roots.end());
  return roots;
}

RPoly determinant_exact(std::vector<std::vector<RPoly>> m) {
  const std::size_t n = m.size();
  if (n == 0) return RPoly{{Rational(1)}};
  if (n == 1) return m[0][0];
  RPoly det;
  for (std::size_t col = 0; col < n; ++col) {
    if (m[0][col].zero()) continue;
    std::vector<std::vector<RPoly>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<RPoly> row;
      for (std::size_t k = 0; k < n; ++k) {
        if (k != col) row.push_back(m[r][k]);
      }
      minor.push_back(std::move(row));
    }
    det = add(det, mul(m[0][col], determinant_exact(std::move(minor))), col % 2 == 0 ? 1 : -1);
  }
  return det;
}

RPoly determinant_polynomial_exact(const CurveSpec& c) {
  const std::size_t d = c.ambient_dim();
  std::vector<std::vector<RPoly>> g(d - 1, std::vector<RPoly>(d - 1));
  for (std::size_t r = 0; r + 1 < d; ++r) {
    const RPoly comp = exact(c.components()[r]);
    for (std::size_t k = 2; k <= d; ++k) g[r][k - 2] = derivative(comp, static_cast<unsigned>(k));
  }
  return determinant_exact(std::move(g));
}

}  // namespace

Polynomial determinant_polynomial(const CurveSpec& c) {
  const RPoly d = determinant_polynomial_exact(c);
  std::vector<double> coeffs;
  for (const auto& v : d.c) coeffs.push_back(to_double(v));
  return Polynomial(std::move(coeffs));
}

std::vector<double> real_roots(const Polynomial& p, Interval range, double width) {
  return real_roots_exact(exact(p), range, width);
}

IntervalUnion::IntervalUnion(std::vector<Interval> intervals) {
  std::sort(intervals.begin(), intervals.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (const auto& iv : intervals) {
    if (!intervals_.empty() && iv.lo <= intervals_.back().hi) {
      intervals_.back().hi = std::max(intervals_.back().hi, iv.hi);
    } else {
      intervals_.push_back(iv);
    }
  }
}

bool IntervalUnion::contains(double x) const noexcept {
  return std::any_of(intervals_.begin(), intervals_.end(), [&](const Interval& iv) { return iv.contains(x); });
}

std::vector<Interval> IntervalUnion::complement_in(const Interval& domain) const {
  std::vector<Interval> out;
  double cursor = domain.lo;
  for (const auto& iv : intervals_) {
    if (iv.hi < domain.lo || iv.lo > domain.hi) continue;
    if (iv.lo > cursor) out.push_back({cursor, iv.lo});
    cursor = std::max(cursor, iv.hi);
  }
  if (cursor < domain.hi) out.push_back({cursor, domain.hi});
  return out;
}

GoodSetReport good_set_complement(const CurveSpec& c, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "delta must be positive");
  const RPoly d = determinant_polynomial_exact(c);
  if (d.zero()) {
    throw Error(ErrorCode::kIdenticallyZero, "det G vanishes identically: the curve lies in a proper hyperplane");
  }
  const Interval& dom = c.domain();
  GoodSetReport report;
  report.roots = real_roots_exact(d, dom, 1e-13);
  std::vector<Interval> nbhd;
  for (double r : report.roots) nbhd.push_back({std::max(dom.lo, r - delta), std::min(dom.hi, r + delta)});
  report.excluded = IntervalUnion(std::move(nbhd));

  std::vector<double> coeffs;
  for (const auto& v : d.c) coeffs.push_back(to_double(v));
  const Polynomial dp(std::move(coeffs));
  const RPoly slope = derivative(d);
  report.min_abs_det = std::numeric_limits<double>::infinity();
  for (const auto& piece : report.excluded.complement_in(dom)) {
    std::vector<double> candidates{piece.lo, piece.hi};
    if (!slope.zero() && slope.degree() > 0) {
      for (double x : real_roots_exact(slope, piece, 1e-13)) candidates.push_back(x);
    }
    for (double x : candidates) report.min_abs_det = std::min(report.min_abs_det, std::fabs(dp(x)));
  }
  return report;
}

GoodSetFit fit_good_set_exponent(const CurveSpec& c, std::span<const double> deltas) {
  if (deltas.size() < 2) throw Error(ErrorCode::kInsufficientScales, "need at least two deltas");
  GoodSetFit fit;
  std::vector<double> xs, ys;
  for (double delta : deltas) {
    const GoodSetReport r = good_set_complement(c, delta);
    fit.deltas.push_back(delta);
    fit.minima.push_back(r.min_abs_det);
    if (std::isfinite(r.min_abs_det) && r.min_abs_det > 0.0) {
      xs.push_back(std::log(delta));
      ys.push_back(std::log(r.min_abs_det));
    }
  }
  fit.c1 = xs.size() >= 2 ? least_squares(xs, ys).slope : 0.0;
  return fit;
}

}  // namespace flatten
