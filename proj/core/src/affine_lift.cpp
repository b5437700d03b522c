#include "flatten/affine_lift.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "flatten/error.hpp"
#include "flatten/numeric.hpp"

namespace flatten {

Eigen::VectorXd moment_point(double x, std::size_t ell) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(ell));
  double power = 1.0;
  for (std::size_t k = 0; k < ell; ++k) {
    power *= x;
    v(static_cast<Eigen::Index>(k)) = power;
  }
  return v;
}

AffineIFS lift(const WeightedIFS& ifs, std::size_t ell) {
  if (ell == 0) throw Error(ErrorCode::kInvalidArgument, "lift dimension must be at least 1");
  const auto n = static_cast<Eigen::Index>(ell);
  AffineIFS out;
  out.ambient_dim = ell;
  out.weights = ifs.weights;
  for (const auto& f : ifs.maps) {
    if (f.lambda == 0.0) throw Error(ErrorCode::kNonContraction, "lift needs nonzero ratios");
    AffineMapND F{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
    // lambda^k C(k,j) (t/lambda)^(k-j) == C(k,j) lambda^j t^(k-j), and
    // -A V(-t/lambda) collapses to (t, t^2, ..., t^ell).
    for (std::size_t k = 1; k <= ell; ++k) {
      for (std::size_t j = 1; j <= k; ++j) {
        const double c = to_double(Rational(binomial(static_cast<unsigned>(k), static_cast<unsigned>(j))));
        F.A(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(j - 1)) =
            c * std::pow(f.lambda, static_cast<double>(j)) * std::pow(f.t, static_cast<double>(k - j));
      }
      F.b(static_cast<Eigen::Index>(k - 1)) = std::pow(f.t, static_cast<double>(k));
    }
    out.maps.push_back(std::move(F));
  }
  return out;
}

double verify_conjugacy(const WeightedIFS& ifs, const AffineIFS& lifted, std::span<const double> xs) {
  if (lifted.maps.size() != ifs.size()) throw Error(ErrorCode::kDimMismatch, "lifted system has a different size");
  const std::size_t ell = lifted.ambient_dim;
  double defect = 0.0;
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    const auto& F = lifted.maps[i];
    if (static_cast<std::size_t>(F.A.rows()) != ell || static_cast<std::size_t>(F.b.size()) != ell) {
      throw Error(ErrorCode::kDimMismatch, "lifted map " + std::to_string(i) + " has the wrong shape");
    }
    for (double x : xs) {
      const Eigen::VectorXd lhs = F(moment_point(x, ell));
      const Eigen::VectorXd rhs = moment_point(ifs.maps[i](x), ell);
      defect = std::max(defect, (lhs - rhs).cwiseAbs().maxCoeff());
    }
  }
  return defect;
}

namespace {

Rational rpow(const Rational& base, std::size_t e) {
  Rational r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= base;
  return r;
}

}  // namespace

RationalAffineMap lift_exact(const RationalMap& f, std::size_t ell) {
  if (f.lambda == 0) throw Error(ErrorCode::kNonContraction, "lift needs nonzero ratios");
  RationalAffineMap F;
  F.A.n = ell;
  F.A.data.assign(ell * ell, Rational(0));
  const Rational a = f.t / f.lambda;
  for (std::size_t k = 1; k <= ell; ++k) {
    for (std::size_t j = 1; j <= k; ++j) {
      F.A(k - 1, j - 1) = rpow(f.lambda, k) * Rational(binomial(static_cast<unsigned>(k), static_cast<unsigned>(j))) *
                          rpow(a, k - j);
    }
  }
  F.b.assign(ell, Rational(0));
  for (std::size_t k = 0; k < ell; ++k) {
    Rational s = 0;
    for (std::size_t j = 0; j < ell; ++j) s += F.A(k, j) * rpow(-a, j + 1);
    F.b[k] = -s;
  }
  return F;
}

Rational verify_conjugacy_exact(std::span<const RationalMap> maps, std::size_t ell, std::span<const Rational> xs) {
  Rational defect = 0;
  for (const auto& f : maps) {
    const RationalAffineMap F = lift_exact(f, ell);
    for (const auto& x : xs) {
      const Rational y = f.lambda * x + f.t;
      for (std::size_t k = 0; k < ell; ++k) {
        Rational lhs = F.b[k];
        for (std::size_t j = 0; j < ell; ++j) lhs += F.A(k, j) * rpow(x, j + 1);
        Rational diff = lhs - rpow(y, k + 1);
        if (diff < 0) diff = -diff;
        if (diff > defect) defect = diff;
      }
    }
  }
  return defect;
}

double spectral_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues()(0);
}

double contraction_threshold(std::size_t ell) {
  return 1.0 / (std::ldexp(1.0, static_cast<int>(2 * ell)) * std::sqrt(static_cast<double>(ell)));
}

ContractingLift ensure_contracting(const WeightedIFS& ifs, std::size_t ell, std::size_t iterate_cap) {
  if (ell == 0) throw Error(ErrorCode::kInvalidArgument, "lift dimension must be at least 1");
  const double r = ifs.max_abs_ratio();
  const double threshold = contraction_threshold(ell);
  std::size_t m = 1;
  double power = r;
  while (!(power < threshold)) {
    power *= r;
    ++m;
  }
  // The threshold assumes translations in [-1, 1]; keep iterating if the
  // direct check disagrees.
  for (;; ++m) {
    ContractingLift out;
    out.m = m;
    out.lifted = lift(iterate(ifs, m, iterate_cap), ell);
    for (const auto& F : out.lifted.maps) out.max_spectral_norm = std::max(out.max_spectral_norm, spectral_norm(F.A));
    if (out.max_spectral_norm < 1.0 - 1e-12) return out;
  }
}

DiscreteMeasure discretize_affine(const AffineIFS& aifs, std::size_t depth, const Eigen::VectorXd& base,
                                  std::size_t atom_budget) {
  if (depth == 0) throw Error(ErrorCode::kInvalidArgument, "depth must be at least 1");
  const std::size_t ell = aifs.ambient_dim;
  if (static_cast<std::size_t>(base.size()) != ell) throw Error(ErrorCode::kDimMismatch, "base point dimension");
  const double count = std::pow(static_cast<double>(aifs.maps.size()), static_cast<double>(depth));
  if (count > static_cast<double>(atom_budget)) {
    throw Error(ErrorCode::kSizeOverflow, format_double(count) + " words exceed the atom budget");
  }
  // Points for words of length k are F_i applied to the points of length k-1,
  // letter i outermost, which keeps lexicographic word order.
  std::vector<Eigen::VectorXd> points{base};
  std::vector<double> weights{1.0};
  for (std::size_t k = 0; k < depth; ++k) {
    std::vector<Eigen::VectorXd> next_points;
    std::vector<double> next_weights;
    next_points.reserve(points.size() * aifs.maps.size());
    next_weights.reserve(points.size() * aifs.maps.size());
    for (std::size_t i = 0; i < aifs.maps.size(); ++i) {
      for (std::size_t w = 0; w < points.size(); ++w) {
        next_points.push_back(aifs.maps[i](points[w]));
        next_weights.push_back(aifs.weights[i] * weights[w]);
      }
    }
    points = std::move(next_points);
    weights = std::move(next_weights);
  }
  std::vector<double> coords;
  coords.reserve(points.size() * ell);
  for (const auto& p : points) coords.insert(coords.end(), p.data(), p.data() + ell);
  return DiscreteMeasure(ell, std::move(coords), std::move(weights));
}

Eigen::VectorXd default_base_point(const WeightedIFS& ifs, std::size_t ell) {
  return moment_point(ifs.maps.front().fixed_point(), ell);
}

void write_affine_ifs(std::ostream& os, const AffineIFS& aifs) {
  os << aifs.ambient_dim << ' ' << aifs.maps.size() << '\n';
  for (const auto& F : aifs.maps) {
    bool first = true;
    for (Eigen::Index r = 0; r < F.A.rows(); ++r) {
      for (Eigen::Index c = 0; c < F.A.cols(); ++c) {
        os << (first ? "" : " ") << format_double(F.A(r, c));
        first = false;
      }
    }
    for (Eigen::Index k = 0; k < F.b.size(); ++k) os << ' ' << format_double(F.b(k));
    os << '\n';
  }
  for (std::size_t i = 0; i < aifs.weights.size(); ++i) os << (i ? " " : "") << format_double(aifs.weights[i]);
  os << '\n';
}

AffineIFS read_affine_ifs(std::istream& is) {
  AffineIFS out;
  std::size_t n = 0;
  if (!(is >> out.ambient_dim >> n) || out.ambient_dim == 0) {
    throw Error(ErrorCode::kParseError, "affine IFS header must be 'ell n'");
  }
  const auto ell = static_cast<Eigen::Index>(out.ambient_dim);
  for (std::size_t i = 0; i < n; ++i) {
    AffineMapND F{Eigen::MatrixXd(ell, ell), Eigen::VectorXd(ell)};
    for (Eigen::Index r = 0; r < ell; ++r) {
      for (Eigen::Index c = 0; c < ell; ++c) {
        if (!(is >> F.A(r, c))) throw Error(ErrorCode::kParseError, "affine IFS map " + std::to_string(i));
      }
    }
    for (Eigen::Index k = 0; k < ell; ++k) {
      if (!(is >> F.b(k))) throw Error(ErrorCode::kParseError, "affine IFS map " + std::to_string(i));
    }
    out.maps.push_back(std::move(F));
  }
  out.weights.resize(n);
  for (auto& w : out.weights) {
    if (!(is >> w)) throw Error(ErrorCode::kParseError, "affine IFS weights");
  }
  return out;
}

}  // namespace flatten
