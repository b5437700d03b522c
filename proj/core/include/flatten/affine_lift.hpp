#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "flatten/ifs.hpp"
#include "flatten/measures.hpp"
#include "flatten/rational.hpp"

namespace flatten {

/// x -> A x + b on R^ell.
struct AffineMapND {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return A * x + b; }
};

/// Self-affine IFS with a probability vector.
struct AffineIFS {
  std::vector<AffineMapND> maps;
  std::vector<double> weights;
  std::size_t ambient_dim = 0;
};

/// V_ell(x) = (x, x^2, ..., x^ell).
Eigen::VectorXd moment_point(double x, std::size_t ell);

/// Self-affine system whose attractor is V_ell(K): map i has lower-triangular
/// A_i with entries lambda^k C(k,j) (t/lambda)^(k-j) and
/// b_i = -A_i V_ell(-t/lambda). Weights are copied.
AffineIFS lift(const WeightedIFS& ifs, std::size_t ell);

/// Max |F_i(V(x)) - V(f_i(x))| over maps and samples, in double precision.
double verify_conjugacy(const WeightedIFS& ifs, const AffineIFS& lifted, std::span<const double> xs);

/// Exact counterpart: rational IFS data and samples.
struct RationalMap {
  Rational lambda;
  Rational t;
};

struct RationalMatrix {
  std::size_t n = 0;
  std::vector<Rational> data;  // row-major
  const Rational& operator()(std::size_t r, std::size_t c) const { return data[r * n + c]; }
  Rational& operator()(std::size_t r, std::size_t c) { return data[r * n + c]; }
};

struct RationalAffineMap {
  RationalMatrix A;
  std::vector<Rational> b;
};

/// The lift built literally from the defining formula in exact arithmetic.
RationalAffineMap lift_exact(const RationalMap& f, std::size_t ell);

/// Max |F_i(V(x)) - V(f_i(x))| in exact arithmetic; zero when the lift is right.
Rational verify_conjugacy_exact(std::span<const RationalMap> maps, std::size_t ell,
                                std::span<const Rational> xs);

/// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& a);

/// Sufficient threshold 1 / (2^(2 ell) sqrt(ell)) on max|lambda_i|.
double contraction_threshold(std::size_t ell);

struct ContractingLift {
  std::size_t m = 1;           // iterate order used
  AffineIFS lifted;            // lift(iterate(ifs, m), ell)
  double max_spectral_norm = 0.0;
};

/// Least m with max|lambda|^m below the threshold; lifts Phi^m and verifies
/// every spectral norm is below 1 (throws kNonContraction otherwise).
ContractingLift ensure_contracting(const WeightedIFS& ifs, std::size_t ell,
                                   std::size_t iterate_cap = kDefaultIterateCap);

/// Atoms F_w(base) over all words of length `depth`, weights p_w.
DiscreteMeasure discretize_affine(const AffineIFS& aifs, std::size_t depth, const Eigen::VectorXd& base,
                                  std::size_t atom_budget = 10'000'000);

/// Default base point: V_ell(fixed point of the first 1-D map).
Eigen::VectorXd default_base_point(const WeightedIFS& ifs, std::size_t ell);

/// Text: "ell n", then per map a line of row-major A entries followed by b,
/// then a line with the weights; 17 significant digits.
void write_affine_ifs(std::ostream& os, const AffineIFS& aifs);
AffineIFS read_affine_ifs(std::istream& is);

}  // namespace flatten
