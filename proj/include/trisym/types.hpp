#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <complex>
#include <stdexcept>
#include <string>

namespace trisym {

// Shortest decimal string that parses back to exactly the same double.
inline std::string to_shortest_string(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

using real = double;

template <class T, int M = Eigen::Dynamic, int N = Eigen::Dynamic>
using matrix = Eigen::Matrix<T, M, N>;

template <class T, int M = Eigen::Dynamic>
using vector = Eigen::Matrix<T, M, 1>;

using vec = vector<real>;
using mat = matrix<real>;
using mat3 = matrix<real, 3, 3>;
using vec3 = vector<real, 3>;
using cplx = std::complex<real>;
using cvec3 = vector<cplx, 3>;
using cmat3 = matrix<cplx, 3, 3>;

// Scalar promotion used for determinant-style accumulations.
template <class Scalar>
struct wide_scalar {
  using type = long double;
};
template <>
struct wide_scalar<long double> {
  using type = long double;
};
template <class Scalar>
using wide_t = typename wide_scalar<Scalar>::type;

// Root finding failed to reach the requested residual.
struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An operation that needs all-real roots was given a polynomial with
// genuinely complex ones.
struct NotHyperbolic : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A root-separation dependent factorization was asked for at (numerically)
// coincident roots.
struct RootsNotSeparated : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// The half-step companion run disagrees with the requested resolution by more
// than the integration accuracy contract allows.
struct StepSizeTooCoarse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Cutoff pair fails the pointwise cover (or range) requirement.
struct CutoffOverlapInvalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A grid filter kept no points, so the requested minimum is undefined.
struct EmptyFilteredSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExprParseError : std::invalid_argument {
  ExprParseError(const std::string& what, std::size_t pos)
      : std::invalid_argument(what), position(pos) {}
  std::size_t position;
};

}  // namespace trisym
