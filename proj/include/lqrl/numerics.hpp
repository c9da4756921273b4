#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace lqrl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct SingularityError : std::runtime_error {
  SingularityError(const std::string& what, double condition_estimate)
      : std::runtime_error(what + " (condition estimate " +
                           std::to_string(condition_estimate) + ")"),
        condition(condition_estimate) {}
  double condition;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Seeded random stream. The engine is std::mt19937_64, whose output sequence
// is fixed by the C++ standard, so the same seed reproduces bit-for-bit on
// every platform. uniform() takes the top 53 bits of one engine draw;
// standard_normal() is Box-Muller on two fresh uniforms (cosine branch only).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double standard_normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  Vector standard_normal_vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = standard_normal();
    return v;
  }

  // uniform integer in [0, n)
  int uniform_int(int n) {
    if (n <= 0) throw DomainError("uniform_int: n must be positive");
    const int k = static_cast<int>(uniform() * n);
    return k < n ? k : n - 1;
  }

  // samples index i with probability probs[i]; probs must be nonnegative and
  // sum to 1 within 1e-6 (renormalized internally)
  int choice(const Vector& probs) {
    if (probs.size() == 0) throw DomainError("choice: empty probability vector");
    double sum = 0.0;
    for (int i = 0; i < probs.size(); ++i) {
      if (probs(i) < 0.0) throw DomainError("choice: negative probability");
      sum += probs(i);
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw DomainError("choice: probabilities sum to " + std::to_string(sum));
    const double u = uniform();
    double cumulative = 0.0;
    for (int i = 0; i < probs.size(); ++i) {
      cumulative += probs(i) / sum;
      if (u < cumulative) return i;
    }
    return static_cast<int>(probs.size()) - 1;
  }

  // independent child stream with a seed drawn from this one
  RngStream fork() { return RngStream(next_u64()); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

// Row-wise upper-triangular vectorization of a symmetric n x n matrix:
// [g11,...,g1n, g22,...,g2n, ..., gnn].
struct SymVec {
  int n = 0;
  Vector data;
};

inline int sym_vec_length(int n) { return n * (n + 1) / 2; }

inline SymVec vecs(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw DimensionError("vecs: matrix must be square and nonempty");
  const int n = static_cast<int>(m.rows());
  const double asymmetry = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asymmetry > 1e-9)
    throw DomainError("vecs: matrix asymmetry " + std::to_string(asymmetry) +
                      " exceeds 1e-9");
  const Matrix sym = 0.5 * (m + m.transpose());
  SymVec out;
  out.n = n;
  out.data.resize(sym_vec_length(n));
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out.data(k++) = sym(i, j);
  return out;
}

// Quadratic monomial vector [v1^2, 2 v1 v2, ..., 2 v1 vn, v2^2, ..., vn^2],
// chosen so that dot(vecs(G), vecv(z)) == z' G z.
inline SymVec vecv(const Vector& v) {
  if (v.size() == 0) throw DimensionError("vecv: empty vector");
  const int n = static_cast<int>(v.size());
  SymVec out;
  out.n = n;
  out.data.resize(sym_vec_length(n));
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      out.data(k++) = (i == j) ? v(i) * v(i) : 2.0 * v(i) * v(j);
  return out;
}

inline Matrix mat_from_vecs(const SymVec& s, int n) {
  if (s.data.size() != sym_vec_length(n))
    throw DimensionError("mat_from_vecs: vector length " +
                         std::to_string(s.data.size()) +
                         " does not match dimension " + std::to_string(n));
  Matrix m(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      m(i, j) = s.data(k);
      m(j, i) = s.data(k);
      ++k;
    }
  return m;
}

namespace detail {

struct SvdSolver {
  Eigen::JacobiSVD<Matrix> svd;
  double condition;

  explicit SvdSolver(const Matrix& x)
      : svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV) {
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    condition = smin > 0.0 ? sv(0) / smin
                           : std::numeric_limits<double>::infinity();
  }
};

}  // namespace detail

// theta = argmin |X theta - y|^2, solved through an orthogonal factorization
// rather than the normal equations.
inline Matrix least_squares(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows())
    throw DimensionError("least_squares: X and y row counts differ");
  if (x.rows() < x.cols())
    throw DimensionError("least_squares: fewer rows than unknowns");
  detail::SvdSolver solver(x);
  if (!(solver.condition < 1e12))
    throw SingularityError("least_squares: rank-deficient design matrix",
                           solver.condition);
  return solver.svd.solve(y);
}

inline Vector least_squares(const Matrix& x, const Vector& y) {
  return Vector(least_squares(x, Matrix(y)));
}

// theta = (Z'X)^-1 Z'y; reduces to least squares when Z == X.
inline Vector instrumental_variable_regression(const Matrix& x,
                                               const Vector& y,
                                               const Matrix& z) {
  if (x.rows() != y.size() || z.rows() != x.rows() || z.cols() != x.cols())
    throw DimensionError("instrumental_variable_regression: shape mismatch");
  const Matrix zx = z.transpose() * x;
  Eigen::FullPivLU<Matrix> lu(zx);
  if (!lu.isInvertible())
    throw SingularityError(
        "instrumental_variable_regression: Z'X is singular "
        "(data may lack excitation)",
        1.0 / std::max(lu.rcond(), std::numeric_limits<double>::min()));
  return lu.solve(z.transpose() * y);
}

inline double spectral_radius(const Matrix& m) {
  if (m.rows() != m.cols())
    throw DimensionError("spectral_radius: matrix must be square");
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

struct DareSolution {
  Matrix value;  // P
  Matrix gain;   // K, stabilizing A + B K
};

// Fixed-point iteration on the Riccati recursion starting from P = Q.
inline DareSolution solve_dare(const Matrix& a, const Matrix& b,
                               const Matrix& qw, const Matrix& rw,
                               int max_iterations = 10000,
                               double tolerance = 1e-12) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.cols());
  if (a.cols() != n || b.rows() != n || qw.rows() != n || qw.cols() != n ||
      rw.rows() != m || rw.cols() != m)
    throw DimensionError("solve_dare: inconsistent matrix dimensions");
  Matrix p = qw;
  for (int it = 0; it < max_iterations; ++it) {
    const Matrix bpa = b.transpose() * p * a;
    const Matrix gram = rw + b.transpose() * p * b;
    Matrix next = a.transpose() * p * a -
                  bpa.transpose() * gram.ldlt().solve(bpa) + qw;
    next = 0.5 * (next + next.transpose());
    const double step = (next - p).cwiseAbs().maxCoeff();
    p = next;
    if (step <= tolerance) {
      const Matrix gram_final = rw + b.transpose() * p * b;
      DareSolution out;
      out.value = p;
      out.gain = -gram_final.ldlt().solve(b.transpose() * p * a);
      return out;
    }
  }
  throw ConvergenceError("solve_dare: no fixed point within " +
                         std::to_string(max_iterations) + " iterations");
}

// P_K solving P = Qw + K'RwK + (A+BK)' P (A+BK), via the n^2 x n^2 linear
// system (I - M' (x) M') vec(P) = vec(Qw + K'RwK). Requires A+BK stable.
inline Matrix solve_policy_lyapunov(const Matrix& a, const Matrix& b,
                                    const Matrix& qw, const Matrix& rw,
                                    const Matrix& k) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.cols());
  if (k.rows() != m || k.cols() != n)
    throw DimensionError("solve_policy_lyapunov: gain shape mismatch");
  const Matrix closed = a + b * k;
  if (spectral_radius(closed) >= 1.0)
    throw DomainError("solve_policy_lyapunov: unstable closed loop");
  const Matrix cost = qw + k.transpose() * rw * k;
  const Matrix mt = closed.transpose();
  Matrix system = Matrix::Identity(n * n, n * n);
  // kron(M', M'): vec(M' P M) = kron(M', M') vec(P), column-major vec
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
          system(j * n + i, c * n + r) -= mt(i, r) * mt(j, c);
  Vector rhs(n * n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) rhs(c * n + r) = cost(r, c);
  const Vector sol = system.partialPivLu().solve(rhs);
  Matrix p(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) p(r, c) = sol(c * n + r);
  return 0.5 * (p + p.transpose());
}

struct AdamState {
  Matrix first_moment;
  Matrix second_moment;
  long long step = 0;
  double step_size = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState(int rows, int cols, double step_size_ = 0.1, double beta1_ = 0.9,
            double beta2_ = 0.999, double epsilon_ = 1e-8)
      : first_moment(Matrix::Zero(rows, cols)),
        second_moment(Matrix::Zero(rows, cols)),
        step_size(step_size_),
        beta1(beta1_),
        beta2(beta2_),
        epsilon(epsilon_) {
    if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
      throw DomainError("AdamState: beta1 and beta2 must lie in (0,1)");
  }
};

// One bias-corrected Adam update. Returns the increment along the gradient
// direction; the caller adds it to the parameter.
inline Matrix adam_step(AdamState& state, const Matrix& gradient) {
  if (gradient.rows() != state.first_moment.rows() ||
      gradient.cols() != state.first_moment.cols())
    throw DimensionError("adam_step: gradient shape mismatch");
  state.step += 1;
  state.first_moment =
      state.beta1 * state.first_moment + (1.0 - state.beta1) * gradient;
  state.second_moment = state.beta2 * state.second_moment +
                        (1.0 - state.beta2) * gradient.cwiseProduct(gradient);
  const double m_correction =
      1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double v_correction =
      1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const Matrix m_hat = state.first_moment / m_correction;
  const Matrix v_hat = state.second_moment / v_correction;
  return state.step_size *
         (m_hat.array() / (v_hat.array().sqrt() + state.epsilon)).matrix();
}

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
inline Vector finite_difference_gradient(
    const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector grad(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vector hi = x;
    Vector lo = x;
    hi(i) += h;
    lo(i) -= h;
    grad(i) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return grad;
}

}  // namespace lqrl
