#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lqrl/numerics.hpp"

using namespace lqrl;

namespace {

Matrix random_symmetric(int n, RngStream& rng) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      m(i, j) = rng.standard_normal();
      m(j, i) = m(i, j);
    }
  return m;
}

Matrix random_matrix(int rows, int cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.standard_normal();
  return m;
}

}  // namespace

TEST_CASE("vecs extracts the row-wise upper triangle") {
  CHECK(vecs(Matrix::Identity(2, 2)).data.isApprox(Vector{{1.0, 0.0, 1.0}}));

  Matrix g(2, 2);
  g << 1, 2, 2, 3;
  const SymVec v = vecs(g);
  CHECK(v.data(0) == 1.0);
  CHECK(v.data(1) == 2.0);
  CHECK(v.data(2) == 3.0);

  // golden ordering lock for n = 3: row-wise upper triangle
  Matrix h(3, 3);
  h << 11, 12, 13,
       12, 22, 23,
       13, 23, 33;
  const SymVec hv = vecs(h);
  const std::vector<double> expected = {11, 12, 13, 22, 23, 33};
  for (int i = 0; i < 6; ++i) CHECK(hv.data(i) == expected[i]);
}

TEST_CASE("vecs rejects bad input") {
  CHECK_THROWS_AS(vecs(Matrix::Zero(2, 3)), DimensionError);
  Matrix skew(2, 2);
  skew << 0, 1e-6, -1e-6, 0;
  CHECK_THROWS_AS(vecs(skew), DomainError);
}

TEST_CASE("vecs round-trips with mat_from_vecs") {
  RngStream rng(7);
  const Matrix m = random_symmetric(4, rng);
  const SymVec v = vecs(m);
  CHECK(v.data.size() == 10);
  CHECK((mat_from_vecs(v, 4) - m).cwiseAbs().maxCoeff() == 0.0);

  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + rng.uniform_int(6);
    const Matrix s = random_symmetric(n, rng);
    CHECK((mat_from_vecs(vecs(s), n) - s).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("vecv matches its defining formula") {
  CHECK(vecv(Vector{{1.0, 0.0}}).data.isApprox(Vector{{1.0, 0.0, 0.0}}));
  CHECK(vecv(Vector{{1.0, 2.0}}).data.isApprox(Vector{{1.0, 4.0, 4.0}}));
  CHECK_THROWS_AS(vecv(Vector(0)), DimensionError);
}

TEST_CASE("dot(vecs(G), vecv(z)) equals the quadratic form") {
  Matrix g(2, 2);
  g << 1, 2, 2, 3;
  CHECK(vecs(g).data.dot(vecv(Vector{{1.0, 1.0}}).data) == Catch::Approx(8.0));

  RngStream rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + rng.uniform_int(8);
    const Matrix s = random_symmetric(n, rng);
    Vector z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.standard_normal();
    const double via_vecs = vecs(s).data.dot(vecv(z).data);
    const double direct = z.dot(s * z);
    CHECK(std::abs(via_vecs - direct) <=
          1e-10 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("mat_from_vecs golden cases") {
  SymVec v;
  v.n = 2;
  v.data = Vector{{1.0, 0.0, 1.0}};
  CHECK(mat_from_vecs(v, 2).isApprox(Matrix::Identity(2, 2)));
  v.data = Vector{{1.0, 2.0, 3.0}};
  Matrix expected(2, 2);
  expected << 1, 2, 2, 3;
  CHECK(mat_from_vecs(v, 2).isApprox(expected));
  CHECK_THROWS_AS(mat_from_vecs(v, 3), DimensionError);
}

TEST_CASE("least squares solves simple fits") {
  Matrix x(2, 1);
  x << 1, 1;
  CHECK(least_squares(x, Vector{{2.0, 2.0}})(0) == Catch::Approx(2.0));

  CHECK(least_squares(Matrix::Identity(2, 2), Vector{{3.0, 5.0}})
            .isApprox(Vector{{3.0, 5.0}}));
}

TEST_CASE("least squares recovers noiseless ARX coefficients") {
  // y(t) = 0.5 y(t-1) + 1.0 u(t-1), regressors [-y(t-1), u(t-1)],
  // true theta = [a1, b1] = [-0.5, 1.0]
  RngStream rng(3);
  const int n_samples = 60;
  std::vector<double> y{0.0}, u;
  for (int t = 0; t < n_samples; ++t) {
    u.push_back(rng.standard_normal());
    y.push_back(0.5 * y.back() + u.back());
  }
  Matrix design(n_samples, 2);
  Vector target(n_samples);
  for (int t = 1; t <= n_samples; ++t) {
    design(t - 1, 0) = -y[t - 1];
    design(t - 1, 1) = u[t - 1];
    target(t - 1) = y[t];
  }
  const Vector theta = least_squares(design, target);
  CHECK(std::abs(theta(0) - (-0.5)) < 1e-10);
  CHECK(std::abs(theta(1) - 1.0) < 1e-10);
}

TEST_CASE("least squares raises on rank deficiency") {
  Matrix x(4, 2);
  x << 1, 1, 2, 2, 3, 3, 4, 4;
  try {
    least_squares(x, Vector{{1.0, 2.0, 3.0, 4.0}});
    FAIL("expected SingularityError");
  } catch (const SingularityError& e) {
    CHECK(e.condition >= 1e12);
  }
  CHECK_THROWS_AS(least_squares(Matrix::Identity(2, 2), Vector{{1.0}}),
                  DimensionError);
}

TEST_CASE("instrumental variables reduce to least squares when Z equals X") {
  RngStream rng(5);
  const Matrix x = random_matrix(40, 3, rng);
  Vector y(40);
  for (int i = 0; i < 40; ++i) y(i) = rng.standard_normal();
  const Vector via_iv = instrumental_variable_regression(x, y, x);
  const Vector via_ls = least_squares(x, y);
  CHECK((via_iv - via_ls).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("instrumental variables solve the moment equations") {
  // Z'X theta = Z'y must hold exactly at the returned theta
  RngStream rng(6);
  const Matrix x = random_matrix(50, 3, rng);
  const Matrix z = x + 0.1 * random_matrix(50, 3, rng);
  Vector y(50);
  for (int i = 0; i < 50; ++i) y(i) = rng.standard_normal();
  const Vector theta = instrumental_variable_regression(x, y, z);
  const Vector residual = z.transpose() * (y - x * theta);
  CHECK(residual.cwiseAbs().maxCoeff() < 1e-10);

  const Matrix zeros = Matrix::Zero(50, 3);
  CHECK_THROWS_AS(instrumental_variable_regression(x, y, zeros),
                  SingularityError);
}

TEST_CASE("DARE golden scalar and edge cases") {
  Matrix one(1, 1);
  one << 1.0;
  const DareSolution sol = solve_dare(one, one, one, one);
  CHECK(std::abs(sol.value(0, 0) - (1.0 + std::sqrt(5.0)) / 2.0) < 1e-9);
  CHECK(std::abs(sol.gain(0, 0) - (1.0 - std::sqrt(5.0)) / 2.0) < 1e-9);

  const DareSolution no_dynamics =
      solve_dare(Matrix::Zero(2, 2), Matrix::Identity(2, 2),
                 Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  CHECK(no_dynamics.value.isApprox(Matrix::Identity(2, 2), 1e-10));
  CHECK(no_dynamics.gain.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("DARE solutions satisfy their own equation on random systems") {
  RngStream rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a = random_matrix(2, 2, rng);
    a *= 0.9 / std::max(spectral_radius(a), 0.1);  // stable, hence stabilizable
    const Matrix b = random_matrix(2, 1, rng);
    const Matrix c = random_matrix(2, 2, rng);
    const Matrix qw = c.transpose() * c + 0.1 * Matrix::Identity(2, 2);
    Matrix rw(1, 1);
    rw << 0.5 + rng.uniform();
    const DareSolution sol = solve_dare(a, b, qw, rw);
    const Matrix bpa = b.transpose() * sol.value * a;
    const Matrix residual =
        a.transpose() * sol.value * a -
        bpa.transpose() * (rw + b.transpose() * sol.value * b).inverse() * bpa +
        qw - sol.value;
    CHECK(residual.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(spectral_radius(a + b * sol.gain) < 1.0);
  }
}

TEST_CASE("policy Lyapunov oracle") {
  Matrix a(1, 1), b(1, 1), q(1, 1), r(1, 1);
  a << 0.5;
  b << 0.0;
  q << 1.0;
  r << 1.0;
  // B = 0, K = 0: geometric series 1 / (1 - 0.25)
  const Matrix p = solve_policy_lyapunov(a, b, q, r, Matrix::Zero(1, 1));
  CHECK(std::abs(p(0, 0) - 4.0 / 3.0) < 1e-12);

  // A + BK = 0 gives P = Q + K'RK
  Matrix a2(1, 1), b2(1, 1), k2(1, 1);
  a2 << 1.0;
  b2 << 1.0;
  k2 << -1.0;
  const Matrix p2 = solve_policy_lyapunov(a2, b2, q, r, k2);
  CHECK(std::abs(p2(0, 0) - 2.0) < 1e-12);

  // at the optimal gain the Lyapunov value equals the DARE value
  Matrix a3(2, 2), b3(2, 1);
  a3 << 0.99, 0.099, 0.0, 0.99;
  b3 << 0.0, 0.1;
  const Matrix q3 = Matrix::Identity(2, 2);
  Matrix r3(1, 1);
  r3 << 1.0;
  const DareSolution sol = solve_dare(a3, b3, q3, r3);
  const Matrix pk = solve_policy_lyapunov(a3, b3, q3, r3, sol.gain);
  CHECK((pk - sol.value).cwiseAbs().maxCoeff() < 1e-9);

  Matrix unstable_gain(1, 2);
  unstable_gain << 5.0, 5.0;
  CHECK_THROWS_AS(solve_policy_lyapunov(a3, b3, q3, r3, unstable_gain),
                  DomainError);
}

TEST_CASE("adam first step is sign-scaled by the step size") {
  AdamState state(2, 2, 0.1);
  Matrix grad(2, 2);
  grad << 3.0, -0.2, 0.004, -700.0;
  const Matrix inc = adam_step(state, grad);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(inc(i, j) * grad(i, j) > 0.0);  // ascent direction
      CHECK(std::abs(inc(i, j)) <= 0.1 * (1.0 + 1e-6));
    }
}

TEST_CASE("adam stays put on zero gradients") {
  AdamState state(1, 3, 0.05);
  for (int step = 0; step < 10; ++step) {
    const Matrix inc = adam_step(state, Matrix::Zero(1, 3));
    CHECK(inc.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("adam second step matches the hand-evaluated recursion") {
  const double g = 2.5, alpha = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  AdamState state(1, 1, alpha, b1, b2, eps);
  Matrix grad(1, 1);
  grad << g;
  adam_step(state, grad);
  const Matrix second = adam_step(state, grad);
  // m2 = (1-b1^2) g, v2 = (1-b2^2) g^2; bias corrections cancel exactly
  const double m_hat = (1.0 - b1 * b1) * g / (1.0 - b1 * b1);
  const double v_hat = (1.0 - b2 * b2) * g * g / (1.0 - b2 * b2);
  const double expected = alpha * m_hat / (std::sqrt(v_hat) + eps);
  CHECK(second(0, 0) == Catch::Approx(expected).margin(1e-15));
  CHECK_THROWS_AS(adam_step(state, Matrix::Zero(2, 2)), DimensionError);
}

TEST_CASE("finite differences recover simple gradients") {
  const auto quadratic = [](const Vector& v) { return v.squaredNorm(); };
  const Vector grad =
      finite_difference_gradient(quadratic, Vector{{1.0, 2.0}}, 1e-5);
  CHECK(std::abs(grad(0) - 2.0) < 1e-8);
  CHECK(std::abs(grad(1) - 4.0) < 1e-8);

  const auto constant = [](const Vector&) { return 3.0; };
  CHECK(finite_difference_gradient(constant, Vector{{1.0, 2.0, 3.0}}, 1e-5)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("rng choice follows the given pdf") {
  RngStream rng(99);
  CHECK(rng.choice(Vector{{1.0, 0.0, 0.0}}) == 0);

  int zero_count = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i)
    if (rng.choice(Vector{{0.5, 0.5}}) == 0) ++zero_count;
  const double freq = static_cast<double>(zero_count) / draws;
  CHECK(freq > 0.47);
  CHECK(freq < 0.53);

  CHECK_THROWS_AS(rng.choice(Vector{{-0.1, 1.1}}), DomainError);
  CHECK_THROWS_AS(rng.choice(Vector{{0.4, 0.4}}), DomainError);
}

TEST_CASE("rng streams are reproducible from the seed") {
  RngStream a(123456), b(123456);
  for (int i = 0; i < 100; ++i)
    CHECK(a.standard_normal() == b.standard_normal());
  RngStream c(1), d(2);
  bool any_different = false;
  for (int i = 0; i < 10; ++i)
    any_different |= c.uniform() != d.uniform();
  CHECK(any_different);
}

TEST_CASE("rng normals have the right first moments") {
  RngStream rng(2024);
  const int draws = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double x = rng.standard_normal();
    sum += x;
    sum_sq += x * x;
  }
  CHECK(std::abs(sum / draws) < 0.02);
  CHECK(std::abs(sum_sq / draws - 1.0) < 0.03);
}
