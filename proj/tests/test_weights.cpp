#include <doctest.h>

#include <random>

#include "nnsid/simulate.hpp"
#include "nnsid/weights.hpp"
#include "test_helpers.hpp"

using namespace nnsid;
using namespace nnsid::testing;

TEST_CASE("project_complement annihilates a full row space") {
  std::mt19937_64 rng(1);
  const Matrix u = random_spd(rng, 4, 10.0);  // square invertible
  const Matrix m = random_matrix(rng, 3, 4);
  CHECK(project_complement(m, u).norm() <= 1e-12 * m.norm());
}

TEST_CASE("project_complement fixes rows already orthogonal to U") {
  Matrix u(1, 3);
  u << 1, 0, 0;
  Matrix m(2, 3);
  m << 0, 2, -1, 0, 0.5, 3;
  const Matrix proj = project_complement(m, u);
  CHECK((proj - m).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("project_complement hand case") {
  Matrix u(1, 2), m(1, 2);
  u << 1, 1;
  m << 1, 0;
  const Matrix proj = project_complement(m, u);
  CHECK(proj(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(proj(0, 1) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("project_complement reports the numerical rank of deficient input") {
  Matrix u(2, 3);
  u << 1, 2, 3, 2, 4, 6;  // rank 1
  Matrix m = Matrix::Ones(1, 3);
  CHECK_THROWS_WITH_AS(project_complement(m, u), doctest::Contains("rank"), std::runtime_error);
}

TEST_CASE("projection is idempotent and annihilates U on random instances") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix u = random_matrix(rng, 3, 12);
    const Matrix m = random_matrix(rng, 5, 12);
    const Matrix once = project_complement(m, u);
    const Matrix twice = project_complement(once, u);
    CHECK((twice - once).norm() <= 1e-10 * std::max(1.0, m.norm()));
    CHECK(project_complement(u, u).norm() <= 1e-10 * u.norm());
  }
}

TEST_CASE("inv_sqrt of the identity is the identity") {
  const Matrix w = inv_sqrt(Matrix::Identity(4, 4));
  CHECK((w - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("inv_sqrt of a diagonal matrix") {
  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = 4.0;
  s(1, 1) = 9.0;
  const Matrix w = inv_sqrt(s);
  CHECK(w(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(w(0, 1)) <= 1e-14);
}

TEST_CASE("inv_sqrt reconstructs the identity up to condition 1e8") {
  std::mt19937_64 rng(4);
  for (double cond : {1e2, 1e5, 1e8}) {
    const Matrix s = random_spd(rng, 6, cond);
    const Matrix w = inv_sqrt(s);
    CHECK((w * s * w - Matrix::Identity(6, 6)).norm() <= 1e-8);
  }
}

TEST_CASE("inv_sqrt rejects non-symmetric input") {
  std::mt19937_64 rng(5);
  Matrix s = random_spd(rng, 3, 10.0);
  s(0, 1) += 1.0;
  CHECK_THROWS_AS(inv_sqrt(s), std::invalid_argument);
  CHECK_THROWS_AS(inv_sqrt(Matrix::Ones(2, 3)), std::invalid_argument);
}

TEST_CASE("build_instrument stacks past inputs over past outputs") {
  Matrix u(6, 1), y(6, 1);
  u << 1, 2, 3, 4, 5, 6;
  y << 5, 6, 7, 8, 9, 10;
  const HankelParams p{2, 1, 3, 1};
  const Matrix phi = build_instrument(TimeSeries(u), TimeSeries(y), p);
  Matrix expected(2, 3);
  expected << 1, 2, 3, 5, 6, 7;
  CHECK(phi == expected);
}

TEST_CASE("build_instrument of zero data is zero") {
  const TimeSeries zero(Matrix::Zero(20, 1));
  const Matrix phi = build_instrument(zero, zero, HankelParams{3, 4, 10, 4});
  CHECK(phi.isZero(0.0));
}

TEST_CASE("build_instrument row count is s * (inputs + outputs)") {
  std::mt19937_64 rng(6);
  const TimeSeries u = random_series(rng, 40, 2);
  const TimeSeries y = random_series(rng, 40, 3);
  const HankelParams p{4, 5, 40 - 4 - 5 + 1, 5};
  const Matrix phi = build_instrument(u, y, p);
  CHECK(phi.rows() == 5 * (2 + 3));
  CHECK(phi.cols() == p.n_cols);
}

TEST_CASE("build_instrument rejects short records") {
  std::mt19937_64 rng(7);
  const TimeSeries u = random_series(rng, 10, 1);
  const TimeSeries y = random_series(rng, 10, 1);
  CHECK_THROWS_AS(build_instrument(u, y, HankelParams{4, 3, 6, 3}), std::out_of_range);
}

TEST_CASE("compute_weights output shapes follow the scheme table") {
  std::mt19937_64 rng(8);
  const int len = 30, r = 4, s = 3;
  const TimeSeries u = random_series(rng, len, 1);
  const TimeSeries y = random_series(rng, len, 1);

  struct Case {
    WeightingScheme scheme;
    int q_expected;
  };
  const int n_iv = len - r - s + 1;
  const Case cases[] = {
      {WeightingScheme::kMoesp, n_iv}, {WeightingScheme::kN4sid, n_iv},
      {WeightingScheme::kIvm, 2 * s},  {WeightingScheme::kCva, 2 * s},
      {WeightingScheme::kNone, 2 * s}, {WeightingScheme::kNoInstr, len - r + 1},
  };
  for (const auto& c : cases) {
    CAPTURE(scheme_name(c.scheme));
    const HankelParams p = scheme_window(c.scheme, r, s, len);
    const WeightFactors f = compute_weights(c.scheme, u, y, p);
    CHECK(f.q == c.q_expected);
    const Matrix ghat = assemble_ghat(f, y.flatten(p.start, p.var_samples()));
    CHECK(ghat.rows() == r);
    CHECK(ghat.cols() == c.q_expected);
  }
}

TEST_CASE("compute_weights with multichannel data generalizes the column counts") {
  std::mt19937_64 rng(9);
  const int len = 60, r = 3, s = 4;
  const TimeSeries u = random_series(rng, len, 2);
  const TimeSeries y = random_series(rng, len, 3);
  const HankelParams p = scheme_window(WeightingScheme::kCva, r, s, len);
  const WeightFactors f = compute_weights(WeightingScheme::kCva, u, y, p);
  CHECK(f.q == s * (2 + 3));
  CHECK(f.w1.rows() == r * 3);
}

TEST_CASE("NONE keeps the instrument with identity weights") {
  std::mt19937_64 rng(10);
  const int len = 30, r = 4, s = 3;
  const TimeSeries u = random_series(rng, len, 1);
  const TimeSeries y = random_series(rng, len, 1);
  const HankelParams p = scheme_window(WeightingScheme::kNone, r, s, len);
  const WeightFactors f = compute_weights(WeightingScheme::kNone, u, y, p);
  CHECK(f.w1 == Matrix::Identity(r, r));

  const Matrix u_h = build_hankel(u, p);
  const Matrix phi = build_instrument(u, y, p);
  const Matrix expected = project_complement(phi, u_h).transpose() / p.n_cols;
  CHECK((f.right_factor - expected).norm() <= 1e-12 * expected.norm());
}

TEST_CASE("compute_weights flags singular Gram matrices on zero output data") {
  std::mt19937_64 rng(14);
  const TimeSeries u = random_series(rng, 30, 1);
  const TimeSeries y(Matrix::Zero(30, 1));
  const HankelParams p = scheme_window(WeightingScheme::kCva, 4, 3, 30);
  CHECK_THROWS_WITH_AS(compute_weights(WeightingScheme::kCva, u, y, p),
                       doctest::Contains("singular"), std::runtime_error);
}

TEST_CASE("CVA left weight normalizes the projected output Gram") {
  std::mt19937_64 rng(11);
  const int len = 80, r = 4, s = 4;
  const TimeSeries u = random_series(rng, len, 1);
  const TimeSeries y = random_series(rng, len, 1);
  const HankelParams p = scheme_window(WeightingScheme::kCva, r, s, len);
  const WeightFactors f = compute_weights(WeightingScheme::kCva, u, y, p);

  const Matrix u_h = build_hankel(u, p);
  const Matrix y_h = build_hankel(y, p);
  const Matrix y_proj = project_complement(y_h, u_h);
  const Matrix gram = (y_proj * y_proj.transpose()) / p.n_cols;
  CHECK((f.w1 * gram * f.w1.transpose() - Matrix::Identity(r, r)).norm() <= 1e-8);
}

TEST_CASE("assemble_ghat is linear in the output window") {
  std::mt19937_64 rng(12);
  const int len = 30;
  const TimeSeries u = random_series(rng, len, 1);
  const TimeSeries y = random_series(rng, len, 1);
  const HankelParams p = scheme_window(WeightingScheme::kCva, 4, 3, len);
  const WeightFactors f = compute_weights(WeightingScheme::kCva, u, y, p);

  const Vector a = random_vector(rng, p.var_samples());
  const Vector b = random_vector(rng, p.var_samples());
  const Matrix lhs = assemble_ghat(f, a + 0.5 * b);
  const Matrix rhs = assemble_ghat(f, a) + 0.5 * assemble_ghat(f, b);
  CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
}

TEST_CASE("assemble_ghat at the measured output reproduces the weighted data matrix") {
  std::mt19937_64 rng(13);
  const int len = 40, r = 5, s = 4;
  const TimeSeries u = random_series(rng, len, 1);
  const TimeSeries y = random_series(rng, len, 1);
  const HankelParams p = scheme_window(WeightingScheme::kMoesp, r, s, len);
  const WeightFactors f = compute_weights(WeightingScheme::kMoesp, u, y, p);

  const Matrix ghat = assemble_ghat(f, y.flatten(p.start, p.var_samples()));
  const Matrix direct = f.w1 * build_hankel(y, p) * f.right_factor;
  CHECK((ghat - direct).norm() <= 1e-12 * std::max(1.0, direct.norm()));
}

TEST_CASE("noise-free data from a low-order system yields a numerically low-rank matrix") {
  const StateSpaceModel truth = random_model(4, 42);
  const TimeSeries u = gaussian_series(200, 1, 1.0, 99, "u");
  const TimeSeries y = simulate(truth, u, Vector::Zero(4));
  const HankelParams p = scheme_window(WeightingScheme::kCva, 10, 10, y.length());
  const WeightFactors f = compute_weights(WeightingScheme::kCva, u, y, p);
  const Matrix ghat = assemble_ghat(f, y.flatten(p.start, p.var_samples()));
  const Vector sv = Eigen::JacobiSVD<Matrix>(ghat).singularValues();
  CHECK(sv(4) / sv(0) <= 1e-6);
}

TEST_CASE("scheme_window validates its inputs") {
  CHECK_THROWS_AS(scheme_window(WeightingScheme::kCva, 4, 0, 30), std::invalid_argument);
  CHECK_THROWS_AS(scheme_window(WeightingScheme::kCva, 0, 3, 30), std::invalid_argument);
  CHECK_THROWS_AS(scheme_window(WeightingScheme::kCva, 15, 15, 20), std::out_of_range);
  const HankelParams p = scheme_window(WeightingScheme::kNoInstr, 4, 7, 30);
  CHECK(p.start == 0);
  CHECK(p.s == 0);
  CHECK(p.n_cols == 27);
}

TEST_CASE("scheme names round-trip") {
  for (WeightingScheme s : kAllSchemes) {
    CHECK(parse_scheme(scheme_name(s)) == s);
  }
  CHECK(!parse_scheme("bogus").has_value());
}
