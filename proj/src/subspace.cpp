#include "nnsid/subspace.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nnsid {

void StateSpaceModel::validate() const {
  const int n = order;
  if (A.rows() != n || A.cols() != n || B.rows() != n || C.cols() != n || K.rows() != n ||
      D.rows() != C.rows() || D.cols() != B.cols() || K.cols() != C.rows()) {
    throw std::invalid_argument("StateSpaceModel: inconsistent matrix dimensions");
  }
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite() || !K.allFinite()) {
    throw std::invalid_argument("StateSpaceModel: entries must be finite");
  }
}

double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("spectral_radius: matrix must be square");
  }
  if (a.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

OrderSelection select_order(const std::vector<double>& sv) {
  if (sv.size() < 2) {
    throw std::invalid_argument("select_order: need at least two singular values");
  }
  for (size_t i = 1; i < sv.size(); ++i) {
    if (sv[i] > sv[i - 1]) {
      throw std::invalid_argument("select_order: singular values must be nonincreasing");
    }
  }
  const double s_max = sv.front();
  if (!(s_max > 0.0)) {
    throw std::runtime_error("select_order: degenerate spectrum (largest singular value is 0)");
  }
  const double s_min = std::max(sv.back(), std::numeric_limits<double>::epsilon() * s_max);
  OrderSelection sel;
  sel.singular_values = sv;
  sel.threshold = std::sqrt(s_max * s_min);
  int count = 0;
  for (double v : sv) {
    if (v > sel.threshold) ++count;
  }
  sel.chosen = std::clamp(count, 1, static_cast<int>(sv.size()) - 1);
  return sel;
}

Matrix observability_from_ghat(const Matrix& ghat, const Matrix& w1, int n_x) {
  if (n_x < 1 || n_x > std::min(ghat.rows(), ghat.cols())) {
    throw std::invalid_argument("observability_from_ghat: order out of range");
  }
  if (w1.rows() != ghat.rows() || w1.cols() != ghat.rows()) {
    throw std::invalid_argument("observability_from_ghat: left weight shape mismatch");
  }
  Eigen::JacobiSVD<Matrix> svd(ghat, Eigen::ComputeThinU);
  const Matrix u1 = svd.matrixU().leftCols(n_x);
  const Vector s1 = svd.singularValues().head(n_x);
  const Matrix gamma_weighted = u1 * s1.cwiseSqrt().asDiagonal();
  // Undo the left weight: solve w1 * gamma = u1 * sqrt(s1).
  Eigen::PartialPivLU<Matrix> lu(w1);
  return lu.solve(gamma_weighted);
}

namespace {

// Least-squares fit of x0, B and (optionally) D given A and C: the model
// response is linear in these once A and C are fixed. Returns the model with
// B, D filled in; the estimated initial state is discarded.
void fit_input_maps(StateSpaceModel& model, const TimeSeries& u, const TimeSeries& y,
                    bool direct_term) {
  const int n_x = model.order;
  const int n_m = u.channels();
  const int n_p = y.channels();
  const int t_len = u.length();

  const int cols_x0 = n_x;
  const int cols_b = n_x * n_m;
  const int cols_d = direct_term ? n_p * n_m : 0;
  const int cols = cols_x0 + cols_b + cols_d;

  Matrix reg(static_cast<Eigen::Index>(t_len) * n_p, cols);
  Vector target(static_cast<Eigen::Index>(t_len) * n_p);

  // State sensitivities: phi_x0 = d x(k) / d x0, phi_b = d x(k) / d vec(B)
  // (column-major vec), both propagated by the state recursion.
  Matrix phi_x0 = Matrix::Identity(n_x, n_x);
  Matrix phi_b = Matrix::Zero(n_x, cols_b);
  for (int k = 0; k < t_len; ++k) {
    const Eigen::Index row = static_cast<Eigen::Index>(k) * n_p;
    reg.block(row, 0, n_p, cols_x0) = model.C * phi_x0;
    reg.block(row, cols_x0, n_p, cols_b) = model.C * phi_b;
    if (direct_term) {
      for (int j = 0; j < n_m; ++j) {
        reg.block(row, cols_x0 + cols_b + static_cast<Eigen::Index>(j) * n_p, n_p, n_p) =
            u(k, j) * Matrix::Identity(n_p, n_p);
      }
    }
    target.segment(row, n_p) = y.values().row(k).transpose();

    if (k + 1 < t_len) {
      phi_x0 = (model.A * phi_x0).eval();
      phi_b = (model.A * phi_b).eval();
      // B * u(k) contributes u_j(k) to the sensitivity of state i w.r.t. B(i, j).
      for (int j = 0; j < n_m; ++j) {
        phi_b.block(0, static_cast<Eigen::Index>(j) * n_x, n_x, n_x).diagonal().array() += u(k, j);
      }
    }
  }

  const Vector theta = reg.colPivHouseholderQr().solve(target);
  model.B = Eigen::Map<const Matrix>(theta.data() + cols_x0, n_x, n_m);
  if (direct_term) {
    model.D = Eigen::Map<const Matrix>(theta.data() + cols_x0 + cols_b, n_p, n_m);
  } else {
    model.D = Matrix::Zero(n_p, n_m);
  }
}

}  // namespace

StateSpaceModel extract_model(const Matrix& ghat, const Matrix& w1, const HankelParams& p,
                              const TimeSeries& u, const TimeSeries& y, int n_x,
                              bool direct_term) {
  const int n_p = y.channels();
  if (ghat.rows() != static_cast<Eigen::Index>(p.r) * n_p) {
    throw std::invalid_argument("extract_model: ghat row count does not match r * output channels");
  }
  if (n_x < 1 || n_x >= p.r * n_p) {
    throw std::invalid_argument("extract_model: order must satisfy 1 <= n_x < r * output channels");
  }
  if (u.length() != y.length()) {
    throw std::invalid_argument("extract_model: input/output length mismatch");
  }

  const Matrix gamma = observability_from_ghat(ghat, w1, n_x);
  const Eigen::Index up_rows = static_cast<Eigen::Index>(p.r - 1) * n_p;
  if (up_rows < n_x) {
    throw std::runtime_error(
        "extract_model: shift system is underdetermined (order exceeds (r-1) * output channels)");
  }
  const Matrix gamma_up = gamma.topRows(up_rows);
  const Matrix gamma_down = gamma.bottomRows(up_rows);

  {
    Eigen::JacobiSVD<Matrix> svd(gamma_up);
    const double s_max = svd.singularValues()(0);
    const double s_min = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(s_min > 0.0) || s_max / s_min > 1e12) {
      throw std::runtime_error("extract_model: shift system is ill-conditioned (cond > 1e12)");
    }
  }

  StateSpaceModel model;
  model.order = n_x;
  model.C = gamma.topRows(n_p);
  model.A = gamma_up.colPivHouseholderQr().solve(gamma_down);
  model.K = Matrix::Zero(n_x, n_p);
  fit_input_maps(model, u, y, direct_term);
  model.validate();
  return model;
}

StateSpaceModel stabilize(StateSpaceModel model) {
  const double rho = spectral_radius(model.A);
  if (rho >= 1.0) {
    model.A *= 0.99 / rho;
  }
  model.stabilized = true;
  return model;
}

}  // namespace nnsid
