#include "nnsid/weights.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace nnsid {

std::string_view scheme_name(WeightingScheme scheme) {
  switch (scheme) {
    case WeightingScheme::kMoesp:
      return "moesp";
    case WeightingScheme::kN4sid:
      return "n4sid";
    case WeightingScheme::kIvm:
      return "ivm";
    case WeightingScheme::kCva:
      return "cva";
    case WeightingScheme::kNone:
      return "none";
    case WeightingScheme::kNoInstr:
      return "noinstr";
  }
  return "unknown";
}

std::optional<WeightingScheme> parse_scheme(std::string_view name) {
  for (WeightingScheme s : kAllSchemes) {
    if (name == scheme_name(s)) return s;
  }
  return std::nullopt;
}

HankelParams scheme_window(WeightingScheme scheme, int r, int s, int length) {
  if (r < 1) {
    throw std::invalid_argument("scheme_window: r must be >= 1");
  }
  HankelParams p;
  if (scheme == WeightingScheme::kNoInstr) {
    p = HankelParams{r, 0, length - r + 1, 0};
  } else {
    if (s < 1) {
      throw std::invalid_argument("scheme_window: instrument-based schemes require s >= 1");
    }
    p = HankelParams{r, s, length - r - s + 1, s};
  }
  p.validate(length);
  return p;
}

namespace {

// Orthonormal basis of the row space of u (columns of u^T), with a rank check.
Matrix row_space_basis(const Matrix& u) {
  Eigen::ColPivHouseholderQR<Matrix> qr(u.transpose());
  const Eigen::Index k = u.rows();
  const Eigen::Index rank = qr.rank();
  if (rank < k) {
    throw std::runtime_error("project_complement: rank-deficient input (numerical rank " +
                             std::to_string(rank) + " < " + std::to_string(k) + " rows)");
  }
  return qr.householderQ() * Matrix::Identity(u.cols(), k);
}

// v * f(eigenvalues) * v^T for a symmetric PSD matrix, eigenvalues floored at
// 1e-10 * lambda_max before applying the (negative) power.
Matrix spd_power(const Matrix& s, double exponent, const std::string& label) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("weights: eigendecomposition of " + label + " failed");
  }
  const Vector& ev = es.eigenvalues();
  const double lambda_max = ev.maxCoeff();
  if (!std::isfinite(lambda_max) || lambda_max <= 0.0) {
    throw std::runtime_error("weights: Gram matrix " + label + " is numerically singular");
  }
  const double floor = 1e-10 * lambda_max;
  Vector d(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    d[i] = std::pow(std::max(ev[i], floor), exponent);
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Matrix project_complement(const Matrix& m, const Matrix& u) {
  if (m.cols() != u.cols()) {
    throw std::invalid_argument("project_complement: column mismatch (" +
                                std::to_string(m.cols()) + " vs " + std::to_string(u.cols()) +
                                ")");
  }
  const Matrix q = row_space_basis(u);
  return m - (m * q) * q.transpose();
}

Matrix inv_sqrt(const Matrix& s) {
  if (s.rows() != s.cols()) {
    throw std::invalid_argument("inv_sqrt: matrix must be square");
  }
  const double scale = s.cwiseAbs().maxCoeff();
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1e-300)) {
    throw std::invalid_argument("inv_sqrt: matrix is not symmetric");
  }
  return spd_power(s, -0.5, "inv_sqrt input");
}

Matrix build_instrument(const TimeSeries& u_meas, const TimeSeries& y_meas,
                        const HankelParams& p) {
  if (p.s < 1) {
    throw std::invalid_argument("build_instrument: instrument depth s must be >= 1");
  }
  p.validate(u_meas.length());
  p.validate(y_meas.length());
  const HankelParams past{p.s, 0, p.n_cols, 0};
  const Matrix u_past = build_hankel(u_meas, past);
  const Matrix y_past = build_hankel(y_meas, past);
  Matrix phi(u_past.rows() + y_past.rows(), p.n_cols);
  phi << u_past, y_past;
  return phi;
}

WeightFactors compute_weights(WeightingScheme scheme, const TimeSeries& u_meas,
                              const TimeSeries& y_meas, const HankelParams& p) {
  if (u_meas.length() != y_meas.length()) {
    throw std::invalid_argument("compute_weights: input/output length mismatch");
  }
  p.validate(u_meas.length());
  const int n_p = y_meas.channels();
  const int n_m = u_meas.channels();
  const int n = p.n_cols;
  const Eigen::Index p_rows = static_cast<Eigen::Index>(p.r) * n_p;

  WeightFactors f;
  f.scheme = scheme;
  f.params = p;
  f.out_channels = n_p;
  f.in_channels = n_m;

  if (scheme == WeightingScheme::kNoInstr) {
    if (p.start != 0) {
      throw std::invalid_argument("compute_weights: NOINSTR uses a window starting at 0");
    }
    const Matrix u_h = build_hankel(u_meas, p);
    const Matrix q_basis = row_space_basis(u_h);
    f.w1 = Matrix::Identity(p_rows, p_rows);
    f.right_factor =
        (Matrix::Identity(n, n) - q_basis * q_basis.transpose()) / static_cast<double>(n);
    f.q = n;
    return f;
  }

  if (p.start != p.s || p.s < 1) {
    throw std::invalid_argument(
        "compute_weights: instrument-based schemes use a window starting at s (s >= 1)");
  }
  const Matrix u_h = build_hankel(u_meas, p);
  const Matrix phi = build_instrument(u_meas, y_meas, p);
  const Matrix q_basis = row_space_basis(u_h);

  // phi_proj = Phi * P_complement; the complement projector is shared by all
  // instrument-based schemes and applied through the orthonormal basis.
  const Matrix phi_proj = phi - (phi * q_basis) * q_basis.transpose();
  const Matrix base_right = phi_proj.transpose() / static_cast<double>(n);  // n_cols x q_phi

  const auto phi_gram_proj = [&] { return (phi_proj * phi_proj.transpose()) / n; };

  switch (scheme) {
    case WeightingScheme::kNone:
      f.w1 = Matrix::Identity(p_rows, p_rows);
      f.right_factor = base_right;
      break;
    case WeightingScheme::kMoesp:
      f.w1 = Matrix::Identity(p_rows, p_rows);
      f.right_factor = base_right * spd_power(phi_gram_proj(), -1.0, "Phi*P*Phi^T") * phi_proj;
      break;
    case WeightingScheme::kN4sid:
      f.w1 = Matrix::Identity(p_rows, p_rows);
      f.right_factor = base_right * spd_power(phi_gram_proj(), -1.0, "Phi*P*Phi^T") * phi;
      break;
    case WeightingScheme::kIvm: {
      const Matrix y_h = build_hankel(y_meas, p);
      const Matrix y_proj = y_h - (y_h * q_basis) * q_basis.transpose();
      f.w1 = spd_power((y_proj * y_proj.transpose()) / n, -0.5, "Y*P*Y^T");
      f.right_factor = base_right * spd_power((phi * phi.transpose()) / n, -0.5, "Phi*Phi^T");
      break;
    }
    case WeightingScheme::kCva: {
      const Matrix y_h = build_hankel(y_meas, p);
      const Matrix y_proj = y_h - (y_h * q_basis) * q_basis.transpose();
      f.w1 = spd_power((y_proj * y_proj.transpose()) / n, -0.5, "Y*P*Y^T");
      f.right_factor = base_right * spd_power(phi_gram_proj(), -0.5, "Phi*P*Phi^T");
      break;
    }
    default:
      throw std::logic_error("compute_weights: unhandled scheme");
  }
  f.q = static_cast<int>(f.right_factor.cols());
  return f;
}

HankelMap make_map(const WeightFactors& factors) {
  return HankelMap(factors.w1, factors.right_factor, factors.params, factors.out_channels);
}

Matrix assemble_ghat(const WeightFactors& factors, const Vector& y) {
  return make_map(factors).apply(y);
}

}  // namespace nnsid
