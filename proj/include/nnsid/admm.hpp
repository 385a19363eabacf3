#pragma once

#include <Eigen/Cholesky>
#include <iosfwd>
#include <optional>
#include <vector>

#include "nnsid/hankel.hpp"

namespace nnsid {

/// Quadratic penalty (1/2) (x - x0)^T C (x - x0), with C either a scalar
/// multiple of the identity or a dense symmetric PSD matrix.
class QuadraticTerm {
 public:
  static QuadraticTerm scaled_identity(double c);
  static QuadraticTerm dense(Matrix s);

  Vector apply(const Vector& v) const;
  void add_to(Matrix& k) const;
  double quad_form(const Vector& v) const { return v.dot(apply(v)); }
  bool is_scalar() const { return !matrix_.has_value(); }
  double scalar() const { return scalar_; }

 private:
  double scalar_ = 0.0;
  std::optional<Matrix> matrix_;
};

/// Regularized nuclear norm program
///   minimize ||A(x) - B||_* + (1/2) (x - x0)^T C (x - x0)
/// with A the structured linear map, B a fixed offset and x0 an anchor.
struct NucNormProblem {
  HankelMap map;
  Matrix offset;       ///< B, same shape as the map output
  QuadraticTerm quad;  ///< C
  Vector anchor;       ///< x0

  void validate() const;
};

struct AdmmSettings {
  double t0 = 1.0;   ///< initial penalty
  double mu = 10.0;  ///< residual ratio that triggers a penalty change
  double tau = 2.0;  ///< penalty scaling factor
  double eps_abs = 1e-6;
  double eps_rel = 1e-3;
  int max_iter = 5000;
  int max_penalty_changes = 100;  ///< bound on refactorizations per solve
  std::ostream* trace = nullptr;  ///< optional sink for per-iteration CSV lines

  void validate() const;
};

struct AdmmIterRecord {
  double rp;     ///< primal residual, Frobenius norm
  double rd;     ///< dual residual, Euclidean norm
  double eps_p;  ///< primal tolerance
  double eps_d;  ///< dual tolerance
  double t;      ///< penalty in effect this iteration
  double objective;
};

struct AdmmState {
  Vector x;
  Matrix X;  ///< split variable
  Matrix Z;  ///< scaled dual variable
  double t = 1.0;
  int iter = 0;
  bool converged = false;
  std::vector<AdmmIterRecord> history;
};

/// Sum of singular values.
double nuclear_norm(const Matrix& m);

/// Singular value thresholding: U * diag(max(0, sigma - theta)) * V^T,
/// the proximal operator of theta * ||.||_*.
Matrix svt(const Matrix& m, double theta);

/// Cholesky factorization of C + t * M, where M is the map's Gram matrix.
Eigen::LLT<Matrix> factor_normal_matrix(const NucNormProblem& prob, const Matrix& gram, double t);

/// Minimizer of the augmented Lagrangian over x for fixed X, Z:
/// (C + tM)^{-1} (A_adj(tX + tB - Z) + C x0), using the cached factorization.
Vector x_update(const NucNormProblem& prob, const Matrix& X, const Matrix& Z, double t,
                const Eigen::LLT<Matrix>& factor);

/// Adaptive penalty: scale t up when the primal residual dominates, down when
/// the dual residual dominates, otherwise leave it unchanged.
double update_penalty(double t, double rp_norm, double rd_norm, const AdmmSettings& s);

/// Run the ADMM loop until both residuals fall below their tolerances or
/// max_iter is reached (reported through AdmmState::converged, not an error).
/// A precomputed Gram matrix of prob.map may be passed to avoid rebuilding it.
AdmmState solve(const NucNormProblem& prob, const AdmmSettings& s, const Matrix* gram = nullptr);

}  // namespace nnsid
