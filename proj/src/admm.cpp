#include "nnsid/admm.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace nnsid {

QuadraticTerm QuadraticTerm::scaled_identity(double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw std::invalid_argument("QuadraticTerm: scalar must be finite and nonnegative");
  }
  QuadraticTerm q;
  q.scalar_ = c;
  return q;
}

QuadraticTerm QuadraticTerm::dense(Matrix s) {
  if (s.rows() != s.cols()) {
    throw std::invalid_argument("QuadraticTerm: dense matrix must be square");
  }
  QuadraticTerm q;
  q.matrix_ = std::move(s);
  return q;
}

Vector QuadraticTerm::apply(const Vector& v) const {
  if (matrix_) {
    if (matrix_->cols() != v.size()) {
      throw std::invalid_argument("QuadraticTerm::apply: dimension mismatch");
    }
    return *matrix_ * v;
  }
  return scalar_ * v;
}

void QuadraticTerm::add_to(Matrix& k) const {
  if (matrix_) {
    if (matrix_->rows() != k.rows() || matrix_->cols() != k.cols()) {
      throw std::invalid_argument("QuadraticTerm::add_to: dimension mismatch");
    }
    k += *matrix_;
  } else {
    k.diagonal().array() += scalar_;
  }
}

void NucNormProblem::validate() const {
  if (offset.rows() != map.out_rows() || offset.cols() != map.out_cols()) {
    throw std::invalid_argument("NucNormProblem: offset shape does not match the map output");
  }
  if (anchor.size() != map.var_dim()) {
    throw std::invalid_argument("NucNormProblem: anchor length does not match the variable dimension");
  }
}

void AdmmSettings::validate() const {
  if (!(t0 > 0.0)) throw std::invalid_argument("AdmmSettings: t0 must be positive");
  if (!(mu > 1.0)) throw std::invalid_argument("AdmmSettings: mu must exceed 1");
  if (!(tau > 1.0)) throw std::invalid_argument("AdmmSettings: tau must exceed 1");
  if (!(eps_abs > 0.0) || !(eps_rel > 0.0)) {
    throw std::invalid_argument("AdmmSettings: tolerances must be positive");
  }
  if (max_iter < 1) throw std::invalid_argument("AdmmSettings: max_iter must be >= 1");
}

double nuclear_norm(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues().sum();
}

Matrix svt(const Matrix& m, double theta) {
  if (!(theta >= 0.0)) {
    throw std::invalid_argument("svt: threshold must be nonnegative");
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector d = (svd.singularValues().array() - theta).max(0.0);
  return svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
}

Eigen::LLT<Matrix> factor_normal_matrix(const NucNormProblem& prob, const Matrix& gram, double t) {
  Matrix k = t * gram;
  prob.quad.add_to(k);
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("admm: factorization of C + t*M failed (matrix not positive definite)");
  }
  return llt;
}

Vector x_update(const NucNormProblem& prob, const Matrix& X, const Matrix& Z, double t,
                const Eigen::LLT<Matrix>& factor) {
  const Vector rhs =
      prob.map.apply_adjoint(t * (X + prob.offset) - Z) + prob.quad.apply(prob.anchor);
  return factor.solve(rhs);
}

double update_penalty(double t, double rp_norm, double rd_norm, const AdmmSettings& s) {
  if (!(t > 0.0)) throw std::invalid_argument("update_penalty: t must be positive");
  if (rp_norm > s.mu * rd_norm) return s.tau * t;
  if (rd_norm > s.mu * rp_norm) return t / s.tau;
  return t;
}

namespace {

void emit_trace(std::ostream& os, int iter, const AdmmIterRecord& rec) {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", iter, rec.rp, rec.rd,
                rec.eps_p, rec.eps_d, rec.t, rec.objective);
  os << buf;
}

}  // namespace

AdmmState solve(const NucNormProblem& prob, const AdmmSettings& s, const Matrix* gram) {
  s.validate();
  prob.validate();

  const int n = prob.map.var_dim();
  const int p = prob.map.out_rows();
  const int q = prob.map.out_cols();

  Matrix gram_local;
  if (gram == nullptr) {
    gram_local = prob.map.gram_matrix();
    gram = &gram_local;
  }

  AdmmState st;
  st.x = Vector::Zero(n);
  st.X = -prob.offset;
  st.Z = Matrix::Zero(p, q);
  st.t = s.t0;
  st.history.reserve(std::min(s.max_iter, 4096));

  Eigen::LLT<Matrix> factor = factor_normal_matrix(prob, *gram, st.t);
  int penalty_changes = 0;
  const double sqrt_pq = std::sqrt(static_cast<double>(p) * q);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double offset_norm = prob.offset.norm();

  for (int it = 1; it <= s.max_iter; ++it) {
    st.x = x_update(prob, st.X, st.Z, st.t, factor);
    const Matrix ax = prob.map.apply(st.x);

    const Matrix x_prev = st.X;
    st.X = svt(ax - prob.offset + st.Z / st.t, 1.0 / st.t);

    const Matrix rp = ax - st.X - prob.offset;
    st.Z += st.t * rp;

    const double rp_norm = rp.norm();
    const double rd_norm = (st.t * prob.map.apply_adjoint(x_prev - st.X)).norm();
    const double eps_p =
        sqrt_pq * s.eps_abs + s.eps_rel * std::max({ax.norm(), st.X.norm(), offset_norm});
    const double eps_d = sqrt_n * s.eps_abs + s.eps_rel * prob.map.apply_adjoint(st.Z).norm();

    Vector dx = st.x - prob.anchor;
    const double objective = nuclear_norm(ax - prob.offset) + 0.5 * prob.quad.quad_form(dx);

    st.iter = it;
    st.history.push_back({rp_norm, rd_norm, eps_p, eps_d, st.t, objective});
    if (s.trace != nullptr) {
      emit_trace(*s.trace, it, st.history.back());
    }

    if (rp_norm <= eps_p && rd_norm <= eps_d) {
      st.converged = true;
      break;
    }

    if (penalty_changes < s.max_penalty_changes) {
      const double t_new = update_penalty(st.t, rp_norm, rd_norm, s);
      if (t_new != st.t) {
        st.t = t_new;
        ++penalty_changes;
        factor = factor_normal_matrix(prob, *gram, st.t);
      }
    }
  }
  return st;
}

}  // namespace nnsid
