#include "dhinf/affine.h"

#include <stdexcept>

#include "dhinf/model.h"

namespace dhinf {

AffineMatrix::AffineMatrix(Eigen::Index rows, Eigen::Index cols, int num_vars)
    : constant_(MatrixXd::Zero(rows, cols)), num_vars_(num_vars) {}

AffineMatrix AffineMatrix::Zero(Eigen::Index rows, Eigen::Index cols,
                                int num_vars) {
  return AffineMatrix(rows, cols, num_vars);
}

AffineMatrix AffineMatrix::Constant(const MatrixXd& value, int num_vars) {
  AffineMatrix a(value.rows(), value.cols(), num_vars);
  a.constant_ = value;
  return a;
}

MatrixXd AffineMatrix::Coefficient(int i) const {
  const auto it = terms_.find(i);
  return it == terms_.end() ? MatrixXd::Zero(rows(), cols()) : it->second;
}

void AffineMatrix::AddTerm(int var, const MatrixXd& coeff) {
  if (var < 0 || var >= num_vars_) throw DimensionError("variable index out of range");
  if (coeff.rows() != rows() || coeff.cols() != cols()) {
    throw DimensionError("coefficient shape mismatch");
  }
  if (coeff.isZero(0.0)) return;
  auto [it, inserted] = terms_.try_emplace(var, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second.isZero(0.0)) terms_.erase(it);
  }
}

MatrixXd AffineMatrix::Evaluate(const VectorXd& x) const {
  if (x.size() != num_vars_) throw DimensionError("variable vector length mismatch");
  MatrixXd out = constant_;
  for (const auto& [i, coeff] : terms_) out += x(i) * coeff;
  return out;
}

AffineMatrix AffineMatrix::transpose() const {
  AffineMatrix t(cols(), rows(), num_vars_);
  t.constant_ = constant_.transpose();
  for (const auto& [i, coeff] : terms_) t.terms_.emplace(i, coeff.transpose());
  return t;
}

AffineMatrix AffineMatrix::Sym() const {
  if (rows() != cols()) throw DimensionError("Sym() needs a square matrix");
  return *this + transpose();
}

void AffineMatrix::CheckCompatible(const AffineMatrix& other) const {
  if (rows() != other.rows() || cols() != other.cols() ||
      num_vars_ != other.num_vars_) {
    throw DimensionError("affine matrix shapes differ");
  }
}

AffineMatrix& AffineMatrix::operator+=(const AffineMatrix& other) {
  CheckCompatible(other);
  constant_ += other.constant_;
  for (const auto& [i, coeff] : other.terms_) AddTerm(i, coeff);
  return *this;
}

AffineMatrix& AffineMatrix::operator-=(const AffineMatrix& other) {
  CheckCompatible(other);
  constant_ -= other.constant_;
  for (const auto& [i, coeff] : other.terms_) AddTerm(i, -coeff);
  return *this;
}

AffineMatrix& AffineMatrix::operator*=(double scale) {
  constant_ *= scale;
  if (scale == 0.0) {
    terms_.clear();
  } else {
    for (auto& [i, coeff] : terms_) coeff *= scale;
  }
  return *this;
}

AffineMatrix AffineMatrix::operator+(const MatrixXd& value) const {
  AffineMatrix out = *this;
  if (value.rows() != rows() || value.cols() != cols()) {
    throw DimensionError("constant shape mismatch");
  }
  out.constant_ += value;
  return out;
}

AffineMatrix operator*(const MatrixXd& left, const AffineMatrix& a) {
  if (left.cols() != a.rows()) throw DimensionError("product shape mismatch");
  AffineMatrix out(left.rows(), a.cols(), a.num_vars());
  out.constant_ = left * a.constant_;
  for (const auto& [i, coeff] : a.terms_) out.AddTerm(i, left * coeff);
  return out;
}

AffineMatrix operator*(const AffineMatrix& a, const MatrixXd& right) {
  if (a.cols() != right.rows()) throw DimensionError("product shape mismatch");
  AffineMatrix out(a.rows(), right.cols(), a.num_vars());
  out.constant_ = a.constant_ * right;
  for (const auto& [i, coeff] : a.terms_) out.AddTerm(i, coeff * right);
  return out;
}

AffineMatrix AffineMatrix::Blocks(
    const std::vector<std::vector<AffineMatrix>>& rows) {
  if (rows.empty() || rows[0].empty()) throw DimensionError("empty block layout");
  const std::size_t ncols = rows[0].size();
  const int nv = rows[0][0].num_vars();
  std::vector<Eigen::Index> heights(rows.size()), widths(ncols);
  for (std::size_t c = 0; c < ncols; ++c) widths[c] = rows[0][c].cols();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != ncols) throw DimensionError("ragged block layout");
    heights[r] = rows[r][0].rows();
    for (std::size_t c = 0; c < ncols; ++c) {
      const AffineMatrix& b = rows[r][c];
      if (b.rows() != heights[r] || b.cols() != widths[c] || b.num_vars() != nv) {
        throw DimensionError("inconsistent block sizes");
      }
    }
  }
  Eigen::Index total_rows = 0, total_cols = 0;
  for (auto h : heights) total_rows += h;
  for (auto w : widths) total_cols += w;

  AffineMatrix out(total_rows, total_cols, nv);
  Eigen::Index r0 = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::Index c0 = 0;
    for (std::size_t c = 0; c < ncols; ++c) {
      const AffineMatrix& b = rows[r][c];
      if (b.rows() > 0 && b.cols() > 0) {
        out.constant_.block(r0, c0, b.rows(), b.cols()) = b.constant_;
        for (const auto& [i, coeff] : b.terms_) {
          auto [it, inserted] = out.terms_.try_emplace(i);
          if (inserted) it->second = MatrixXd::Zero(total_rows, total_cols);
          it->second.block(r0, c0, b.rows(), b.cols()) = coeff;
        }
      }
      c0 += widths[c];
    }
    r0 += heights[r];
  }
  return out;
}

}  // namespace dhinf
