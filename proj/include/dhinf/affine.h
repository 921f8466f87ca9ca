#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

namespace dhinf {

/// A matrix that depends affinely on a vector of scalar decision variables:
///   constant() + sum_i x_i * term(i).
/// Only variables with a nonzero coefficient are stored. Ordering is by
/// variable index so evaluation and assembly are deterministic.
class AffineMatrix {
 public:
  AffineMatrix() = default;
  AffineMatrix(Eigen::Index rows, Eigen::Index cols, int num_vars);

  static AffineMatrix Zero(Eigen::Index rows, Eigen::Index cols, int num_vars);
  static AffineMatrix Constant(const Eigen::MatrixXd& value, int num_vars);

  Eigen::Index rows() const { return constant_.rows(); }
  Eigen::Index cols() const { return constant_.cols(); }
  int num_vars() const { return num_vars_; }

  const Eigen::MatrixXd& constant() const { return constant_; }
  Eigen::MatrixXd& constant() { return constant_; }
  const std::map<int, Eigen::MatrixXd>& terms() const { return terms_; }

  /// Coefficient of variable i (zero matrix if absent).
  Eigen::MatrixXd Coefficient(int i) const;
  void AddTerm(int var, const Eigen::MatrixXd& coeff);

  Eigen::MatrixXd Evaluate(const Eigen::VectorXd& x) const;
  AffineMatrix transpose() const;

  /// X + X^T, exactly symmetric.
  AffineMatrix Sym() const;

  AffineMatrix& operator+=(const AffineMatrix& other);
  AffineMatrix& operator-=(const AffineMatrix& other);
  AffineMatrix& operator*=(double scale);

  friend AffineMatrix operator+(AffineMatrix a, const AffineMatrix& b) { return a += b; }
  friend AffineMatrix operator-(AffineMatrix a, const AffineMatrix& b) { return a -= b; }
  friend AffineMatrix operator-(AffineMatrix a) { return a *= -1.0; }
  friend AffineMatrix operator*(double s, AffineMatrix a) { return a *= s; }
  friend AffineMatrix operator*(const Eigen::MatrixXd& left, const AffineMatrix& a);
  friend AffineMatrix operator*(const AffineMatrix& a, const Eigen::MatrixXd& right);

  AffineMatrix operator+(const Eigen::MatrixXd& value) const;

  /// Assembles a block matrix. Every row of blocks must agree on height and
  /// every column on width.
  static AffineMatrix Blocks(const std::vector<std::vector<AffineMatrix>>& rows);

 private:
  void CheckCompatible(const AffineMatrix& other) const;

  Eigen::MatrixXd constant_;
  std::map<int, Eigen::MatrixXd> terms_;
  int num_vars_ = 0;
};

}  // namespace dhinf
