#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace overid {

/// Structural coefficients and noise variances of the confounder-mediator graph
///
///   w = u_w,  x = d w + u_x,  m = c x + u_m,  y = a m + b w + u_y
///
/// with independent zero-mean Gaussian noises.
struct ScmParams {
  double a = 10.0;  // M -> Y
  double b = 4.0;   // W -> Y
  double c = 5.0;   // X -> M
  double d = 5.0;   // W -> X
  double var_uw = 1.0;
  double var_ux = 1.0;
  double var_um = 1.0;
  double var_uy = 1.0;

  /// Throws InvalidParams unless every variance is finite and strictly positive.
  void validate() const;

  /// Shorthand for d^2 var_uw + var_ux, the marginal variance of X.
  double var_x() const { return d * d * var_uw + var_ux; }
};

double true_effect(const ScmParams& params);

enum class Var { X, Y, W, M };

std::string_view to_string(Var v);
Var parse_var(std::string_view name);

struct CovMatrix {
  std::vector<Var> order;
  Eigen::MatrixXd entries;
};

CovMatrix implied_covariance(const ScmParams& params, std::span<const Var> order);

enum class Schema { Full, ConfounderOnly, MediatorOnly };

std::string_view to_string(Schema s);

/// Columnar samples. The confounder is stored as an n x k matrix so that the
/// same type carries scalar W (k = 1) and multivariate covariates.
class Dataset {
 public:
  Dataset(Schema schema, Eigen::VectorXd x, Eigen::VectorXd y, Eigen::MatrixXd w,
          Eigen::VectorXd m);

  static Dataset full(Eigen::VectorXd x, Eigen::VectorXd y, Eigen::MatrixXd w,
                      Eigen::VectorXd m);
  static Dataset confounder_only(Eigen::VectorXd x, Eigen::VectorXd y, Eigen::MatrixXd w);
  static Dataset mediator_only(Eigen::VectorXd x, Eigen::VectorXd y, Eigen::VectorXd m);

  Schema schema() const { return schema_; }
  std::size_t size() const { return static_cast<std::size_t>(x_.size()); }
  bool has_w() const { return schema_ != Schema::MediatorOnly; }
  bool has_m() const { return schema_ != Schema::ConfounderOnly; }
  std::size_t w_dim() const { return static_cast<std::size_t>(w_.cols()); }

  const Eigen::VectorXd& x() const { return x_; }
  const Eigen::VectorXd& y() const { return y_; }
  /// Throws Schema when the dataset carries no confounder.
  const Eigen::MatrixXd& w() const;
  /// Throws Schema when the dataset carries no mediator.
  const Eigen::VectorXd& m() const;

  /// Column by variable name; W requires a scalar confounder.
  Eigen::VectorXd column(Var v) const;

  /// Rows selected by index, in the given order (repeats allowed).
  Dataset select_rows(std::span<const std::size_t> rows) const;

 private:
  Schema schema_;
  Eigen::VectorXd x_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd w_;
  Eigen::VectorXd m_;
};

/// Draws n rows from the model. Per row the noises are drawn in the order
/// u_w, u_x, u_m, u_y from a single NormalStream seeded with `seed`.
Dataset sample(const ScmParams& params, std::size_t n, std::uint64_t seed);

/// Same noise stream as `sample`, but the treatment is binarized:
/// x = 1{d w + u_x > 0}. The average treatment effect stays a*c.
Dataset sample_binary_treatment(const ScmParams& params, std::size_t n, std::uint64_t seed);

Dataset restrict(const Dataset& data, Schema schema);

/// Subtracts the column means from every column.
Dataset center(const Dataset& data);

/// Uncentered second-moment matrix (1/n) sum s s^T over the requested columns.
Eigen::MatrixXd second_moment(const Dataset& data, std::span<const Var> order);

}  // namespace overid
