#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sli/error.hpp"
#include "sli/tabular.hpp"

namespace sli {

inline constexpr const char* kInterceptName = "(Intercept)";

/// One Wald row: estimate, standard error, z = estimate / std_error and the
/// two-sided p-value.
struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double z_value = 0.0;
  double p_value = 1.0;
};

/// Fills z_value and p_value from the estimate and standard error.
Coefficient make_coefficient(std::string name, double estimate, double std_error);

struct LogitModel {
  /// terms[0] is the intercept; terms[1..] follow feature_names.
  std::vector<Coefficient> terms;
  std::vector<std::string> feature_names;
  bool converged = false;
  std::size_t iterations = 0;
  double log_likelihood = 0.0;

  const Coefficient& intercept() const { return terms.front(); }
  std::span<const Coefficient> features() const {
    return std::span<const Coefficient>(terms).subspan(1);
  }
};

struct LogitOptions {
  double tolerance = 1e-8;  // on max |coefficient change| (standardized scale)
  std::size_t max_iterations = 100;
  double divergence_bound = 1e3;  // |standardized coefficient| treated as separation
};

/// Raised on perfect separation, a singular information matrix, or too few rows.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// [1 | x_cols] design matrix, one row per observation.
Eigen::MatrixXd design_matrix(const FeatureMatrix& data, std::span<const std::size_t> columns);

/// Inverse logit, evaluated without overflow for large |eta|.
double sigmoid(double eta);

/// Binomial log-likelihood sum y eta - log(1 + e^eta), eta = X beta.
double log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta);

/// Gradient of log_likelihood: X^T (y - sigmoid(X beta)).
Eigen::VectorXd score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta);

/// Maximum-likelihood logistic regression with intercept by Newton-Raphson
/// (iteratively reweighted least squares). Columns are z-scored for the
/// iterations; estimates and standard errors are reported on the original
/// scale (standard errors from the inverse observed information, mapped
/// through the same affine transform). An empty column set fits the
/// intercept alone.
LogitModel fit_logit(const FeatureMatrix& data, std::span<const std::size_t> columns,
                     const LogitOptions& options = {});
LogitModel fit_logit(const FeatureMatrix& data, const LogitOptions& options = {});

/// {P(y=0|x), P(y=1|x)}; `x` holds the model's features in model order.
std::array<double, 2> predict_probabilities(const LogitModel& model, std::span<const double> x);

/// All terms of a converged model, intercept first. Throws sli::Error otherwise.
std::vector<Coefficient> wald_table(const LogitModel& model);

/// Fixed-width text rendering of a Wald table.
std::string render_wald_table(std::span<const Coefficient> rows);

struct EliminationRound {
  std::string dropped;
  double p_value = 0.0;
};

struct EliminationTrace {
  std::vector<EliminationRound> rounds;
  std::vector<std::string> surviving;
};

struct EliminationResult {
  LogitModel model;
  EliminationTrace trace;
};

/// Thrown when every feature has been dropped; carries the rounds so far.
class EliminationError : public Error {
 public:
  EliminationError(const std::string& what, EliminationTrace trace)
      : Error(what), trace_(std::move(trace)) {}
  const EliminationTrace& trace() const { return trace_; }

 private:
  EliminationTrace trace_;
};

/// Refit, then drop the single feature with the largest p-value above
/// `alpha` (first column on ties), until every remaining feature has
/// p <= alpha. The intercept is never dropped. `max_rounds` > 0 stops after
/// that many drops even if some p-value still exceeds alpha.
EliminationResult backward_eliminate(const FeatureMatrix& data, double alpha = 0.05,
                                     std::size_t max_rounds = 0,
                                     const LogitOptions& options = {});

}  // namespace sli
