#include "sli/logit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sli/stats.hpp"

namespace sli {

Coefficient make_coefficient(std::string name, double estimate, double std_error) {
  Coefficient c;
  c.name = std::move(name);
  c.estimate = estimate;
  c.std_error = std_error;
  c.z_value = estimate / std_error;
  c.p_value = wald_p_value(estimate, std_error);
  return c;
}

Eigen::MatrixXd design_matrix(const FeatureMatrix& data, std::span<const std::size_t> columns) {
  Eigen::MatrixXd x(data.n_rows(), columns.size() + 1);
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < columns.size(); ++j)
      x(i, static_cast<Eigen::Index>(j + 1)) = data.at(r, columns[j]);
  }
  return x;
}

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^eta) without overflow.
double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

Eigen::VectorXd fitted(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta) {
  return (x * beta).unaryExpr([](double eta) { return sigmoid(eta); });
}

}  // namespace

double log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - softplus(eta(i));
  return ll;
}

Eigen::VectorXd score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta) {
  return x.transpose() * (y - fitted(x, beta));
}

LogitModel fit_logit(const FeatureMatrix& data, std::span<const std::size_t> columns,
                     const LogitOptions& options) {
  data.require_both_classes("fit_logit");
  const std::size_t n = data.n_rows();
  const std::size_t p = columns.size() + 1;
  if (n <= p)
    throw ConvergenceError("fit_logit: need more rows (" + std::to_string(n) + ") than " +
                           std::to_string(p) + " coefficients");

  // z-score every feature column; a constant column is collinear with the intercept.
  Eigen::MatrixXd x = design_matrix(data, columns);
  Eigen::VectorXd center = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p));
  for (Eigen::Index j = 1; j < static_cast<Eigen::Index>(p); ++j) {
    const double mean = x.col(j).mean();
    const double sd = std::sqrt((x.col(j).array() - mean).square().mean());
    if (!(sd > 0.0))
      throw ConvergenceError("fit_logit: column \"" + data.names()[columns[j - 1]] +
                             "\" is constant (singular information matrix)");
    center(j) = mean;
    scale(j) = sd;
    x.col(j) = (x.col(j).array() - mean) / sd;
  }

  const auto labels = data.label_values();
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));

  auto information = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd mu = fitted(x, b);
    const Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
    return Eigen::MatrixXd(x.transpose() * w.asDiagonal() * x);
  };

  LogitModel model;
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    const Eigen::MatrixXd info = information(beta);
    const Eigen::VectorXd grad = score(x, y, beta);
    const Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success)
      throw ConvergenceError("fit_logit: singular information matrix");
    const Eigen::VectorXd step = llt.solve(grad);
    if (!step.allFinite()) throw ConvergenceError("fit_logit: singular information matrix");
    beta += step;
    model.iterations = it;
    if (beta.cwiseAbs().maxCoeff() > options.divergence_bound)
      throw ConvergenceError("fit_logit: coefficients diverge (perfect separation)");
    if (step.cwiseAbs().maxCoeff() < options.tolerance) {
      model.converged = true;
      break;
    }
  }

  // Original-scale coefficients are A * beta with
  //   b_0 = beta_0 - sum_j beta_j center_j / scale_j,  b_j = beta_j / scale_j.
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (Eigen::Index j = 1; j < static_cast<Eigen::Index>(p); ++j) {
    a(j, j) = 1.0 / scale(j);
    a(0, j) = -center(j) / scale(j);
  }
  const Eigen::MatrixXd info = information(beta);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
    throw ConvergenceError("fit_logit: singular information matrix at the optimum");
  const Eigen::MatrixXd cov_std =
      ldlt.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)));
  const Eigen::MatrixXd cov = a * cov_std * a.transpose();
  const Eigen::VectorXd estimates = a * beta;

  model.log_likelihood = log_likelihood(x, y, beta);
  model.terms.push_back(make_coefficient(kInterceptName, estimates(0), std::sqrt(cov(0, 0))));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j + 1);
    const auto& name = data.names()[columns[j]];
    model.feature_names.push_back(name);
    model.terms.push_back(make_coefficient(name, estimates(k), std::sqrt(cov(k, k))));
  }
  return model;
}

LogitModel fit_logit(const FeatureMatrix& data, const LogitOptions& options) {
  std::vector<std::size_t> all(data.n_cols());
  std::iota(all.begin(), all.end(), 0);
  return fit_logit(data, all, options);
}

std::array<double, 2> predict_probabilities(const LogitModel& model, std::span<const double> x) {
  const auto feats = model.features();
  if (x.size() != feats.size())
    throw std::invalid_argument("predict_probabilities: expected " + std::to_string(feats.size()) +
                                " features, got " + std::to_string(x.size()));
  double eta = model.intercept().estimate;
  for (std::size_t j = 0; j < feats.size(); ++j) eta += feats[j].estimate * x[j];
  const double p1 = sigmoid(eta);
  const double p0 = sigmoid(-eta);
  return {p0, p1};
}

std::vector<Coefficient> wald_table(const LogitModel& model) {
  if (!model.converged) throw Error("wald_table: model did not converge");
  return model.terms;
}

std::string render_wald_table(std::span<const Coefficient> rows) {
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "feature" << std::right
      << std::setw(14) << "estimate" << std::setw(14) << "std.error" << std::setw(10) << "z"
      << std::setw(14) << "p>|z|" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << r.name << std::right << std::fixed
        << std::setprecision(5) << std::setw(14) << r.estimate << std::setw(14) << r.std_error
        << std::setprecision(3) << std::setw(10) << r.z_value << std::scientific
        << std::setprecision(5) << std::setw(14) << r.p_value << std::defaultfloat << '\n';
  }
  return out.str();
}

EliminationResult backward_eliminate(const FeatureMatrix& data, double alpha,
                                     std::size_t max_rounds, const LogitOptions& options) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  std::vector<std::size_t> columns(data.n_cols());
  std::iota(columns.begin(), columns.end(), 0);

  EliminationTrace trace;
  while (true) {
    LogitModel model = fit_logit(data, columns, options);
    if (!model.converged)
      throw ConvergenceError("backward_eliminate: fit did not converge after " +
                             std::to_string(model.iterations) + " iterations");
    const auto feats = model.features();
    std::size_t worst = 0;
    for (std::size_t j = 1; j < feats.size(); ++j)
      if (feats[j].p_value > feats[worst].p_value) worst = j;
    const bool done = feats[worst].p_value <= alpha ||
                      (max_rounds != 0 && trace.rounds.size() >= max_rounds);
    if (done) {
      trace.surviving = model.feature_names;
      return {std::move(model), std::move(trace)};
    }
    trace.rounds.push_back({feats[worst].name, feats[worst].p_value});
    columns.erase(columns.begin() + static_cast<std::ptrdiff_t>(worst));
    if (columns.empty()) throw EliminationError("all features eliminated", std::move(trace));
  }
}

}  // namespace sli
