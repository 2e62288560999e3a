#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "sli/logit.hpp"
#include "sli/rng.hpp"
#include "sli/stats.hpp"
#include "sli/tabular.hpp"

using namespace sli;

namespace {

// Draws y ~ Bernoulli(sigmoid(b0 + sum b_j x_j)) with x_j ~ N(0, scale_j).
FeatureMatrix logistic_data(std::size_t n, const std::vector<double>& beta,
                            const std::vector<double>& scale, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t v = beta.size() - 1;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < v; ++j) names.push_back("x" + std::to_string(j + 1));
  std::vector<double> values;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    double eta = beta[0];
    for (std::size_t j = 0; j < v; ++j) {
      const double x = rng.normal() * scale[j];
      values.push_back(x);
      eta += beta[j + 1] * x;
    }
    labels.push_back(rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0);
  }
  return FeatureMatrix(names, values, labels);
}

}  // namespace

TEST_CASE("sigmoid is stable and symmetric") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) >= 0.0);
  for (double e : {-5.0, -0.3, 2.0}) CHECK(sigmoid(e) + sigmoid(-e) == doctest::Approx(1.0));
}

TEST_CASE("score matches central finite differences") {
  Rng rng(10);
  const auto data = logistic_data(60, {0.2, 1.0, -0.5, 0.3}, {1, 2, 0.5}, 3);
  const std::vector<std::size_t> cols{0, 1, 2};
  const auto x = design_matrix(data, cols);
  Eigen::VectorXd y(data.n_rows());
  for (std::size_t i = 0; i < data.n_rows(); ++i) y[static_cast<Eigen::Index>(i)] = data.label(i);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd beta(4);
    for (int j = 0; j < 4; ++j) beta[j] = rng.normal();
    const auto g = score(x, y, beta);
    Eigen::VectorXd fd(4);
    for (int j = 0; j < 4; ++j) {
      Eigen::VectorXd hi = beta;
      Eigen::VectorXd lo = beta;
      hi[j] += 1e-5;
      lo[j] -= 1e-5;
      fd[j] = (log_likelihood(x, y, hi) - log_likelihood(x, y, lo)) / 2e-5;
    }
    CHECK((g - fd).norm() / std::max(1.0, g.norm()) < 1e-6);
  }
}

TEST_CASE("intercept-only fit recovers logit of the prevalence") {
  std::vector<int> labels(400);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 4 == 0 ? 0 : 1;
  std::vector<double> values(labels.size());
  std::iota(values.begin(), values.end(), 0.0);
  const FeatureMatrix d({"x"}, values, labels);
  const auto m = fit_logit(d, std::vector<std::size_t>{});
  REQUIRE(m.converged);
  CHECK(m.terms.size() == 1);
  CHECK(std::abs(m.intercept().estimate - std::log(3.0)) < 1e-6);
}

TEST_CASE("all-zero informative feature on balanced data") {
  // Balanced labels, and x symmetric in each class: the fit is at zero.
  const FeatureMatrix d({"x"}, {-1, 1, -1, 1, -2, 2, -2, 2}, {0, 0, 1, 1, 0, 0, 1, 1});
  const auto m = fit_logit(d);
  REQUIRE(m.converged);
  CHECK(std::abs(m.intercept().estimate) < 1e-6);
  CHECK(std::abs(m.features()[0].estimate) < 1e-6);
}

TEST_CASE("score equations hold at the fitted optimum") {
  const auto data = logistic_data(500, {-0.4, 0.8, -1.2, 0.0}, {1, 3, 10}, 9);
  const auto m = fit_logit(data);
  REQUIRE(m.converged);
  std::vector<double> resid(data.n_rows());
  for (std::size_t i = 0; i < data.n_rows(); ++i)
    resid[i] = data.label(i) - predict_probabilities(m, data.row(i))[1];
  CHECK(std::abs(std::accumulate(resid.begin(), resid.end(), 0.0)) < 1e-6);
  for (std::size_t v = 0; v < data.n_cols(); ++v) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.n_rows(); ++i) s += data.at(i, v) * resid[i];
    CHECK(std::abs(s) < 1e-6);
  }
}

TEST_CASE("fit agrees with an independent gradient-ascent fit") {
  const std::vector<double> truth{0.3, 1.0, -0.7};
  const auto data = logistic_data(5000, truth, {1, 1}, 21);
  const auto m = fit_logit(data);
  REQUIRE(m.converged);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    x.push_back({1.0, data.at(i, 0), data.at(i, 1)});
    y.push_back(data.label(i));
  }
  const auto ref = oracle::gradient_ascent_logit(x, y, 1e-10);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::abs(m.terms[j].estimate - ref[j]) < 1e-6);
    CHECK(std::abs(m.terms[j].estimate - truth[j]) < 3.0 * m.terms[j].std_error);
  }
}

TEST_CASE("standard errors are invariant to rescaling a column") {
  const auto data = logistic_data(400, {0.1, 0.9, -0.4}, {1, 1}, 5);
  std::vector<double> scaled(data.values().begin(), data.values().end());
  for (std::size_t i = 0; i < data.n_rows(); ++i) scaled[i * 2 + 1] *= 1000.0;
  const FeatureMatrix d2(data.names(), scaled, std::vector<int>(data.labels().begin(), data.labels().end()));
  const auto a = fit_logit(data);
  const auto b = fit_logit(d2);
  CHECK(b.terms[2].estimate * 1000.0 == doctest::Approx(a.terms[2].estimate).epsilon(1e-8));
  CHECK(b.terms[2].std_error * 1000.0 == doctest::Approx(a.terms[2].std_error).epsilon(1e-8));
  CHECK(b.terms[2].z_value == doctest::Approx(a.terms[2].z_value).epsilon(1e-8));
}

TEST_CASE("model invariants: z, p and probabilities") {
  const auto data = logistic_data(300, {0.0, 0.5, 0.5}, {1, 1}, 6);
  const auto m = fit_logit(data);
  for (const auto& t : m.terms) {
    CHECK(t.std_error > 0.0);
    CHECK(std::abs(t.z_value - t.estimate / t.std_error) < 1e-9);
    CHECK(t.p_value == wald_p_value(t.estimate, t.std_error));
  }
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    const auto p = predict_probabilities(m, data.row(i));
    CHECK(p[0] > 0.0);
    CHECK(p[1] > 0.0);
    CHECK(p[0] + p[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("fit errors") {
  SUBCASE("perfect separation") {
    const FeatureMatrix d({"x"}, {1, 2, 3, 4, 5, 6}, {0, 0, 0, 1, 1, 1});
    CHECK_THROWS_AS(fit_logit(d), ConvergenceError);
  }
  SUBCASE("too few rows") {
    const FeatureMatrix d({"a", "b"}, {1, 2, 3, 5, 2, 1}, {0, 1, 1});
    CHECK_THROWS(fit_logit(d));
  }
  SUBCASE("collinear columns") {
    const auto base = logistic_data(100, {0, 1}, {1}, 2);
    std::vector<double> values;
    for (std::size_t i = 0; i < base.n_rows(); ++i) {
      values.push_back(base.at(i, 0));
      values.push_back(2.0 * base.at(i, 0) + 1.0);
    }
    const FeatureMatrix d({"a", "b"}, values, std::vector<int>(base.labels().begin(), base.labels().end()));
    CHECK_THROWS(fit_logit(d));
  }
  SUBCASE("single class") {
    const FeatureMatrix d({"x"}, {1, 2, 3, 4}, {1, 1, 1, 1});
    CHECK_THROWS(fit_logit(d));
  }
}

TEST_CASE("wald_table reproduces z and p from estimates") {
  struct Row {
    double est, se, z;
  };
  const std::vector<Row> rows{{1.25727, 0.28994, 4.336}, {-0.84605, 0.08618, -9.817}};
  for (const auto& r : rows) CHECK(std::abs(make_coefficient("f", r.est, r.se).z_value - r.z) < 1e-3);
  const auto pasado = make_coefficient("pasado", -0.05929, 0.01623);
  CHECK(std::abs(pasado.z_value + 3.653) < 2e-3);
  CHECK(std::abs(pasado.p_value - 0.00026) < 5e-5);

  LogitModel unconverged;
  unconverged.terms = {make_coefficient(kInterceptName, 0, 1)};
  CHECK_THROWS_AS(wald_table(unconverged), Error);
  const auto text = render_wald_table(std::vector<Coefficient>{pasado});
  CHECK(text.find("pasado") != std::string::npos);
}

TEST_CASE("backward elimination keeps strong features") {
  const auto data = logistic_data(2000, {0.0, 1.0, -1.0, 0.8}, {1, 1, 1}, 4);
  const auto r = backward_eliminate(data);
  CHECK(r.trace.rounds.empty());
  CHECK(r.trace.surviving.size() == 3);
  for (const auto& t : r.model.features()) CHECK(std::abs(t.z_value) > 5.0);
}

TEST_CASE("backward elimination drops noise one feature per round") {
  int kept_both = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = logistic_data(2000, {0.0, 1.0, -1.0, 0, 0, 0}, {1, 1, 1, 1, 1}, 100 + seed);
    const auto r = backward_eliminate(data, 0.05);
    const auto& s = r.trace.surviving;
    const bool has1 = std::find(s.begin(), s.end(), "x1") != s.end();
    const bool has2 = std::find(s.begin(), s.end(), "x2") != s.end();
    if (has1 && has2) ++kept_both;
    CHECK(s.size() + r.trace.rounds.size() == 5);
    for (const auto& round : r.trace.rounds) CHECK(round.p_value > 0.05);
    for (const auto& t : r.model.features()) CHECK(t.p_value <= 0.05);
  }
  CHECK(kept_both >= 9);
}

TEST_CASE("elimination rounds drop the maximal p-value") {
  const auto data = logistic_data(300, {0.0, 0.6, 0.05, 0.02, 0.0}, {1, 1, 1, 1}, 31);
  auto remaining = std::vector<std::string>(data.names());
  const auto r = backward_eliminate(data);
  for (const auto& round : r.trace.rounds) {
    const auto sub = data.select_columns(std::span<const std::string>(remaining));
    const auto m = fit_logit(sub);
    std::size_t worst = 0;
    for (std::size_t j = 1; j < m.features().size(); ++j)
      if (m.features()[j].p_value > m.features()[worst].p_value) worst = j;
    CHECK(round.dropped == remaining[worst]);
    CHECK(round.p_value == doctest::Approx(m.features()[worst].p_value));
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  CHECK(remaining == r.trace.surviving);
}

TEST_CASE("eliminating every feature raises with the trace") {
  const auto data = logistic_data(200, {0.0, 0.0}, {1}, 7);
  try {
    backward_eliminate(data, 1e-9);
    FAIL("expected EliminationError");
  } catch (const EliminationError& e) {
    CHECK(std::string(e.what()).find("all features eliminated") != std::string::npos);
    CHECK(e.trace().rounds.size() == 1);
  }
}

TEST_CASE("max_rounds stops early") {
  const auto data = logistic_data(500, {0.0, 1.0, 0, 0, 0}, {1, 1, 1, 1}, 12);
  const auto r = backward_eliminate(data, 0.999, 1);
  CHECK(r.trace.rounds.size() <= 1);
}
