// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is 0 when the set of failing criteria equals kKnownFailures.
// Those are recorded deviations that are reported, not hidden: a failure
// elsewhere, or a known failure that starts passing, makes the run fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sli/cli.hpp"
#include "sli/forest.hpp"
#include "sli/logit.hpp"
#include "sli/metrics.hpp"
#include "sli/neighbors.hpp"
#include "sli/pipeline.hpp"
#include "sli/rng.hpp"
#include "sli/stats.hpp"
#include "sli/tabular.hpp"

namespace fs = std::filesystem;
using namespace sli;

namespace {

// Table-1 row "Verbos sin declinar": estimate 1.25727, se 0.28994 gives
// p = 1.449e-5, which misses the "p < 1e-5" bound for rows printed as "~ 0".
const std::set<int> kKnownFailures{2};

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

Outcome table3_arithmetic() {
  const auto t0 = Clock::now();
  const auto m = basic_metrics(ConfusionMatrix{238, 4, 67, 5});
  Outcome o;
  o.pass = std::abs(*m.accuracy * 100.0 - 97.13) <= 0.01 && std::abs(*m.f1 - 0.98144) <= 1e-4 &&
           std::abs(*m.recall - 0.97942) <= 1e-4 && std::abs(*m.neg_recall - 0.94366) <= 1e-4 &&
           std::abs(*m.precision - 0.98347) <= 1e-4;
  const double dt = seconds_since(t0);
  o.pass = o.pass && dt < 1.0;
  o.detail = fmt("accuracy=%.4f%% f1=%.5f recall=%.5f neg_recall=%.5f", *m.accuracy * 100.0, *m.f1,
                 *m.recall, *m.neg_recall);
  return o;
}

Outcome table1_wald() {
  struct Row {
    const char* name;
    double estimate, se, z;
    double p;  // negative: printed as "~ 0", must be < 1e-5
  };
  const std::vector<Row> rows{
      {"Verbos sin declinar", 1.25727, 0.28994, 4.336, -1},
      {"Morfemas por oracion", -0.84605, 0.08618, -9.817, -1},
      {"Errores", 0.85750, 0.11493, 7.461, -1},
      {"Promedio silabas", -2.64640, 1.10947, -2.385, 0.01707},
      {"Frecuencia de tipos", -2.73838, 0.91128, -3.005, 0.00266},
      {"Pasado regular", -0.05929, 0.01623, -3.652, 0.00026},
  };
  const auto t0 = Clock::now();
  Outcome o;
  std::string misses;
  for (const auto& r : rows) {
    const auto c = make_coefficient(r.name, r.estimate, r.se);
    const bool z_ok = std::abs(c.z_value - r.z) <= 0.002;
    const bool p_ok = r.p < 0 ? c.p_value < 1e-5 : std::abs(c.p_value - r.p) <= 5e-5;
    if (!z_ok || !p_ok) {
      o.pass = false;
      misses += std::string(misses.empty() ? "" : "; ") + r.name + fmt(" z=%.4f p=%.3g", c.z_value, c.p_value);
    }
  }
  o.pass = o.pass && seconds_since(t0) < 1.0;
  o.detail = misses.empty() ? "all six rows within tolerance" : "out of tolerance: " + misses;
  return o;
}

Outcome spearman_equivalence() {
  Rng rng(1);
  double worst_free = 0.0;
  double worst_tied = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(49);
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    worst_free = std::max(worst_free, std::abs(spearman(x, y) - oracle::spearman_closed_form(x, y)));

    std::vector<double> a(n);
    std::vector<double> b(n);
    for (auto& v : a) v = static_cast<double>(rng.uniform_index(4));
    for (auto& v : b) v = static_cast<double>(rng.uniform_index(4));
    a[0] = 0.0;
    a[1] = 1.0;  // neither side constant
    b[0] = 0.0;
    b[1] = 1.0;
    const double want = oracle::pearson(oracle::counting_ranks(a), oracle::counting_ranks(b));
    worst_tied = std::max(worst_tied, std::abs(spearman(a, b) - want));
  }
  Outcome o;
  o.pass = worst_free <= 1e-12 && worst_tied <= 1e-12;
  o.detail = fmt("max |diff| tie-free=%.2e tied=%.2e over 1000 + 1000 vectors", worst_free, worst_tied);
  return o;
}

Outcome cart_split_oracle() {
  const auto t0 = Clock::now();
  Rng rng(4);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(19);
    const std::size_t v = 1 + rng.uniform_index(5);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < v; ++j) names.push_back("f" + std::to_string(j));
    std::vector<double> values(n * v);
    for (auto& x : values) x = trial % 2 ? rng.normal() : static_cast<double>(rng.uniform_index(4));
    std::vector<int> labels(n);
    for (auto& y : labels) y = static_cast<int>(rng.uniform_index(2));
    labels[0] = 0;
    labels[1] = 1;
    const FeatureMatrix data(names, values, labels);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<std::size_t> features(v);
    std::iota(features.begin(), features.end(), 0);
    const auto got = best_split(data, rows, features);
    const auto want = oracle::exhaustive_split(data, rows);
    const bool same = got.has_value() == want.has_value() &&
                      (!got || (got->feature == want->feature && got->threshold == want->threshold));
    if (!same) ++mismatches;
  }
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = mismatches == 0 && dt < 10.0;
  o.detail = fmt("%.0f mismatches in 200 datasets, %.2f s", mismatches, dt);
  return o;
}

Outcome logistic_fitting() {
  Rng rng(5);
  // Gradient against central differences.
  std::vector<double> values;
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) {
    const double a = rng.normal();
    const double b = rng.normal() * 4.0;
    values.push_back(a);
    values.push_back(b);
    labels.push_back(rng.uniform() < sigmoid(0.3 + a - 0.2 * b) ? 1 : 0);
  }
  const FeatureMatrix data({"a", "b"}, values, labels);
  const std::vector<std::size_t> cols{0, 1};
  const auto x = design_matrix(data, cols);
  Eigen::VectorXd y(data.n_rows());
  for (std::size_t i = 0; i < data.n_rows(); ++i) y[static_cast<Eigen::Index>(i)] = data.label(i);
  double worst_fd = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd beta(3);
    for (int j = 0; j < 3; ++j) beta[j] = rng.normal();
    const auto g = score(x, y, beta);
    Eigen::VectorXd fd(3);
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd hi = beta;
      Eigen::VectorXd lo = beta;
      hi[j] += 1e-5;
      lo[j] -= 1e-5;
      fd[j] = (log_likelihood(x, y, hi) - log_likelihood(x, y, lo)) / 2e-5;
    }
    worst_fd = std::max(worst_fd, (g - fd).norm() / g.norm());
  }

  // Intercept only, 75% positive.
  std::vector<int> three_to_one(400);
  for (std::size_t i = 0; i < three_to_one.size(); ++i) three_to_one[i] = i % 4 == 0 ? 0 : 1;
  std::vector<double> idx(three_to_one.size());
  std::iota(idx.begin(), idx.end(), 0.0);
  const auto icpt = fit_logit(FeatureMatrix({"i"}, idx, three_to_one), std::vector<std::size_t>{});
  const double icpt_err = std::abs(icpt.intercept().estimate - std::log(3.0));

  // Score equations at the optimum.
  const auto m = fit_logit(data);
  double worst_score = 0.0;
  std::vector<double> resid(data.n_rows());
  for (std::size_t i = 0; i < data.n_rows(); ++i) resid[i] = data.label(i) - predict_probabilities(m, data.row(i))[1];
  worst_score = std::abs(std::accumulate(resid.begin(), resid.end(), 0.0));
  for (std::size_t v = 0; v < data.n_cols(); ++v) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.n_rows(); ++i) s += data.at(i, v) * resid[i];
    worst_score = std::max(worst_score, std::abs(s));
  }
  Outcome o;
  o.pass = worst_fd < 1e-6 && icpt_err <= 1e-6 && worst_score <= 1e-6 && m.converged;
  o.detail = fmt("gradient rel err=%.2e, |intercept - ln 3|=%.2e, max |score|=%.2e", worst_fd, icpt_err,
                 worst_score);
  return o;
}

// Independent k-NN decision from a full sort, including the even-k tie rule.
int oracle_knn_predict(const std::vector<std::pair<double, std::size_t>>& nn, std::span<const int> labels,
                       std::size_t k) {
  std::size_t ones = 0;
  double sum0 = 0.0;
  double sum1 = 0.0;
  for (const auto& [d, r] : nn) {
    if (labels[r] == 1) {
      ++ones;
      sum1 += d;
    } else {
      sum0 += d;
    }
  }
  if (2 * ones > k) return 1;
  if (2 * ones < k) return 0;
  return sum0 < sum1 ? 0 : 1;
}

Outcome knn_oracle() {
  Rng rng(6);
  int mismatches = 0;
  int ties = 0;
  int queries = 0;
  while (queries < 500) {
    const std::size_t n = 10 + rng.uniform_index(291);
    const std::size_t v = 1 + rng.uniform_index(10);
    const bool coarse = rng.uniform_index(2) == 0;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < v; ++j) names.push_back("f" + std::to_string(j));
    std::vector<double> values(n * v);
    for (auto& x : values) x = coarse ? static_cast<double>(rng.uniform_index(3)) : rng.normal();
    for (std::size_t j = 0; j < v; ++j) {
      values[j] = 0.0;
      values[v + j] = 2.0;
    }
    std::vector<int> labels(n);
    for (auto& y : labels) y = static_cast<int>(rng.uniform_index(2));
    labels[0] = 0;
    labels[1] = 1;
    const FeatureMatrix data(names, values, labels);
    std::size_t k = 1 + rng.uniform_index(std::min<std::size_t>(n, 20));
    if (queries % 2 == 0 && k % 2 == 1 && k < n) ++k;  // half the queries use even k
    const auto model = fit_knn(data, k);

    std::vector<double> mean(v, 0.0);
    std::vector<double> sd(v, 0.0);
    for (std::size_t j = 0; j < v; ++j) {
      for (std::size_t i = 0; i < n; ++i) mean[j] += data.at(i, j);
      mean[j] /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) sd[j] += std::pow(data.at(i, j) - mean[j], 2);
      sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
    }
    std::vector<std::vector<double>> z(n, std::vector<double>(v));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < v; ++j) z[i][j] = (data.at(i, j) - mean[j]) / sd[j];

    for (int q = 0; q < 10 && queries < 500; ++q, ++queries) {
      std::vector<double> raw(v);
      for (auto& x : raw) x = coarse ? static_cast<double>(rng.uniform_index(3)) : rng.normal();
      std::vector<double> zq(v);
      for (std::size_t j = 0; j < v; ++j) zq[j] = (raw[j] - mean[j]) / sd[j];
      const auto nn = oracle::neighbor_sort(z, zq, k);
      const int want = oracle_knn_predict(nn, data.labels(), k);
      std::size_t ones = 0;
      for (const auto& e : nn) ones += static_cast<std::size_t>(data.label(e.second));
      if (2 * ones == k) ++ties;
      const double want_p = static_cast<double>(ones) / static_cast<double>(k);
      if (predict(model, raw) != want || std::abs(predict_proba(model, raw) - want_p) > 1e-15) ++mismatches;
    }
  }
  Outcome o;
  o.pass = mismatches == 0 && ties > 0;
  o.detail = fmt("%.0f mismatches over %.0f queries (%.0f exact even-k vote ties)", mismatches, queries, ties);
  return o;
}

Outcome auc_oracle() {
  Rng rng(7);
  std::size_t instances = 0;
  std::size_t mismatches = 0;
  for (std::size_t n = 2; n <= 12; ++n) {
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>((mask >> i) & 1u);
      const auto pos = std::count(y.begin(), y.end(), 1);
      if (pos == 0 || pos == static_cast<long>(n)) continue;
      std::vector<double> s(n);
      for (auto& v : s) v = static_cast<double>(rng.uniform_index(4));
      ++instances;
      if (auc_roc(y, s) != oracle::pair_count_auc(y, s)) ++mismatches;
    }
  }
  Outcome o;
  o.pass = mismatches == 0;
  o.detail = fmt("%.0f exact mismatches over %.0f label combinations (n = 2..12)",
                 static_cast<double>(mismatches), static_cast<double>(instances));
  return o;
}

Outcome synthetic_recovery() {
  int successes = 0;
  double slowest = 0.0;
  double worst_accuracy = 1.0;
  std::string notes;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto data = synth_dataset(1000, 6, 37, seed);
    CascadeConfig config;
    config.seed = seed;
    const auto t0 = Clock::now();
    bool recovered = false;
    double accuracy = 0.0;
    try {
      const auto report = run_cascade(data, config);
      const auto& final_set = report.stage3->features;
      recovered = true;
      for (int j = 1; j <= 6; ++j)
        if (std::find(final_set.begin(), final_set.end(), "inf_" + std::to_string(j)) == final_set.end())
          recovered = false;
      accuracy = report.evaluation->report.basic.accuracy.value_or(0.0);
    } catch (const std::exception& e) {
      notes += std::string(" seed ") + std::to_string(seed) + ": " + e.what() + ";";
    }
    slowest = std::max(slowest, seconds_since(t0));
    if (recovered && accuracy >= 0.90) ++successes;
    if (recovered) worst_accuracy = std::min(worst_accuracy, accuracy);
  }
  Outcome o;
  o.pass = successes >= 9 && slowest < 60.0;
  o.detail = fmt("%.0f/10 seeds recovered all 6 planted features with accuracy >= 0.90 "
                 "(lowest accuracy %.3f, slowest seed %.1f s)",
                 successes, worst_accuracy, slowest) +
             notes;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "slicascade");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return sli::cli::run(static_cast<int>(argv.size()), argv.data());
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "sli_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto csv = root / "data.csv";
  write_csv(synth_dataset(600, 6, 20, 99), csv);
  const std::vector<std::string> threads{"1", "1", "4"};
  std::vector<std::string> reports;
  for (std::size_t i = 0; i < threads.size(); ++i) {
    const auto out = root / ("run" + std::to_string(i));
    const int code = cli({"run", "--data", csv.string(), "--label", "group", "--seed", "2024", "--out",
                          out.string(), "--threads", threads[i]});
    if (code != 0) return {false, "run exited with " + std::to_string(code)};
    reports.push_back(slurp(out / "cascade_report.json") + slurp(out / "evaluation.json"));
  }
  Outcome o;
  o.pass = reports[0] == reports[1] && reports[0] == reports[2] && !reports[0].empty();
  o.detail = std::string("repeat run ") + (reports[0] == reports[1] ? "identical" : "DIFFERS") +
             ", 4 threads vs 1 " + (reports[0] == reports[2] ? "identical" : "DIFFERS");
  return o;
}

Outcome scale_check() {
  const auto data = synth_dataset(1063, 6, 37, 1063);
  CascadeConfig config;
  config.seed = 1063;
  config.forest.n_trees = 500;
  config.forest.threads = 1;
  const auto t0 = Clock::now();
  try {
    run_cascade(data, config);
  } catch (const std::exception& e) {
    return {false, std::string("cascade failed: ") + e.what()};
  }
  const double dt = seconds_since(t0);
  return {dt < 30.0, fmt("1063 x 43, 500 trees, single thread: %.2f s", dt)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"Table-3 arithmetic", table3_arithmetic},
      {"Table-1 Wald oracle", table1_wald},
      {"Spearman equivalence", spearman_equivalence},
      {"CART split oracle", cart_split_oracle},
      {"Logistic fitting", logistic_fitting},
      {"k-NN oracle", knn_oracle},
      {"AUC oracle", auc_oracle},
      {"End-to-end synthetic recovery", synthetic_recovery},
      {"Determinism", determinism},
      {"Scale check", scale_check},
  };
  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    const char* note = !o.pass && kKnownFailures.count(id) ? " (known deviation)" : "";
    std::printf("criterion %2d %s: %s%s | %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, note,
                o.detail.c_str());
    std::fflush(stdout);
  }
  const bool as_expected = failed == kKnownFailures;
  std::printf("%zu/%zu criteria pass; failing set %s the recorded known deviations\n",
              criteria.size() - failed.size(), criteria.size(), as_expected ? "matches" : "DOES NOT match");
  return as_expected ? 0 : 1;
}
