#include "sli/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sli/error.hpp"

namespace sli {

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> number_or_null(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

const Json& field(const Json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key))
    throw Error(std::string("malformed artifact: missing \"") + key + "\"");
  return doc.at(key);
}

const char* mode_name(StageOneCriteria::Mode mode) {
  return mode == StageOneCriteria::Mode::Fixed ? "fixed" : "median_q3";
}

}  // namespace

void check_schema_version(const Json& doc, const std::string& what) {
  const Json& found = field(doc, "schema_version");
  if (!found.is_number_integer() || found.get<int>() != kSchemaVersion)
    throw Error(what + ": schema version mismatch (expected " + std::to_string(kSchemaVersion) +
                ", found " + found.dump() + ")");
}

Json to_json(const ForestParams& p) {
  return {{"n_trees", p.n_trees},     {"mtry", p.mtry}, {"min_leaf", p.min_leaf},
          {"max_depth", p.max_depth}, {"seed", p.seed}};
}

Json to_json(const Forest& forest) {
  Json trees = Json::array();
  for (const auto& tree : forest.trees) {
    Json nodes = Json::array();
    for (const auto& n : tree.nodes()) {
      if (n.is_leaf()) {
        nodes.push_back({{"counts", {n.counts[0], n.counts[1]}}});
      } else {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"counts", {n.counts[0], n.counts[1]}}});
      }
    }
    trees.push_back(std::move(nodes));
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "forest"},
          {"params", to_json(forest.params)},
          {"n_features", forest.n_features},
          {"importance", forest.importance},
          {"oob_error", optional_number(forest.oob_error)},
          {"trees", std::move(trees)}};
}

Forest forest_from_json(const Json& doc) {
  check_schema_version(doc, "forest");
  Forest forest;
  const Json& p = field(doc, "params");
  forest.params.n_trees = p.at("n_trees").get<std::size_t>();
  forest.params.mtry = p.at("mtry").get<std::size_t>();
  forest.params.min_leaf = p.at("min_leaf").get<std::size_t>();
  forest.params.max_depth = p.at("max_depth").get<std::size_t>();
  forest.params.seed = p.at("seed").get<std::uint64_t>();
  forest.n_features = field(doc, "n_features").get<std::size_t>();
  forest.importance = field(doc, "importance").get<std::vector<double>>();
  forest.oob_error = number_or_null(field(doc, "oob_error"));
  for (const auto& jt : field(doc, "trees")) {
    std::vector<TreeNode> nodes;
    for (const auto& jn : jt) {
      TreeNode n;
      n.counts = {jn.at("counts").at(0).get<std::uint64_t>(), jn.at("counts").at(1).get<std::uint64_t>()};
      if (jn.contains("feature")) {
        n.feature = jn.at("feature").get<std::int32_t>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<std::uint32_t>();
        n.right = jn.at("right").get<std::uint32_t>();
      }
      nodes.push_back(n);
    }
    forest.trees.emplace_back(std::move(nodes));
  }
  return forest;
}

Json to_json(const Coefficient& c) {
  return {{"name", c.name},
          {"estimate", c.estimate},
          {"std_error", c.std_error},
          {"z_value", c.z_value},
          {"p_value", c.p_value}};
}

Json to_json(const EliminationTrace& trace) {
  Json rounds = Json::array();
  for (const auto& r : trace.rounds) rounds.push_back({{"dropped", r.dropped}, {"p_value", r.p_value}});
  return {{"rounds", std::move(rounds)}, {"surviving", trace.surviving}};
}

Json to_json(const KSelectionReport& report) {
  Json scores = Json::array();
  for (const auto& s : report.scores) {
    scores.push_back({{"k", s.k}, {"mae", s.mae}, {"rmse", s.rmse}, {"r2", s.r2}, {"composite", s.composite}});
  }
  Json folds = Json::array();
  for (const auto& f : report.folds) {
    folds.push_back({{"fold", f.fold}, {"k", f.k}, {"mae", f.mae}, {"rmse", f.rmse}, {"r2", f.r2}});
  }
  return {{"chosen_k", report.chosen_k},   {"n_folds", report.n_folds},
          {"fold_seed", report.fold_seed}, {"stratified", report.stratified},
          {"scores", std::move(scores)},   {"folds", std::move(folds)}};
}

std::string render_k_selection(const KSelectionReport& report) {
  std::ostringstream out;
  out << std::setw(4) << "k" << std::setw(12) << "MAE" << std::setw(12) << "RMSE" << std::setw(12)
      << "R2" << std::setw(12) << "composite" << '\n';
  out << std::fixed << std::setprecision(5);
  for (const auto& s : report.scores) {
    out << std::setw(4) << s.k << std::setw(12) << s.mae << std::setw(12) << s.rmse << std::setw(12)
        << s.r2 << std::setw(12) << s.composite << (s.k == report.chosen_k ? "  <-" : "") << '\n';
  }
  return out.str();
}

Json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

Json to_json(const EvaluationReport& r) {
  Json doc = {{"confusion", to_json(r.confusion)},
              {"accuracy", optional_number(r.basic.accuracy)},
              {"precision", optional_number(r.basic.precision)},
              {"recall", optional_number(r.basic.recall)},
              {"neg_recall", optional_number(r.basic.neg_recall)},
              {"f1", optional_number(r.basic.f1)},
              {"auc", optional_number(r.auc)}};
  if (r.regression) {
    doc["rmse"] = r.regression->rmse;
    doc["mae"] = r.regression->mae;
    doc["r2"] = optional_number(r.regression->r2);
  } else {
    doc["rmse"] = nullptr;
    doc["mae"] = nullptr;
    doc["r2"] = nullptr;
  }
  return doc;
}

Json to_json(const StageOneCriteria& c) {
  return {{"mode", mode_name(c.mode)},
          {"importance_threshold", c.importance_threshold},
          {"correlation_floor", c.correlation_floor}};
}

Json to_json(const CascadeConfig& c) {
  return {{"seed", c.seed},
          {"train_fraction", c.train_fraction},
          {"stratify_split", c.stratify_split},
          {"forest", {{"n_trees", c.forest.n_trees},
                      {"mtry", c.forest.mtry},
                      {"min_leaf", c.forest.min_leaf},
                      {"max_depth", c.forest.max_depth}}},
          {"stage1", to_json(c.criteria)},
          {"alpha", c.alpha},
          {"max_elimination_rounds", c.max_elimination_rounds},
          {"k_max", c.k_max},
          {"folds", c.folds},
          {"stratify_folds", c.stratify_folds},
          {"select_on_all", c.select_on_all},
          {"derived_seeds", {{"split", c.split_seed()},
                             {"forest", c.forest_seed()},
                             {"folds", c.fold_seed()}}}};
}

CascadeConfig cascade_config_from_json(const Json& doc) {
  CascadeConfig c;
  c.seed = field(doc, "seed").get<std::uint64_t>();
  c.train_fraction = field(doc, "train_fraction").get<double>();
  c.stratify_split = field(doc, "stratify_split").get<bool>();
  const Json& f = field(doc, "forest");
  c.forest.n_trees = field(f, "n_trees").get<std::size_t>();
  c.forest.mtry = field(f, "mtry").get<std::size_t>();
  c.forest.min_leaf = field(f, "min_leaf").get<std::size_t>();
  c.forest.max_depth = field(f, "max_depth").get<std::size_t>();
  const Json& s = field(doc, "stage1");
  const auto mode = field(s, "mode").get<std::string>();
  if (mode == "fixed") {
    c.criteria.mode = StageOneCriteria::Mode::Fixed;
  } else if (mode == "median_q3") {
    c.criteria.mode = StageOneCriteria::Mode::MedianQ3;
  } else {
    throw Error("malformed artifact: unknown stage-1 mode \"" + mode + "\"");
  }
  c.criteria.importance_threshold = field(s, "importance_threshold").get<double>();
  c.criteria.correlation_floor = field(s, "correlation_floor").get<double>();
  c.alpha = field(doc, "alpha").get<double>();
  c.max_elimination_rounds = field(doc, "max_elimination_rounds").get<std::size_t>();
  c.k_max = field(doc, "k_max").get<std::size_t>();
  c.folds = field(doc, "folds").get<std::size_t>();
  c.stratify_folds = field(doc, "stratify_folds").get<bool>();
  c.select_on_all = field(doc, "select_on_all").get<bool>();
  return c;
}

Json to_json(const Stage1Result& s) {
  Json features = Json::array();
  for (const auto& f : s.features) {
    features.push_back({{"name", f.name},
                        {"importance", f.importance},
                        {"spearman", optional_number(f.spearman)},
                        {"kept", f.kept}});
  }
  return {{"threshold", s.threshold},
          {"oob_error", optional_number(s.oob_error)},
          {"kept", s.kept},
          {"features", std::move(features)}};
}

Stage1Result stage1_from_json(const Json& doc) {
  Stage1Result s;
  s.threshold = field(doc, "threshold").get<double>();
  s.oob_error = number_or_null(field(doc, "oob_error"));
  s.kept = field(doc, "kept").get<std::vector<std::string>>();
  for (const auto& f : field(doc, "features")) {
    s.features.push_back({field(f, "name").get<std::string>(), field(f, "importance").get<double>(),
                          number_or_null(field(f, "spearman")), field(f, "kept").get<bool>()});
  }
  return s;
}

Json to_json(const Stage2Result& s) {
  Json wald = Json::array();
  for (const auto& c : s.wald) wald.push_back(to_json(c));
  return {{"input_features", s.input_features},
          {"trace", to_json(s.trace)},
          {"wald_table", std::move(wald)}};
}

Stage2Result stage2_from_json(const Json& doc) {
  Stage2Result s;
  s.input_features = field(doc, "input_features").get<std::vector<std::string>>();
  const Json& trace = field(doc, "trace");
  for (const auto& r : field(trace, "rounds"))
    s.trace.rounds.push_back({field(r, "dropped").get<std::string>(), field(r, "p_value").get<double>()});
  s.trace.surviving = field(trace, "surviving").get<std::vector<std::string>>();
  for (const auto& c : field(doc, "wald_table")) {
    Coefficient coef;
    coef.name = field(c, "name").get<std::string>();
    coef.estimate = field(c, "estimate").get<double>();
    coef.std_error = field(c, "std_error").get<double>();
    coef.z_value = field(c, "z_value").get<double>();
    coef.p_value = field(c, "p_value").get<double>();
    s.wald.push_back(std::move(coef));
  }
  return s;
}

Json to_json(const Stage3Result& s) {
  return {{"features", s.features}, {"k", s.k}, {"k_selection", to_json(s.selection)}};
}

Stage3Result stage3_from_json(const Json& doc) {
  Stage3Result s;
  s.features = field(doc, "features").get<std::vector<std::string>>();
  s.k = field(doc, "k").get<std::size_t>();
  const Json& sel = field(doc, "k_selection");
  s.selection.chosen_k = field(sel, "chosen_k").get<std::size_t>();
  s.selection.n_folds = field(sel, "n_folds").get<std::size_t>();
  s.selection.fold_seed = field(sel, "fold_seed").get<std::uint64_t>();
  s.selection.stratified = field(sel, "stratified").get<bool>();
  for (const auto& j : field(sel, "scores")) {
    s.selection.scores.push_back({field(j, "k").get<std::size_t>(), field(j, "mae").get<double>(),
                                  field(j, "rmse").get<double>(), field(j, "r2").get<double>(),
                                  field(j, "composite").get<double>()});
  }
  for (const auto& j : field(sel, "folds")) {
    s.selection.folds.push_back({field(j, "fold").get<std::size_t>(), field(j, "k").get<std::size_t>(),
                                 field(j, "mae").get<double>(), field(j, "rmse").get<double>(),
                                 field(j, "r2").get<double>()});
  }
  return s;
}

Json to_json(const EvaluationOutcome& e) {
  return {{"metrics", to_json(e.report)},
          {"n_test", e.truth.size()},
          {"truth", e.truth},
          {"predictions", e.predictions},
          {"scores", e.scores}};
}

Json to_json(const CascadeReport& r) {
  auto or_null = [](const auto& opt) { return opt ? to_json(*opt) : Json(nullptr); };
  return {{"schema_version", kSchemaVersion},
          {"kind", "cascade_report"},
          {"master_seed", r.config.seed},
          {"config", to_json(r.config)},
          {"input_features", r.input_features},
          {"split", {{"n_rows", r.split.n_rows},
                     {"n_train", r.split.train_rows.size()},
                     {"n_test", r.split.test_rows.size()},
                     {"train_rows", r.split.train_rows},
                     {"test_rows", r.split.test_rows}}},
          {"stage1", or_null(r.stage1)},
          {"stage2", or_null(r.stage2)},
          {"stage3", or_null(r.stage3)},
          {"evaluation", or_null(r.evaluation)}};
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const Json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace sli
