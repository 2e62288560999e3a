#include "sli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "sli/error.hpp"
#include "sli/pipeline.hpp"
#include "sli/report.hpp"
#include "sli/tabular.hpp"

namespace fs = std::filesystem;

namespace sli::cli {

namespace {

constexpr const char* kStage1File = "stage1.json";
constexpr const char* kStage2File = "stage2.json";
constexpr const char* kStage3File = "stage3.json";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataSource {
  std::string path;
  std::string label;
};

struct RunOptions {
  DataSource data;
  CascadeConfig config;
  std::string threshold_mode = "fixed";
  std::string out_dir = ".";
  std::size_t threads = 1;
  bool save_forest = false;
};

struct SynthOptions {
  std::size_t n = 1000;
  std::size_t informative = 6;
  std::size_t noise = 37;
  std::uint64_t seed = 0;
  double shift = kDefaultSynthShift;
  std::string out;
};

void add_run_options(CLI::App& cmd, RunOptions& o) {
  // Repeats are legal: values from --config come first and later flags win.
  cmd.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  // Placeholder for --help; expand_config consumes the option before parsing.
  static std::string config_path;
  cmd.add_option("--config", config_path, "key=value file; command-line flags take precedence");
  cmd.add_option("--data", o.data.path, "CSV with a header row")->required();
  cmd.add_option("--label", o.data.label, "label column holding 0 (TD) / 1 (SLI)")->required();
  cmd.add_option("--seed", o.config.seed, "master seed");
  cmd.add_option("--train-fraction", o.config.train_fraction)->check(CLI::Range(0.0, 1.0));
  cmd.add_flag("--stratify-split", o.config.stratify_split);
  cmd.add_option("--trees", o.config.forest.n_trees)->check(CLI::PositiveNumber);
  cmd.add_option("--mtry", o.config.forest.mtry, "0 = floor(sqrt(V))");
  cmd.add_option("--min-leaf", o.config.forest.min_leaf)->check(CLI::PositiveNumber);
  cmd.add_option("--max-depth", o.config.forest.max_depth, "0 = unlimited");
  cmd.add_option("--threshold-mode", o.threshold_mode)
      ->check(CLI::IsMember({"fixed", "median_q3"}));
  cmd.add_option("--importance-threshold", o.config.criteria.importance_threshold);
  cmd.add_option("--correlation-floor", o.config.criteria.correlation_floor)
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--alpha", o.config.alpha)->check(CLI::Range(0.0, 1.0));
  cmd.add_option("--max-elimination-rounds", o.config.max_elimination_rounds, "0 = unlimited");
  cmd.add_option("--k-max", o.config.k_max, "0 = floor(sqrt(N_train))");
  cmd.add_option("--folds", o.config.folds)->check(CLI::Range(2, 1000));
  cmd.add_flag("--stratify-folds", o.config.stratify_folds);
  cmd.add_flag("--select-on-all", o.config.select_on_all,
               "screen and eliminate on every row instead of the training split");
  cmd.add_option("--out", o.out_dir, "output directory");
  cmd.add_option("--threads", o.threads, "worker threads for forest fitting")
      ->check(CLI::PositiveNumber);
  cmd.add_flag("--save-forest", o.save_forest, "also write forest.json");
}

void resolve(RunOptions& o) {
  o.config.criteria.mode = o.threshold_mode == "median_q3" ? StageOneCriteria::Mode::MedianQ3
                                                           : StageOneCriteria::Mode::Fixed;
  o.config.forest.threads = o.threads;
  try {
    o.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

Json artifact_header(const char* kind, const CascadeConfig& config, const DataSource& data) {
  return {{"schema_version", kSchemaVersion},
          {"kind", kind},
          {"master_seed", config.seed},
          {"config", to_json(config)},
          {"data", {{"path", data.path}, {"label", data.label}}}};
}

Json load_artifact(const fs::path& dir, const char* file, const char* kind, const char* stage) {
  const fs::path path = dir / file;
  if (!fs::exists(path)) throw Error(std::string("missing ") + stage + " artifact " + path.string());
  Json doc = read_json(path);
  check_schema_version(doc, path.string());
  if (!doc.contains("kind") || doc.at("kind") != kind)
    throw Error(path.string() + ": expected a " + kind + " artifact");
  return doc;
}

struct Context {
  DataSource data;
  CascadeConfig config;
  FeatureMatrix matrix;
  SplitPair parts;
};

Context context_from(const Json& doc, std::size_t threads) {
  DataSource data{doc.at("data").at("path").get<std::string>(),
                  doc.at("data").at("label").get<std::string>()};
  CascadeConfig config = cascade_config_from_json(doc.at("config"));
  config.forest.threads = threads;
  FeatureMatrix matrix = load_csv(data.path, data.label);
  SplitPair parts = cascade_split(matrix, config);
  return {std::move(data), std::move(config), std::move(matrix), std::move(parts)};
}

void write_text(const std::string& text, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

void write_oob_curve(const std::vector<double>& curve, const fs::path& path) {
  std::ostringstream out;
  out << "trees,oob_error\n";
  for (std::size_t m = 0; m < curve.size(); ++m)
    out << m + 1 << ',' << (std::isnan(curve[m]) ? std::string("NA") : format_double(curve[m])) << '\n';
  write_text(out.str(), path);
}

void write_roc(const std::vector<RocPoint>& points, const fs::path& path) {
  std::ostringstream out;
  out << "threshold,fpr,tpr\n";
  for (const auto& p : points)
    out << (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) << ','
        << format_double(p.fpr) << ',' << format_double(p.tpr) << '\n';
  write_text(out.str(), path);
}

Json split_json(const Context& ctx) {
  return {{"n_rows", ctx.matrix.n_rows()},
          {"n_train", ctx.parts.train_rows.size()},
          {"n_test", ctx.parts.test_rows.size()}};
}

void write_stage1(const Context& ctx, const Stage1Result& s1, const fs::path& out) {
  Json doc = artifact_header("stage1", ctx.config, ctx.data);
  doc["split"] = split_json(ctx);
  doc["stage1"] = to_json(s1);
  write_json(doc, out / kStage1File);
  write_oob_curve(s1.oob_curve, out / "oob_curve.csv");
}

void write_stage2(const Context& ctx, const Stage2Result& s2, const fs::path& out) {
  Json doc = artifact_header("stage2", ctx.config, ctx.data);
  doc["stage2"] = to_json(s2);
  write_json(doc, out / kStage2File);
  write_text(render_wald_table(s2.wald), out / "wald_table.txt");
}

void write_stage3(const Context& ctx, const Stage3Result& s3, const fs::path& out) {
  Json doc = artifact_header("stage3", ctx.config, ctx.data);
  doc["stage3"] = to_json(s3);
  write_json(doc, out / kStage3File);
  write_text(render_k_selection(s3.selection), out / "k_selection.txt");
}

CascadeReport assemble(const Context& ctx) {
  CascadeReport report;
  report.config = ctx.config;
  report.input_features = ctx.matrix.names();
  report.split.n_rows = ctx.matrix.n_rows();
  report.split.train_rows = ctx.parts.train_rows;
  report.split.test_rows = ctx.parts.test_rows;
  return report;
}

void write_final(const Context& ctx, const CascadeReport& report, const fs::path& out) {
  const auto& eval = *report.evaluation;
  Json evaluation = artifact_header("evaluation", ctx.config, ctx.data);
  evaluation["features"] = report.stage3->features;
  evaluation["k"] = report.stage3->k;
  evaluation["metrics"] = to_json(eval.report);
  write_json(evaluation, out / "evaluation.json");
  write_roc(eval.roc, out / "roc_points.csv");

  Json doc = to_json(report);
  doc["data"] = {{"path", ctx.data.path}, {"label", ctx.data.label}};
  write_json(doc, out / "cascade_report.json");
  write_text(render_summary(report), out / "summary.txt");
}

void write_partial(const Context& ctx, const CascadeReport& partial, const fs::path& out) {
  Json doc = to_json(partial);
  doc["data"] = {{"path", ctx.data.path}, {"label", ctx.data.label}};
  write_json(doc, out / "cascade_report.partial.json");
}

fs::path prepare_out(const std::string& dir) {
  fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

Context fresh_context(const RunOptions& o) {
  FeatureMatrix matrix = load_csv(o.data.path, o.data.label);
  SplitPair parts = cascade_split(matrix, o.config);
  return {o.data, o.config, std::move(matrix), std::move(parts)};
}

int cmd_run(const RunOptions& o) {
  const fs::path out = prepare_out(o.out_dir);
  const Context ctx = fresh_context(o);
  CascadeReport report = assemble(ctx);
  try {
    report.stage1 = run_stage1(ctx.matrix, ctx.parts, ctx.config);
    write_stage1(ctx, *report.stage1, out);
    if (report.stage1->kept.empty()) throw Error("no features survived stage 1");
    report.stage2 = run_stage2(ctx.matrix, ctx.parts, *report.stage1, ctx.config);
    write_stage2(ctx, *report.stage2, out);
    report.stage3 = run_stage3(ctx.parts, *report.stage2, ctx.config);
    write_stage3(ctx, *report.stage3, out);
    report.evaluation = run_evaluation(ctx.parts, *report.stage3);
  } catch (const std::exception&) {
    write_partial(ctx, report, out);
    throw;
  }
  write_final(ctx, report, out);
  return kExitOk;
}

int cmd_screen(const RunOptions& o) {
  const fs::path out = prepare_out(o.out_dir);
  const Context ctx = fresh_context(o);
  ForestParams params = ctx.config.forest;
  const auto s1 = run_stage1(ctx.matrix, ctx.parts, ctx.config);
  write_stage1(ctx, s1, out);
  if (o.save_forest) {
    // Same seed and rows as the screen, so this reproduces its forest exactly.
    params.seed = ctx.config.forest_seed();
    const auto& rows = ctx.config.select_on_all ? ctx.matrix : ctx.parts.train;
    write_json(to_json(fit_forest(rows, params)), out / "forest.json");
  }
  if (s1.kept.empty()) throw Error("no features survived stage 1");
  return kExitOk;
}

int cmd_refine(const fs::path& dir, std::size_t threads) {
  const Json s1doc = load_artifact(dir, kStage1File, "stage1", "stage1");
  const Context ctx = context_from(s1doc, threads);
  const auto s1 = stage1_from_json(s1doc.at("stage1"));
  write_stage2(ctx, run_stage2(ctx.matrix, ctx.parts, s1, ctx.config), dir);
  return kExitOk;
}

int cmd_train(const fs::path& dir, std::size_t threads) {
  const Json s2doc = load_artifact(dir, kStage2File, "stage2", "stage2");
  const Context ctx = context_from(s2doc, threads);
  const auto s2 = stage2_from_json(s2doc.at("stage2"));
  write_stage3(ctx, run_stage3(ctx.parts, s2, ctx.config), dir);
  return kExitOk;
}

int cmd_evaluate(const fs::path& dir, std::size_t threads) {
  const Json s1doc = load_artifact(dir, kStage1File, "stage1", "stage1");
  const Json s2doc = load_artifact(dir, kStage2File, "stage2", "stage2");
  const Json s3doc = load_artifact(dir, kStage3File, "stage3", "stage3");
  const Context ctx = context_from(s3doc, threads);
  if (s1doc.at("config") != s3doc.at("config") || s2doc.at("config") != s3doc.at("config"))
    throw Error("stage artifacts in " + dir.string() + " come from different configurations");
  CascadeReport report = assemble(ctx);
  report.stage1 = stage1_from_json(s1doc.at("stage1"));
  report.stage2 = stage2_from_json(s2doc.at("stage2"));
  report.stage3 = stage3_from_json(s3doc.at("stage3"));
  report.evaluation = run_evaluation(ctx.parts, *report.stage3);
  write_final(ctx, report, dir);
  return kExitOk;
}

int cmd_synth(const SynthOptions& o) {
  const auto data = synth_dataset(o.n, o.informative, o.noise, o.seed, o.shift);
  const fs::path out(o.out);
  if (out.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(out.parent_path(), ec);
  }
  write_csv(data, out, "group");
  return kExitOk;
}

// Rewrites `run|screen ... --config FILE ...` as `run|screen --k1=v1 ... ...`.
// Each non-blank, non-# line of FILE is `key=value` for the option --key.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.size() < 2 || (args[1] != "run" && args[1] != "screen")) return args;
  std::vector<std::string> rest;
  std::vector<std::string> from_file;
  for (std::size_t i = 2; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config requires a file path");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
      auto trim = [](std::string t) {
        const auto b = t.find_first_not_of(" \t\r");
        const auto e = t.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      if (key.empty() || key == "config")
        throw UsageError(path + ":" + std::to_string(line_no) + ": invalid key");
      from_file.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
    }
  }
  std::vector<std::string> out{args[0], args[1]};
  out.insert(out.end(), from_file.begin(), from_file.end());
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

void report_error(const char* kind, const std::string& message, int code) {
  Json line = {{"error", message}, {"kind", kind}, {"exit_code", code}};
  std::cerr << line.dump() << std::endl;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Three-stage feature selection and k-NN classification cascade"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "split, screen, refine, train and evaluate");
  add_run_options(*run_cmd, run_opts);

  RunOptions screen_opts;
  auto* screen_cmd = app.add_subcommand("screen", "stage 1: forest importance and Spearman screen");
  add_run_options(*screen_cmd, screen_opts);

  std::string stage_dir = ".";
  std::size_t stage_threads = 1;
  auto add_stage = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--out", stage_dir, "directory holding the earlier stage artifacts");
    cmd->add_option("--threads", stage_threads)->check(CLI::PositiveNumber);
    return cmd;
  };
  auto* refine_cmd = add_stage("refine", "stage 2: logistic backward elimination");
  auto* train_cmd = add_stage("train", "stage 3: cross-validated choice of k");
  auto* evaluate_cmd = add_stage("evaluate", "fit k-NN and score the held-out rows");

  SynthOptions synth_opts;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset");
  synth_cmd->add_option("--n", synth_opts.n, "rows")->check(CLI::Range(std::size_t{20}, std::numeric_limits<std::size_t>::max()));
  synth_cmd->add_option("--informative", synth_opts.informative)
      ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
  synth_cmd->add_option("--noise", synth_opts.noise);
  synth_cmd->add_option("--seed", synth_opts.seed);
  synth_cmd->add_option("--shift", synth_opts.shift, "class mean shift in standard deviations");
  synth_cmd->add_option("--out", synth_opts.out, "CSV path")->required();

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    // CLI11 takes the arguments in reverse order, without the program name.
    std::reverse(args.begin(), args.end());
    args.pop_back();
    app.parse(args);
  } catch (const UsageError& e) {
    report_error("usage", e.what(), kExitUsage);
    return kExitUsage;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what(), kExitUsage);
    return kExitUsage;
  }

  try {
    if (*run_cmd) {
      resolve(run_opts);
      return cmd_run(run_opts);
    }
    if (*screen_cmd) {
      resolve(screen_opts);
      return cmd_screen(screen_opts);
    }
    if (*refine_cmd) return cmd_refine(stage_dir, stage_threads);
    if (*train_cmd) return cmd_train(stage_dir, stage_threads);
    if (*evaluate_cmd) return cmd_evaluate(stage_dir, stage_threads);
    if (*synth_cmd) return cmd_synth(synth_opts);
  } catch (const UsageError& e) {
    report_error("usage", e.what(), kExitUsage);
    return kExitUsage;
  } catch (const std::exception& e) {
    report_error("runtime", e.what(), kExitRuntime);
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace sli::cli
