#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sli/forest.hpp"
#include "sli/logit.hpp"
#include "sli/metrics.hpp"
#include "sli/neighbors.hpp"
#include "sli/pipeline.hpp"

// JSON encodings of the library's results. Every top-level document carries
// "schema_version"; optional values (undefined metrics) are written as null.
namespace sli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Throws sli::Error naming both versions when `doc` is not kSchemaVersion.
void check_schema_version(const Json& doc, const std::string& what);

Json to_json(const ForestParams& params);
Json to_json(const Forest& forest);  // bootstrap masks omitted
Forest forest_from_json(const Json& doc);

Json to_json(const Coefficient& c);
Json to_json(const EliminationTrace& trace);

Json to_json(const KSelectionReport& report);
std::string render_k_selection(const KSelectionReport& report);

Json to_json(const ConfusionMatrix& cm);
Json to_json(const EvaluationReport& report);

Json to_json(const StageOneCriteria& criteria);
Json to_json(const CascadeConfig& config);
CascadeConfig cascade_config_from_json(const Json& doc);

Json to_json(const Stage1Result& s);
Stage1Result stage1_from_json(const Json& doc);
Json to_json(const Stage2Result& s);
Stage2Result stage2_from_json(const Json& doc);
Json to_json(const Stage3Result& s);
Stage3Result stage3_from_json(const Json& doc);
Json to_json(const EvaluationOutcome& e);

/// Full cascade document; stages that did not run are null.
Json to_json(const CascadeReport& report);

Json read_json(const std::filesystem::path& path);
/// Writes `doc.dump(2)` plus a trailing newline.
void write_json(const Json& doc, const std::filesystem::path& path);

}  // namespace sli
