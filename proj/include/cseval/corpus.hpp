#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cseval/jsonl.hpp"

namespace cseval::corpus {

using json = nlohmann::ordered_json;

enum class CaseMode { stdio, call };
enum class CaseOrigin { original, extended, llm_proposed };

const char* to_string(CaseMode m);
const char* to_string(CaseOrigin o);
CaseMode case_mode_from_string(const std::string& s);
CaseOrigin case_origin_from_string(const std::string& s);

// One test case. Which of input / entry_point+args is populated depends on
// the mode; expected is a string for stdio and a structured value for call.
// Structured values are restricted to null, boolean, integer, real, string,
// sequence, and string-keyed map.
struct TestCase {
  CaseMode mode = CaseMode::stdio;
  std::string input;
  std::string entry_point;
  json args = json::array();
  json expected;
  CaseOrigin origin = CaseOrigin::original;
};

struct CandidateCode {
  std::string candidate_id;
  std::string code;
  std::optional<std::string> source_model;
};

struct TaskRecord {
  std::string task_id;
  std::string nl;
  std::vector<std::string> ref_codes;
  std::vector<TestCase> test_cases;
  std::vector<CandidateCode> candidates;
  std::string language_tag = "python";
};

struct Violation {
  std::string task_id;
  std::string field;
  std::string message;
};

json task_to_json(const TaskRecord& task);
// `where` prefixes error messages, e.g. "corpus.jsonl:7".
TaskRecord task_from_json(const json& rec, const std::string& where);

// Line-delimited task records behind a {"schema_version": 1} header.
// strict=true additionally rejects any corpus that validate_corpus would
// flag. Duplicate task ids are an error regardless of strictness.
std::vector<TaskRecord> load_corpus(const std::filesystem::path& path, bool strict = false);
void write_corpus(const std::filesystem::path& path, const std::vector<TaskRecord>& tasks);

// Invariant violations are data, not errors: the report lists all of them.
std::vector<Violation> validate_corpus(const std::vector<TaskRecord>& tasks);

// Per-candidate execution verdict as persisted to ground-truth files.
struct GroundTruthRecord {
  std::string task_id;
  std::string candidate_id;
  double pass_ratio = 0.0;
  int executability = 0;
  std::vector<std::pair<std::string, long>> cases;  // (status, duration_ms)
};

// Per-candidate metric value for one metric in one input format.
struct MetricRow {
  std::string task_id;
  std::string candidate_id;
  std::string metric;
  std::string format;
  double value = 0.0;
};

struct CorrelationRow {
  std::string metric;
  std::string format;
  std::optional<double> tau;
  std::string tau_variant;
  std::optional<double> spearman;
  std::optional<double> pearson;
  double mae = 0.0;
  size_t n = 0;
};

void write_ground_truth(const std::filesystem::path& path,
                        const std::vector<GroundTruthRecord>& records);
std::vector<GroundTruthRecord> load_ground_truth(const std::filesystem::path& path);

void write_metric_rows(const std::filesystem::path& path, const std::vector<MetricRow>& rows);
std::vector<MetricRow> load_metric_rows(const std::filesystem::path& path);

void write_correlations(const std::filesystem::path& path,
                        const std::vector<CorrelationRow>& rows);
std::vector<CorrelationRow> load_correlations(const std::filesystem::path& path);

}  // namespace cseval::corpus
