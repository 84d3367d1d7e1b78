#include "cseval/corpus.hpp"

#include <set>
#include <unordered_set>

namespace cseval::corpus {

const char* to_string(CaseMode m) {
  return m == CaseMode::stdio ? "stdio" : "call";
}

const char* to_string(CaseOrigin o) {
  switch (o) {
    case CaseOrigin::original: return "original";
    case CaseOrigin::extended: return "extended";
    case CaseOrigin::llm_proposed: return "llm_proposed";
  }
  return "original";
}

CaseMode case_mode_from_string(const std::string& s) {
  if (s == "stdio") return CaseMode::stdio;
  if (s == "call") return CaseMode::call;
  throw ValidationError("unknown test case mode: '" + s + "'");
}

CaseOrigin case_origin_from_string(const std::string& s) {
  if (s == "original") return CaseOrigin::original;
  if (s == "extended") return CaseOrigin::extended;
  if (s == "llm_proposed") return CaseOrigin::llm_proposed;
  throw ValidationError("unknown case_origin: '" + s + "'");
}

namespace {

bool is_plain_value(const json& v) {
  if (v.is_null() || v.is_boolean() || v.is_number() || v.is_string()) return true;
  if (v.is_array()) {
    for (const auto& e : v)
      if (!is_plain_value(e)) return false;
    return true;
  }
  if (v.is_object()) {
    for (const auto& [k, e] : v.items())
      if (!is_plain_value(e)) return false;
    return true;
  }
  return false;  // binary / discarded
}

const json& require(const json& rec, const char* field, const std::string& where) {
  if (!rec.contains(field))
    throw ValidationError(where + ": missing field \"" + field + "\"");
  return rec.at(field);
}

std::string require_string(const json& rec, const char* field, const std::string& where) {
  const json& v = require(rec, field, where);
  if (!v.is_string())
    throw ValidationError(where + ": field \"" + std::string(field) + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace

json task_to_json(const TaskRecord& task) {
  json cases = json::array();
  for (const auto& tc : task.test_cases) {
    json c;
    c["mode"] = to_string(tc.mode);
    if (tc.mode == CaseMode::stdio) {
      c["input"] = tc.input;
    } else {
      c["entry_point"] = tc.entry_point;
      c["args"] = tc.args;
    }
    c["expected"] = tc.expected;
    c["case_origin"] = to_string(tc.origin);
    cases.push_back(std::move(c));
  }
  json cands = json::array();
  for (const auto& cc : task.candidates) {
    json c;
    c["candidate_id"] = cc.candidate_id;
    c["code"] = cc.code;
    if (cc.source_model) c["source_model"] = *cc.source_model;
    cands.push_back(std::move(c));
  }
  json rec;
  rec["task_id"] = task.task_id;
  rec["nl"] = task.nl;
  rec["ref_codes"] = task.ref_codes;
  rec["language_tag"] = task.language_tag;
  rec["test_cases"] = std::move(cases);
  rec["candidates"] = std::move(cands);
  return rec;
}

TaskRecord task_from_json(const json& rec, const std::string& where) {
  if (!rec.is_object()) throw ValidationError(where + ": task record must be an object");
  TaskRecord task;
  task.task_id = require_string(rec, "task_id", where);
  task.nl = require_string(rec, "nl", where);
  const json& refs = require(rec, "ref_codes", where);
  if (!refs.is_array())
    throw ValidationError(where + ": field \"ref_codes\" must be an array");
  for (const auto& r : refs) {
    if (!r.is_string())
      throw ValidationError(where + ": field \"ref_codes\" must hold strings");
    task.ref_codes.push_back(r.get<std::string>());
  }
  if (rec.contains("language_tag")) task.language_tag = require_string(rec, "language_tag", where);

  const json& cases = require(rec, "test_cases", where);
  if (!cases.is_array())
    throw ValidationError(where + ": field \"test_cases\" must be an array");
  size_t ci = 0;
  for (const auto& c : cases) {
    std::string cwhere = where + ": test_cases[" + std::to_string(ci++) + "]";
    TestCase tc;
    tc.mode = case_mode_from_string(require_string(c, "mode", cwhere));
    if (tc.mode == CaseMode::stdio) {
      tc.input = require_string(c, "input", cwhere);
      const json& exp = require(c, "expected", cwhere);
      if (!exp.is_string())
        throw ValidationError(cwhere + ": stdio expected must be a string");
      tc.expected = exp;
    } else {
      tc.entry_point = require_string(c, "entry_point", cwhere);
      const json& args = require(c, "args", cwhere);
      if (!args.is_array())
        throw ValidationError(cwhere + ": field \"args\" must be an array");
      tc.args = args;
      tc.expected = require(c, "expected", cwhere);
    }
    if (c.contains("case_origin"))
      tc.origin = case_origin_from_string(require_string(c, "case_origin", cwhere));
    task.test_cases.push_back(std::move(tc));
  }

  const json& cands = require(rec, "candidates", where);
  if (!cands.is_array())
    throw ValidationError(where + ": field \"candidates\" must be an array");
  size_t gi = 0;
  for (const auto& c : cands) {
    std::string cwhere = where + ": candidates[" + std::to_string(gi++) + "]";
    CandidateCode cc;
    cc.candidate_id = require_string(c, "candidate_id", cwhere);
    cc.code = require_string(c, "code", cwhere);
    if (c.contains("source_model"))
      cc.source_model = require_string(c, "source_model", cwhere);
    task.candidates.push_back(std::move(cc));
  }
  return task;
}

std::vector<TaskRecord> load_corpus(const std::filesystem::path& path, bool strict) {
  jsonl::File file = jsonl::read(path);
  if (file.schema_version != 1)
    throw ValidationError(path.string() + ": unsupported schema_version " +
                          std::to_string(file.schema_version));
  std::vector<TaskRecord> tasks;
  std::unordered_set<std::string> seen_ids;
  size_t line = 1;  // header is line 1
  for (const auto& rec : file.records) {
    ++line;
    std::string where = path.string() + ":" + std::to_string(line);
    TaskRecord task = task_from_json(rec, where);
    if (!seen_ids.insert(task.task_id).second)
      throw ValidationError(where + ": duplicate task_id \"" + task.task_id + "\"");
    tasks.push_back(std::move(task));
  }
  if (strict) {
    auto violations = validate_corpus(tasks);
    if (!violations.empty()) {
      const auto& v = violations.front();
      throw ValidationError(path.string() + ": corpus invalid (" +
                            std::to_string(violations.size()) + " violations), first: task \"" +
                            v.task_id + "\" " + v.field + ": " + v.message);
    }
  }
  return tasks;
}

void write_corpus(const std::filesystem::path& path, const std::vector<TaskRecord>& tasks) {
  std::vector<json> records;
  records.reserve(tasks.size());
  for (const auto& t : tasks) records.push_back(task_to_json(t));
  jsonl::write_atomic(path, 1, records);
}

std::vector<Violation> validate_corpus(const std::vector<TaskRecord>& tasks) {
  std::vector<Violation> out;
  std::set<std::string> ids;
  for (const auto& task : tasks) {
    if (!ids.insert(task.task_id).second)
      out.push_back({task.task_id, "task_id", "duplicate task_id"});
    if (task.ref_codes.empty())
      out.push_back({task.task_id, "ref_codes", "ref_codes must be non-empty"});
    if (task.test_cases.empty())
      out.push_back({task.task_id, "test_cases",
                     "task has zero test cases; cannot be submitted to execution"});
    std::set<std::string> cand_ids;
    for (const auto& c : task.candidates)
      if (!cand_ids.insert(c.candidate_id).second)
        out.push_back({task.task_id, "candidates",
                       "duplicate candidate_id \"" + c.candidate_id + "\""});
    size_t ci = 0;
    for (const auto& tc : task.test_cases) {
      std::string field = "test_cases[" + std::to_string(ci++) + "]";
      if (tc.mode == CaseMode::stdio) {
        if (!tc.expected.is_string())
          out.push_back({task.task_id, field, "stdio expected must be a string"});
      } else {
        if (tc.entry_point.empty())
          out.push_back({task.task_id, field, "call case needs an entry_point"});
        if (!tc.args.is_array())
          out.push_back({task.task_id, field, "call args must be a sequence"});
        else if (!is_plain_value(tc.args))
          out.push_back({task.task_id, field, "call args hold an unsupported value"});
        if (tc.expected.is_discarded())
          out.push_back({task.task_id, field, "expected is missing"});
        else if (!is_plain_value(tc.expected))
          out.push_back({task.task_id, field, "expected holds an unsupported value"});
      }
    }
  }
  return out;
}

void write_ground_truth(const std::filesystem::path& path,
                        const std::vector<GroundTruthRecord>& records) {
  std::vector<json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) {
    json cases = json::array();
    for (const auto& [status, ms] : r.cases)
      cases.push_back(json{{"status", status}, {"duration_ms", ms}});
    json rec;
    rec["task_id"] = r.task_id;
    rec["candidate_id"] = r.candidate_id;
    rec["pass_ratio"] = r.pass_ratio;
    rec["executability"] = r.executability;
    rec["cases"] = std::move(cases);
    lines.push_back(std::move(rec));
  }
  jsonl::write_atomic(path, 1, lines);
}

std::vector<GroundTruthRecord> load_ground_truth(const std::filesystem::path& path) {
  jsonl::File file = jsonl::read(path);
  std::vector<GroundTruthRecord> out;
  size_t line = 1;
  for (const auto& rec : file.records) {
    ++line;
    std::string where = path.string() + ":" + std::to_string(line);
    try {
      GroundTruthRecord r;
      r.task_id = require_string(rec, "task_id", where);
      r.candidate_id = require_string(rec, "candidate_id", where);
      r.pass_ratio = require(rec, "pass_ratio", where).get<double>();
      r.executability = require(rec, "executability", where).get<int>();
      if (rec.contains("cases"))
        for (const auto& c : rec.at("cases"))
          r.cases.emplace_back(c.at("status").get<std::string>(),
                               c.at("duration_ms").get<long>());
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ValidationError(where + ": malformed ground-truth record: " + e.what());
    }
  }
  return out;
}

void write_metric_rows(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  std::vector<json> lines;
  lines.reserve(rows.size());
  for (const auto& r : rows) {
    json rec;
    rec["task_id"] = r.task_id;
    rec["candidate_id"] = r.candidate_id;
    rec["metric"] = r.metric;
    rec["format"] = r.format;
    rec["value"] = r.value;
    lines.push_back(std::move(rec));
  }
  jsonl::write_atomic(path, 1, lines);
}

std::vector<MetricRow> load_metric_rows(const std::filesystem::path& path) {
  jsonl::File file = jsonl::read(path);
  std::vector<MetricRow> out;
  size_t line = 1;
  for (const auto& rec : file.records) {
    ++line;
    std::string where = path.string() + ":" + std::to_string(line);
    try {
      MetricRow r;
      r.task_id = require_string(rec, "task_id", where);
      r.candidate_id = require_string(rec, "candidate_id", where);
      r.metric = require_string(rec, "metric", where);
      r.format = require_string(rec, "format", where);
      r.value = require(rec, "value", where).get<double>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ValidationError(where + ": malformed metric row: " + e.what());
    }
  }
  return out;
}

void write_correlations(const std::filesystem::path& path,
                        const std::vector<CorrelationRow>& rows) {
  std::vector<json> lines;
  lines.reserve(rows.size());
  for (const auto& r : rows) {
    json rec;
    rec["metric"] = r.metric;
    rec["format"] = r.format;
    rec["tau"] = r.tau ? json(*r.tau) : json(nullptr);
    rec["tau_variant"] = r.tau_variant;
    rec["spearman"] = r.spearman ? json(*r.spearman) : json(nullptr);
    rec["pearson"] = r.pearson ? json(*r.pearson) : json(nullptr);
    rec["mae"] = r.mae;
    rec["n"] = r.n;
    lines.push_back(std::move(rec));
  }
  jsonl::write_atomic(path, 1, lines);
}

std::vector<CorrelationRow> load_correlations(const std::filesystem::path& path) {
  jsonl::File file = jsonl::read(path);
  std::vector<CorrelationRow> out;
  size_t line = 1;
  for (const auto& rec : file.records) {
    ++line;
    try {
      CorrelationRow r;
      r.metric = rec.at("metric").get<std::string>();
      r.format = rec.at("format").get<std::string>();
      if (!rec.at("tau").is_null()) r.tau = rec.at("tau").get<double>();
      r.tau_variant = rec.at("tau_variant").get<std::string>();
      if (!rec.at("spearman").is_null()) r.spearman = rec.at("spearman").get<double>();
      if (!rec.at("pearson").is_null()) r.pearson = rec.at("pearson").get<double>();
      r.mae = rec.at("mae").get<double>();
      r.n = rec.at("n").get<size_t>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line) +
                            ": malformed correlation row: " + e.what());
    }
  }
  return out;
}

}  // namespace cseval::corpus
