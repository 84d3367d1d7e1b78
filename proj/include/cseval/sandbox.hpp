#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cseval/corpus.hpp"

namespace cseval::sandbox {

using json = nlohmann::ordered_json;

struct ExecutionLimits {
  int wall_time_ms = 5000;
  int cpu_time_ms = 5000;
  long memory_bytes = 256l * 1024 * 1024;
  long max_output_bytes = 1l * 1024 * 1024;
  bool network_allowed = false;
  void validate() const;
};

enum class CaseStatus { pass, wrong_output, runtime_error, compile_error, timeout,
                        resource_exceeded };

const char* to_string(CaseStatus s);
CaseStatus case_status_from_string(const std::string& s);

struct CaseOutcome {
  CaseStatus status = CaseStatus::runtime_error;
  std::string stdout_text;  // truncated at max_output_bytes
  std::string stderr_text;  // truncated at max_output_bytes
  long duration_ms = 0;
};

struct CandidateGroundTruth {
  double pass_ratio = 0.0;
  int executability = 0;
  std::vector<CaseOutcome> outcomes;  // one per test case, corpus order
};

// Command template; "{script}" is replaced by the entry file. Tags with
// python_semantics get the pre-run compile gate and call-mode support.
struct Toolchain {
  std::vector<std::string> argv_template;
  bool python_semantics = true;
};

struct ToolchainTable {
  std::map<std::string, Toolchain> by_tag;
  static ToolchainTable defaults();
  const Toolchain& lookup(const std::string& language_tag) const;
};

struct CompareOptions {
  bool stdio_trim = true;                  // per-line trailing space + trailing blank lines
  std::optional<double> float_tolerance;   // call-mode numeric slack
};

// stdio comparison: line sequences equal after stripping trailing whitespace
// on each line and trailing blank lines (both off when trim=false).
bool compare_output(const std::string& actual, const std::string& expected, bool trim = true);

// call comparison: structural equality; integers and reals compare by value,
// within tolerance when set.
bool compare_values(const json& actual, const json& expected,
                    std::optional<double> tolerance = std::nullopt);

// One fresh process in a fresh scratch directory. Candidate failures land in
// the outcome; only environment/setup problems throw.
CaseOutcome run_case(const std::string& code, const corpus::TestCase& test_case,
                     const ExecutionLimits& limits, const Toolchain& toolchain,
                     const CompareOptions& options = {});

// Syntax gate run once per candidate; empty optional when the toolchain has
// no such gate.
std::optional<CaseOutcome> compile_check(const std::string& code, const ExecutionLimits& limits,
                                         const Toolchain& toolchain);

CandidateGroundTruth evaluate_candidate(const std::string& code,
                                        const std::vector<corpus::TestCase>& cases,
                                        const ExecutionLimits& limits,
                                        const Toolchain& toolchain,
                                        const CompareOptions& options = {});

// Raw oracle execution: runs code on an input and captures what it
// produced, with no expected value to compare against.
struct ReferenceRun {
  bool ok = false;                                  // ran to completion cleanly
  CaseStatus status = CaseStatus::runtime_error;    // pass when ok
  std::string stdout_text;
  json result;                                      // call-mode return value
};

ReferenceRun run_reference(const std::string& code, corpus::CaseMode mode,
                           const std::string& stdin_data, const std::string& entry_point,
                           const json& args, const ExecutionLimits& limits,
                           const Toolchain& toolchain);

struct CorpusAggregates {
  double avg_pass_ratio = 0.0;
  double pass_at_1 = 0.0;
};

// Mean PassRatio over all candidates and the fraction passing every case.
CorpusAggregates aggregate_corpus(const std::vector<std::vector<CandidateGroundTruth>>& truths);

// Bounded worker pool; fn(i) runs once for each i in [0, count). The first
// exception is rethrown on the calling thread after all workers finish.
void parallel_for(size_t count, int jobs, const std::function<void(size_t)>& fn);

// All (task, candidate) verdicts for a corpus, in corpus order regardless of
// scheduling.
std::vector<std::vector<CandidateGroundTruth>> evaluate_corpus(
    const std::vector<corpus::TaskRecord>& tasks, const ExecutionLimits& limits,
    const ToolchainTable& toolchains, const CompareOptions& options, int jobs);

}  // namespace cseval::sandbox
