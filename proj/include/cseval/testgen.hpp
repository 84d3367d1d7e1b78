#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cseval/corpus.hpp"
#include "cseval/sandbox.hpp"

namespace cseval::testgen {

using json = nlohmann::ordered_json;

struct TypeDescriptor {
  enum class Kind { integer, real, string, boolean, sequence, tuple, map, union_ };
  Kind kind = Kind::integer;
  // sequence: 0..1 element descriptors (0 when no element was observed);
  // tuple: one per slot; map: 0..1 value descriptors; union: the members.
  std::vector<TypeDescriptor> params;
  std::optional<std::pair<double, double>> observed_range;      // numeric kinds
  std::optional<std::pair<size_t, size_t>> observed_lengths;    // string/sequence

  bool matches(const json& value) const;  // shape only; ranges are advisory
  std::string describe() const;
};

// Least general descriptor covering every example; arrays infer as
// sequences. Throws ValidationError naming the offending example for value
// shapes outside the supported kinds.
TypeDescriptor infer_input_type(const std::vector<json>& examples);

// Per-slot inference for call-mode argument lists (fixed arity).
TypeDescriptor infer_call_args_type(const std::vector<json>& args_examples);

struct GenerationBudget {
  int target_count = 100;
  int max_attempts = 2000;
  uint64_t seed = 1;
  double w_boundary = 0.3;
  double w_random = 0.5;
  double w_mutation = 0.2;
  void validate() const;
};

struct EnumerationResult {
  std::vector<json> inputs;  // deduplicated, deterministic for a fixed seed
  int shortfall = 0;         // target_count minus what max_attempts yielded
};

// Boundary values first (0, +-1, observed min/max and min-1/max+1 for
// integers; empty and single-element cases for strings/sequences), then
// seeded random and mutation draws per the strategy mix.
EnumerationResult enumerate_inputs(const TypeDescriptor& desc, const GenerationBudget& budget,
                                   const std::vector<json>& originals = {});

struct OracleStats {
  int dropped = 0;  // inputs where the reference failed or timed out
};

// Runs the reference on each input; inputs it survives become test cases
// with case_origin=extended. Callers must have sanity-gated the reference
// on the task's original cases.
std::vector<corpus::TestCase> oracle_outputs(const std::string& ref_code,
                                             corpus::CaseMode mode,
                                             const std::string& entry_point,
                                             const std::vector<json>& inputs,
                                             const sandbox::ExecutionLimits& limits,
                                             const sandbox::Toolchain& toolchain,
                                             int jobs = 1, OracleStats* stats = nullptr);

// Original cases plus extended cases, deduplicated by input. The first
// reference passing the sanity gate is the oracle; other gated references
// are cross-checked and disagreements drop the input.
corpus::TaskRecord extend_task(const corpus::TaskRecord& task, const GenerationBudget& budget,
                               const sandbox::ExecutionLimits& limits,
                               const sandbox::ToolchainTable& toolchains, int jobs = 1);

// Renders a generated structured value as stdin text for stdio tasks.
std::string render_stdio_input(const json& value);
// Parses stdio input text into the structured value space used for
// inference (integers, reals, int rows, or plain strings).
json parse_stdio_input(const std::string& input);

struct LlmClientConfig {
  bool enabled = false;
  std::string endpoint;        // chat-completion URL, e.g. http://host:port/v1/chat/completions
  std::string model;
  std::string credential_env;  // environment variable holding the bearer token
  bool debug_log = false;      // log request/response with the credential redacted
  int timeout_seconds = 30;
};

struct LlmProposalResult {
  std::vector<corpus::TestCase> cases;  // verified, case_origin=llm_proposed
  std::vector<std::string> diagnostics;
  int dropped = 0;
};

// Asks a chat-completion endpoint for test cases, validates them against
// the inferred input type, and keeps only proposals the reference code
// reproduces.
LlmProposalResult propose_llm_cases(const corpus::TaskRecord& task, const LlmClientConfig& config,
                                    const sandbox::ExecutionLimits& limits,
                                    const sandbox::ToolchainTable& toolchains);

}  // namespace cseval::testgen
