#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cseval/corpus.hpp"
#include "cseval/metrics.hpp"
#include "cseval/sandbox.hpp"
#include "cseval/stats.hpp"
#include "cseval/testgen.hpp"
#include "cseval/unice.hpp"

namespace cseval::cli {

using json = nlohmann::ordered_json;

// exit codes
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitInfra = 3;

struct MetricSettings {
  std::vector<std::string> enabled{"bleu", "accuracy", "codebleu", "crystalbleu"};
  metrics::CodeBleuWeights codebleu_weights;
  double kappa = 5.0;
  int crystal_k = 500;
  bool use_idf = false;
  int embed_dim = 64;
  std::string embedding_table;  // file-backed token vectors, hashed when empty
};

struct RunConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path out_dir = ".";
  std::filesystem::path checkpoint_path;
  std::filesystem::path ground_truth_path;
  std::filesystem::path metric_report_path;
  sandbox::ExecutionLimits limits;
  sandbox::CompareOptions compare;
  sandbox::ToolchainTable toolchains = sandbox::ToolchainTable::defaults();
  MetricSettings metric_settings;
  unice::TrainConfig train;
  testgen::GenerationBudget budget;
  testgen::LlmClientConfig llm;
  std::vector<unice::InputFormat> formats{unice::InputFormat::ref_only};
  uint64_t seed = 1;
  int jobs = 1;
  bool strict = false;
  stats::TauVariant tau_variant = stats::TauVariant::plain;
};

// key/value-tree config file; any key a flag also covers is overridden by
// the flag (flags > file > defaults)
void merge_config_json(RunConfig& config, const json& tree);
RunConfig config_from_file(const std::filesystem::path& path);

// orchestration bodies, shared by the CLI entry and the tests
corpus::GroundTruthRecord to_ground_truth_record(const std::string& task_id,
                                                 const std::string& candidate_id,
                                                 const sandbox::CandidateGroundTruth& truth);
std::vector<corpus::MetricRow> score_corpus(const std::vector<corpus::TaskRecord>& tasks,
                                            const RunConfig& config);
std::vector<corpus::CorrelationRow> correlate_rows(
    const std::vector<corpus::GroundTruthRecord>& truth,
    const std::vector<corpus::MetricRow>& rows, stats::TauVariant variant, bool strict);
std::string render_correlation_table(const std::vector<corpus::CorrelationRow>& rows);

int cmd_execute(const RunConfig& config);
int cmd_extend(const RunConfig& config);
int cmd_score(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_correlate(const RunConfig& config);
int cmd_report(const RunConfig& config);

int run_cli(int argc, char** argv);

}  // namespace cseval::cli
