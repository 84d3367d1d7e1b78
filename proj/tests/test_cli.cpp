#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <random>
#include <fstream>

#include "cseval/cli.hpp"
#include "doctest.h"

using namespace cseval;
using cli::RunConfig;

namespace {

std::filesystem::path work_dir() {
  auto dir = std::filesystem::temp_directory_path() / "cseval-cli-tests";
  std::filesystem::create_directories(dir);
  return dir;
}

corpus::TestCase stdio_case(const std::string& input, const std::string& expected) {
  corpus::TestCase tc;
  tc.mode = corpus::CaseMode::stdio;
  tc.input = input;
  tc.expected = expected;
  return tc;
}

std::vector<corpus::TaskRecord> small_corpus() {
  std::vector<corpus::TaskRecord> tasks;
  corpus::TaskRecord t1;
  t1.task_id = "double";
  t1.nl = "print twice the integer input";
  t1.ref_codes = {"print(int(input())*2)"};
  t1.test_cases = {stdio_case("2\n", "4"), stdio_case("5\n", "10"), stdio_case("0\n", "0")};
  t1.candidates = {{"good", "print(int(input())*2)", std::nullopt},
                   {"half", "v=int(input())\nprint(v*2 if v else 1)", std::nullopt},
                   {"broken", "print((", std::nullopt}};
  tasks.push_back(t1);

  corpus::TaskRecord t2;
  t2.task_id = "greet";
  t2.nl = "print a greeting";
  t2.ref_codes = {"print('hi')"};
  t2.test_cases = {stdio_case("", "hi")};
  t2.candidates = {{"good", "print('hi')", std::nullopt},
                   {"crash", "raise ValueError('x')", std::nullopt}};
  tasks.push_back(t2);
  return tasks;
}

RunConfig base_config(const std::filesystem::path& dir) {
  RunConfig config;
  config.corpus_path = dir / "corpus.jsonl";
  config.out_dir = dir;
  config.jobs = 4;
  config.limits.wall_time_ms = 5000;
  config.limits.cpu_time_ms = 5000;
  return config;
}

}  // namespace

TEST_CASE("config file merge and flag-style overrides") {
  RunConfig config;
  cli::merge_config_json(config, cli::json::parse(R"({
    "corpus": "c.jsonl", "seed": 42, "jobs": 3,
    "limits": {"wall_time_ms": 1234},
    "metrics": {"enabled": ["bleu"], "kappa": 2.5},
    "formats": ["nl_only", "ref_and_nl"],
    "train": {"epochs": 9, "head_dims": [8, 4, 2]},
    "toolchains": {"python": {"argv": ["python3", "{script}"]}}
  })"));
  CHECK(config.corpus_path == "c.jsonl");
  CHECK(config.seed == 42);
  CHECK(config.jobs == 3);
  CHECK(config.limits.wall_time_ms == 1234);
  CHECK(config.metric_settings.enabled == std::vector<std::string>{"bleu"});
  CHECK(config.metric_settings.kappa == 2.5);
  REQUIRE(config.formats.size() == 2);
  CHECK(config.formats[0] == unice::InputFormat::nl_only);
  CHECK(config.train.epochs == 9);
  CHECK_THROWS_AS(cli::merge_config_json(config, cli::json::parse(R"({"formats": ["bogus"]})")),
                  ValidationError);
}

TEST_CASE("execute writes one record per candidate plus a deterministic rerun") {
  auto dir = work_dir();
  corpus::write_corpus(dir / "corpus.jsonl", small_corpus());
  RunConfig config = base_config(dir);

  CHECK(cli::cmd_execute(config) == cli::kExitOk);
  auto truth = corpus::load_ground_truth(dir / "ground_truth.jsonl");
  REQUIRE(truth.size() == 5);  // 3 + 2 candidates
  std::map<std::pair<std::string, std::string>, corpus::GroundTruthRecord> by_key;
  for (const auto& r : truth) by_key[{r.task_id, r.candidate_id}] = r;
  CHECK(by_key.at({"double", "good"}).pass_ratio == 1.0);
  CHECK(by_key.at({"double", "half"}).pass_ratio == 2.0 / 3.0);
  CHECK(by_key.at({"double", "broken"}).executability == 0);
  CHECK(by_key.at({"greet", "crash"}).executability == 0);

  auto first = jsonl::read_text_file(dir / "ground_truth.jsonl");
  CHECK(cli::cmd_execute(config) == cli::kExitOk);
  auto second_truth = corpus::load_ground_truth(dir / "ground_truth.jsonl");
  REQUIRE(second_truth.size() == truth.size());
  for (size_t i = 0; i < truth.size(); ++i) {
    CHECK(truth[i].pass_ratio == second_truth[i].pass_ratio);
    CHECK(truth[i].executability == second_truth[i].executability);
  }
  (void)first;
}

TEST_CASE("execute rejects a zero-case task") {
  auto dir = work_dir();
  auto tasks = small_corpus();
  tasks[0].test_cases.clear();
  corpus::write_corpus(dir / "zero_case.jsonl", tasks);
  RunConfig config = base_config(dir);
  config.corpus_path = dir / "zero_case.jsonl";
  CHECK_THROWS_AS(cli::cmd_execute(config), ValidationError);
}

TEST_CASE("score: row cardinality and orchestration equivalence with direct metric calls") {
  auto dir = work_dir();
  auto tasks = small_corpus();
  corpus::write_corpus(dir / "corpus.jsonl", tasks);
  RunConfig config = base_config(dir);
  config.metric_settings.enabled = {"bleu", "codebleu"};

  CHECK(cli::cmd_score(config) == cli::kExitOk);
  auto rows = corpus::load_metric_rows(dir / "metric_report.jsonl");
  CHECK(rows.size() == 5 * 2);  // candidates x metrics

  for (const auto& row : rows) {
    if (row.metric != "bleu") continue;
    const corpus::TaskRecord* task = nullptr;
    for (const auto& t : tasks)
      if (t.task_id == row.task_id) task = &t;
    REQUIRE(task);
    const corpus::CandidateCode* cand = nullptr;
    for (const auto& c : task->candidates)
      if (c.candidate_id == row.candidate_id) cand = &c;
    REQUIRE(cand);
    double direct = 0.0;
    for (const auto& ref : task->ref_codes)
      direct = std::max(direct,
                        metrics::bleu(metrics::tokenize_code(cand->code, "python"),
                                      metrics::tokenize_code(ref, "python")));
    CHECK(row.value == direct);
  }
}

TEST_CASE("adding a reference never decreases a match metric's score") {
  auto dir = work_dir() / "multiref";
  std::filesystem::create_directories(dir);
  auto tasks = small_corpus();
  RunConfig config = base_config(dir);
  config.corpus_path = dir / "one_ref.jsonl";
  config.metric_settings.enabled = {"bleu", "accuracy", "codebleu"};
  corpus::write_corpus(dir / "one_ref.jsonl", tasks);
  auto one = cli::score_corpus(tasks, config);

  for (auto& t : tasks) t.ref_codes.push_back("import os\nwhile False:\n    pass\n");
  auto two = cli::score_corpus(tasks, config);
  REQUIRE(one.size() == two.size());
  for (size_t i = 0; i < one.size(); ++i) {
    CHECK(two[i].metric == one[i].metric);
    CHECK(two[i].value >= one[i].value);
  }
}

TEST_CASE("learned scorer in nl_only format works without references") {
  auto dir = work_dir();
  // train a checkpoint on the small corpus first
  corpus::write_corpus(dir / "corpus.jsonl", small_corpus());
  RunConfig config = base_config(dir);
  CHECK(cli::cmd_execute(config) == cli::kExitOk);
  config.ground_truth_path = dir / "ground_truth.jsonl";
  config.train.epochs = 2;
  config.train.backbone.dim = 8;
  config.train.backbone.layers = 2;
  config.train.head_dims = {8, 4, 2};
  CHECK(cli::cmd_train(config) == cli::kExitOk);

  // corpus in which no task has any reference code
  auto refless = small_corpus();
  for (auto& t : refless) t.ref_codes.clear();
  corpus::write_corpus(dir / "refless.jsonl", refless);
  RunConfig score_config = base_config(dir);
  score_config.corpus_path = dir / "refless.jsonl";
  score_config.checkpoint_path = dir / "checkpoint.txt";
  score_config.metric_settings.enabled = {"codescore"};
  score_config.formats = {unice::InputFormat::nl_only};
  score_config.out_dir = dir / "nlonly";
  CHECK(cli::cmd_score(score_config) == cli::kExitOk);
  auto rows = corpus::load_metric_rows(dir / "nlonly" / "metric_report.jsonl");
  CHECK(rows.size() == 5 * 2);  // codescore + exec_prob per candidate
  for (const auto& row : rows) {
    CHECK(row.format == "nl_only");
    CHECK(row.value >= 0.0);
    CHECK(row.value <= 1.0);
  }
}

TEST_CASE("correlate: identity metric, reversed metric, and equivalence with stats ops") {
  std::vector<corpus::GroundTruthRecord> truth;
  std::vector<corpus::MetricRow> rows;
  std::mt19937_64 rng(5);
  std::vector<double> ratios{0.0, 0.25, 0.5, 0.75, 1.0, 0.1, 0.9, 0.33};
  for (size_t i = 0; i < ratios.size(); ++i) {
    corpus::GroundTruthRecord r;
    r.task_id = "t" + std::to_string(i);
    r.candidate_id = "c";
    r.pass_ratio = ratios[i];
    r.executability = 1;
    truth.push_back(r);
    rows.push_back({r.task_id, "c", "identity", "ref_only", ratios[i]});
    rows.push_back({r.task_id, "c", "reversed", "ref_only", 1.0 - ratios[i]});
    rows.push_back({r.task_id, "c", "noise", "ref_only",
                    static_cast<double>(rng() % 1000) / 1000.0});
  }
  auto correlations = cli::correlate_rows(truth, rows, stats::TauVariant::plain, true);
  REQUIRE(correlations.size() == 3);
  std::map<std::string, corpus::CorrelationRow> by_metric;
  for (const auto& c : correlations) by_metric[c.metric] = c;

  CHECK(by_metric.at("identity").tau == doctest::Approx(1.0));
  CHECK(by_metric.at("identity").spearman == doctest::Approx(1.0));
  CHECK(by_metric.at("identity").pearson == doctest::Approx(1.0));
  CHECK(by_metric.at("identity").mae == doctest::Approx(0.0));
  CHECK(by_metric.at("reversed").spearman == doctest::Approx(-1.0));

  // equivalence with invoking the stats ops directly
  stats::PairedSeries series;
  for (size_t i = 0; i < ratios.size(); ++i) {
    // correlate sorts by (task_id, candidate_id); mirror it
  }
  std::vector<std::pair<std::string, double>> ordered;
  for (size_t i = 0; i < ratios.size(); ++i)
    ordered.emplace_back("t" + std::to_string(i), ratios[i]);
  std::sort(ordered.begin(), ordered.end());
  std::map<std::string, double> noise_by_task;
  for (const auto& row : rows)
    if (row.metric == "noise") noise_by_task[row.task_id] = row.value;
  std::map<std::string, double> ratio_by_task;
  for (const auto& r : truth) ratio_by_task[r.task_id] = r.pass_ratio;
  for (const auto& [task, ratio] : ordered) {
    series.m1.push_back(noise_by_task.at(task));
    series.m2.push_back(ratio_by_task.at(task));
  }
  CHECK(by_metric.at("noise").tau == doctest::Approx(stats::kendall_tau(series)).epsilon(1e-15));
  CHECK(by_metric.at("noise").spearman ==
        doctest::Approx(stats::spearman(series)).epsilon(1e-15));
  CHECK(by_metric.at("noise").pearson == doctest::Approx(stats::pearson(series)).epsilon(1e-15));
  CHECK(by_metric.at("noise").mae == doctest::Approx(stats::mae(series)).epsilon(1e-15));

  // strict mode flags orphans on either side
  rows.push_back({"t999", "c", "identity", "ref_only", 0.5});
  CHECK_THROWS_AS(cli::correlate_rows(truth, rows, stats::TauVariant::plain, true),
                  ValidationError);
  CHECK_NOTHROW(cli::correlate_rows(truth, rows, stats::TauVariant::plain, false));
}

TEST_CASE("correlation table renders a row per metric/format") {
  corpus::CorrelationRow row;
  row.metric = "bleu";
  row.format = "ref_only";
  row.tau = 0.25;
  row.tau_variant = "plain";
  row.spearman = 0.5;
  row.pearson = std::nullopt;
  row.mae = 0.125;
  row.n = 42;
  auto table = cli::render_correlation_table({row});
  CHECK(table.find("bleu") != std::string::npos);
  CHECK(table.find("0.2500") != std::string::npos);
  CHECK(table.find("42") != std::string::npos);
  CHECK(table.find("plain") != std::string::npos);
}

TEST_CASE("train command produces a checkpoint whose predictions stay in range") {
  auto dir = work_dir() / "train_cmd";
  std::filesystem::create_directories(dir);
  corpus::write_corpus(dir / "corpus.jsonl", small_corpus());
  RunConfig config = base_config(dir);
  config.corpus_path = dir / "corpus.jsonl";
  CHECK(cli::cmd_execute(config) == cli::kExitOk);
  config.ground_truth_path = dir / "ground_truth.jsonl";
  config.train.epochs = 3;
  config.train.backbone.dim = 8;
  config.train.backbone.layers = 2;
  config.train.head_dims = {8, 4, 2};
  CHECK(cli::cmd_train(config) == cli::kExitOk);
  auto model = unice::load_checkpoint(dir / "checkpoint.txt");
  for (const auto& task : small_corpus()) {
    for (const auto& cand : task.candidates) {
      auto seq = unice::assemble(cand.code, task.ref_codes.front(), task.nl, model.vocab,
                                 unice::InputFormat::ref_and_nl);
      auto pred = unice::predict(seq, model);
      CHECK(pred.code_score >= 0.0);
      CHECK(pred.code_score <= 1.0);
      CHECK(pred.p_exec > 0.0);
      CHECK(pred.p_exec < 1.0);
    }
  }
  // training log exists with one line per epoch
  auto log = jsonl::read(dir / "training_log.jsonl");
  CHECK(log.records.size() == 3);
}

TEST_CASE("run_cli end to end: execute then correlate via argv") {
  auto dir = work_dir() / "argv";
  std::filesystem::create_directories(dir);
  corpus::write_corpus(dir / "corpus.jsonl", small_corpus());
  std::string corpus_arg = (dir / "corpus.jsonl").string();
  std::string out_arg = dir.string();

  {
    const char* argv[] = {"cseval", "execute", "--corpus", corpus_arg.c_str(),
                          "--out",  out_arg.c_str(), "--jobs", "4"};
    CHECK(cli::run_cli(8, const_cast<char**>(argv)) == cli::kExitOk);
  }
  {
    const char* argv[] = {"cseval", "score", "--corpus", corpus_arg.c_str(),
                          "--out",  out_arg.c_str(), "--metrics", "bleu,accuracy"};
    CHECK(cli::run_cli(8, const_cast<char**>(argv)) == cli::kExitOk);
  }
  std::string gt_arg = (dir / "ground_truth.jsonl").string();
  std::string report_arg = (dir / "metric_report.jsonl").string();
  {
    const char* argv[] = {"cseval", "correlate",       "--ground-truth", gt_arg.c_str(),
                          "--metric-report", report_arg.c_str(), "--out", out_arg.c_str()};
    CHECK(cli::run_cli(8, const_cast<char**>(argv)) == cli::kExitOk);
  }
  auto correlations = corpus::load_correlations(dir / "correlations.jsonl");
  CHECK(correlations.size() == 2);

  // usage errors exit 1, missing corpus exits 3 (environment)
  {
    const char* argv[] = {"cseval", "bogus-subcommand"};
    CHECK(cli::run_cli(2, const_cast<char**>(argv)) == cli::kExitUsage);
  }
  {
    const char* argv[] = {"cseval", "execute", "--corpus", "/nonexistent/corpus.jsonl"};
    CHECK(cli::run_cli(4, const_cast<char**>(argv)) == cli::kExitInfra);
  }
}

TEST_CASE("extend-tests via run_cli is seed-deterministic") {
  auto dir = work_dir() / "extend_cli";
  std::filesystem::create_directories(dir / "a");
  std::filesystem::create_directories(dir / "b");
  corpus::TaskRecord t;
  t.task_id = "inc";
  t.nl = "print the successor";
  t.ref_codes = {"print(int(input())+1)"};
  t.test_cases = {stdio_case("1\n", "2"), stdio_case("7\n", "8")};
  t.candidates = {{"good", "print(int(input())+1)", std::nullopt}};
  corpus::write_corpus(dir / "corpus.jsonl", {t});
  std::string corpus_arg = (dir / "corpus.jsonl").string();

  for (const char* sub : {"a", "b"}) {
    std::string out_arg = (dir / sub).string();
    const char* argv[] = {"cseval", "extend-tests", "--corpus", corpus_arg.c_str(),
                          "--out",  out_arg.c_str(), "--target", "12", "--seed", "9",
                          "--jobs", "4"};
    CHECK(cli::run_cli(12, const_cast<char**>(argv)) == cli::kExitOk);
  }
  auto a = corpus::load_corpus(dir / "a" / "extended_corpus.jsonl");
  auto b = corpus::load_corpus(dir / "b" / "extended_corpus.jsonl");
  REQUIRE(a.size() == 1);
  REQUIRE(a[0].test_cases.size() == b[0].test_cases.size());
  CHECK(a[0].test_cases.size() > 2);
  for (size_t i = 0; i < a[0].test_cases.size(); ++i)
    CHECK(a[0].test_cases[i].input == b[0].test_cases[i].input);
}
