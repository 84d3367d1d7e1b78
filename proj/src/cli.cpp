#include "cseval/cli.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"

namespace cseval::cli {

void merge_config_json(RunConfig& config, const json& tree) {
  if (!tree.is_object()) throw ValidationError("config root must be an object");
  auto get_path = [&](const char* key, std::filesystem::path& into) {
    if (tree.contains(key)) into = tree.at(key).get<std::string>();
  };
  get_path("corpus", config.corpus_path);
  get_path("out", config.out_dir);
  get_path("checkpoint", config.checkpoint_path);
  get_path("ground_truth", config.ground_truth_path);
  get_path("metric_report", config.metric_report_path);
  if (tree.contains("seed")) config.seed = tree.at("seed").get<uint64_t>();
  if (tree.contains("jobs")) config.jobs = tree.at("jobs").get<int>();
  if (tree.contains("strict")) config.strict = tree.at("strict").get<bool>();
  if (tree.contains("tau_variant")) {
    std::string v = tree.at("tau_variant").get<std::string>();
    if (v == "plain") config.tau_variant = stats::TauVariant::plain;
    else if (v == "tie_corrected") config.tau_variant = stats::TauVariant::tie_corrected;
    else throw ValidationError("unknown tau_variant: " + v);
  }
  if (tree.contains("formats")) {
    config.formats.clear();
    for (const auto& f : tree.at("formats"))
      config.formats.push_back(unice::input_format_from_string(f.get<std::string>()));
  }
  if (tree.contains("limits")) {
    const auto& l = tree.at("limits");
    if (l.contains("wall_time_ms")) config.limits.wall_time_ms = l.at("wall_time_ms").get<int>();
    if (l.contains("cpu_time_ms")) config.limits.cpu_time_ms = l.at("cpu_time_ms").get<int>();
    if (l.contains("memory_bytes")) config.limits.memory_bytes = l.at("memory_bytes").get<long>();
    if (l.contains("max_output_bytes"))
      config.limits.max_output_bytes = l.at("max_output_bytes").get<long>();
    if (l.contains("network_allowed"))
      config.limits.network_allowed = l.at("network_allowed").get<bool>();
  }
  if (tree.contains("compare")) {
    const auto& c = tree.at("compare");
    if (c.contains("stdio_trim")) config.compare.stdio_trim = c.at("stdio_trim").get<bool>();
    if (c.contains("float_tolerance") && !c.at("float_tolerance").is_null())
      config.compare.float_tolerance = c.at("float_tolerance").get<double>();
  }
  if (tree.contains("metrics")) {
    const auto& m = tree.at("metrics");
    if (m.contains("enabled")) {
      config.metric_settings.enabled.clear();
      for (const auto& name : m.at("enabled"))
        config.metric_settings.enabled.push_back(name.get<std::string>());
    }
    if (m.contains("codebleu_weights")) {
      const auto& w = m.at("codebleu_weights");
      if (!w.is_array() || w.size() != 4)
        throw ValidationError("codebleu_weights must be a 4-element array");
      config.metric_settings.codebleu_weights = {w[0].get<double>(), w[1].get<double>(),
                                                 w[2].get<double>(), w[3].get<double>()};
    }
    if (m.contains("kappa")) config.metric_settings.kappa = m.at("kappa").get<double>();
    if (m.contains("crystal_k")) config.metric_settings.crystal_k = m.at("crystal_k").get<int>();
    if (m.contains("use_idf")) config.metric_settings.use_idf = m.at("use_idf").get<bool>();
    if (m.contains("embed_dim")) config.metric_settings.embed_dim = m.at("embed_dim").get<int>();
    if (m.contains("embedding_table"))
      config.metric_settings.embedding_table = m.at("embedding_table").get<std::string>();
  }
  if (tree.contains("train")) {
    const auto& t = tree.at("train");
    if (t.contains("learning_rate")) config.train.learning_rate = t.at("learning_rate").get<double>();
    if (t.contains("epochs")) config.train.epochs = t.at("epochs").get<int>();
    if (t.contains("seed")) config.train.seed = t.at("seed").get<uint64_t>();
    if (t.contains("vocab_cutoff")) config.train.vocab_cutoff = t.at("vocab_cutoff").get<int>();
    if (t.contains("head_dims")) {
      const auto& h = t.at("head_dims");
      if (!h.is_array() || h.size() != 3)
        throw ValidationError("head_dims must be a 3-element array");
      config.train.head_dims = {h[0].get<int>(), h[1].get<int>(), h[2].get<int>()};
    }
    if (t.contains("backbone")) {
      const auto& b = t.at("backbone");
      if (b.contains("kind")) {
        std::string kind = b.at("kind").get<std::string>();
        if (kind == "built_in")
          config.train.backbone.kind = unice::BackboneConfig::Kind::built_in;
        else if (kind == "file_backed")
          config.train.backbone.kind = unice::BackboneConfig::Kind::file_backed;
        else
          throw ValidationError("unknown backbone kind: " + kind);
      }
      if (b.contains("dim")) config.train.backbone.dim = b.at("dim").get<int>();
      if (b.contains("layers")) config.train.backbone.layers = b.at("layers").get<int>();
      if (b.contains("path")) config.train.backbone.path = b.at("path").get<std::string>();
    }
  }
  if (tree.contains("budget")) {
    const auto& b = tree.at("budget");
    if (b.contains("target_count")) config.budget.target_count = b.at("target_count").get<int>();
    if (b.contains("max_attempts")) config.budget.max_attempts = b.at("max_attempts").get<int>();
    if (b.contains("strategy_mix")) {
      const auto& s = b.at("strategy_mix");
      if (s.contains("boundary")) config.budget.w_boundary = s.at("boundary").get<double>();
      if (s.contains("random")) config.budget.w_random = s.at("random").get<double>();
      if (s.contains("mutation")) config.budget.w_mutation = s.at("mutation").get<double>();
    }
  }
  if (tree.contains("toolchains")) {
    for (const auto& [tag, spec] : tree.at("toolchains").items()) {
      sandbox::Toolchain tc;
      tc.argv_template.clear();
      for (const auto& part : spec.at("argv")) tc.argv_template.push_back(part.get<std::string>());
      if (spec.contains("python_semantics"))
        tc.python_semantics = spec.at("python_semantics").get<bool>();
      config.toolchains.by_tag[tag] = std::move(tc);
    }
  }
  if (tree.contains("llm")) {
    const auto& l = tree.at("llm");
    if (l.contains("enabled")) config.llm.enabled = l.at("enabled").get<bool>();
    if (l.contains("endpoint")) config.llm.endpoint = l.at("endpoint").get<std::string>();
    if (l.contains("model")) config.llm.model = l.at("model").get<std::string>();
    if (l.contains("credential_env"))
      config.llm.credential_env = l.at("credential_env").get<std::string>();
    if (l.contains("debug_log")) config.llm.debug_log = l.at("debug_log").get<bool>();
  }
}

RunConfig config_from_file(const std::filesystem::path& path) {
  RunConfig config;
  json tree;
  try {
    tree = json::parse(jsonl::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("config file " + path.string() + ": " + e.what());
  }
  merge_config_json(config, tree);
  return config;
}

corpus::GroundTruthRecord to_ground_truth_record(const std::string& task_id,
                                                 const std::string& candidate_id,
                                                 const sandbox::CandidateGroundTruth& truth) {
  corpus::GroundTruthRecord rec;
  rec.task_id = task_id;
  rec.candidate_id = candidate_id;
  rec.pass_ratio = truth.pass_ratio;
  rec.executability = truth.executability;
  for (const auto& o : truth.outcomes)
    rec.cases.emplace_back(sandbox::to_string(o.status), o.duration_ms);
  return rec;
}

namespace {

void require_corpus(const RunConfig& config) {
  if (config.corpus_path.empty()) throw UsageError("no corpus path given (--corpus)");
}

std::filesystem::path out_file(const RunConfig& config, const char* name) {
  std::filesystem::create_directories(config.out_dir);
  return config.out_dir / name;
}

void fail_on_violations(const std::vector<corpus::Violation>& violations) {
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "corpus failed validation (" << violations.size() << " violations):";
  size_t shown = 0;
  for (const auto& v : violations) {
    if (++shown > 10) {
      msg << "\n  ...";
      break;
    }
    msg << "\n  task \"" << v.task_id << "\" " << v.field << ": " << v.message;
  }
  throw ValidationError(msg.str());
}

}  // namespace

int cmd_execute(const RunConfig& config) {
  require_corpus(config);
  auto tasks = corpus::load_corpus(config.corpus_path);
  fail_on_violations(corpus::validate_corpus(tasks));
  auto truths = sandbox::evaluate_corpus(tasks, config.limits, config.toolchains, config.compare,
                                         config.jobs);
  std::vector<corpus::GroundTruthRecord> records;
  for (size_t t = 0; t < tasks.size(); ++t)
    for (size_t c = 0; c < tasks[t].candidates.size(); ++c)
      records.push_back(to_ground_truth_record(tasks[t].task_id,
                                               tasks[t].candidates[c].candidate_id,
                                               truths[t][c]));
  auto path = out_file(config, "ground_truth.jsonl");
  corpus::write_ground_truth(path, records);
  auto agg = sandbox::aggregate_corpus(truths);
  std::cout << "executed " << records.size() << " candidates over " << tasks.size()
            << " tasks\n"
            << "avg_pass_ratio " << format_double(agg.avg_pass_ratio) << "  pass@1 "
            << format_double(agg.pass_at_1) << "\n"
            << "ground truth written to " << path.string() << "\n";
  return kExitOk;
}

int cmd_extend(const RunConfig& config) {
  require_corpus(config);
  auto tasks = corpus::load_corpus(config.corpus_path);
  fail_on_violations(corpus::validate_corpus(tasks));
  std::vector<corpus::TaskRecord> extended(tasks.size());
  size_t added = 0;
  size_t proposed = 0;
  for (size_t i = 0; i < tasks.size(); ++i) {
    testgen::GenerationBudget budget = config.budget;
    budget.seed = config.seed ^ fnv1a(tasks[i].task_id);  // independent per-task streams
    extended[i] = testgen::extend_task(tasks[i], budget, config.limits, config.toolchains,
                                       config.jobs);
    if (config.llm.enabled) {
      auto llm = testgen::propose_llm_cases(tasks[i], config.llm, config.limits,
                                            config.toolchains);
      for (const auto& diag : llm.diagnostics)
        std::cerr << "llm: " << tasks[i].task_id << ": " << diag << "\n";
      for (auto& tc : llm.cases) extended[i].test_cases.push_back(std::move(tc));
      proposed += llm.cases.size();
    }
    added += extended[i].test_cases.size() - tasks[i].test_cases.size();
  }
  auto path = out_file(config, "extended_corpus.jsonl");
  corpus::write_corpus(path, extended);
  std::cout << "extended " << tasks.size() << " tasks with " << added << " new cases";
  if (config.llm.enabled) std::cout << " (" << proposed << " llm-proposed)";
  std::cout << "\ncorpus written to " << path.string() << "\n";
  return kExitOk;
}

namespace {

struct Scorer {
  const RunConfig& config;
  std::set<metrics::NGram> trivially_shared;
  std::unique_ptr<metrics::EmbeddingProvider> provider;
  std::map<std::string, double> idf;
  std::optional<unice::ModelCheckpoint> model;

  explicit Scorer(const std::vector<corpus::TaskRecord>& tasks, const RunConfig& cfg)
      : config(cfg) {
    auto enabled = [&](const char* name) {
      return std::find(cfg.metric_settings.enabled.begin(), cfg.metric_settings.enabled.end(),
                       name) != cfg.metric_settings.enabled.end();
    };
    std::vector<metrics::TokenSequence> ref_seqs;
    for (const auto& task : tasks)
      for (const auto& ref : task.ref_codes)
        ref_seqs.push_back(metrics::tokenize_code(ref, task.language_tag));
    if (enabled("crystalbleu") && !ref_seqs.empty())
      trivially_shared =
          metrics::compute_trivially_shared(ref_seqs, cfg.metric_settings.crystal_k);
    if (enabled("embed_prf")) {
      if (!cfg.metric_settings.embedding_table.empty())
        provider = std::make_unique<metrics::TableProvider>(cfg.metric_settings.embedding_table);
      else
        provider = std::make_unique<metrics::HashedContextProvider>(cfg.metric_settings.embed_dim);
      if (cfg.metric_settings.use_idf && !ref_seqs.empty()) idf = metrics::idf_table(ref_seqs);
    }
    if (enabled("codescore")) {
      if (cfg.checkpoint_path.empty())
        throw UsageError("codescore scoring needs --checkpoint");
      model = unice::load_checkpoint(cfg.checkpoint_path);
    }
  }

  // highest value over the task's references
  template <typename Fn>
  double max_over_refs(const corpus::TaskRecord& task, Fn fn) const {
    double best = 0.0;
    bool any = false;
    for (const auto& ref : task.ref_codes) {
      double v = fn(ref);
      if (!any || v > best) best = v;
      any = true;
    }
    if (!any) throw ValidationError("task \"" + task.task_id + "\" has no reference code");
    return best;
  }

  void score_candidate(const corpus::TaskRecord& task, const corpus::CandidateCode& cand,
                       std::vector<corpus::MetricRow>& rows) const {
    auto enabled = [&](const char* name) {
      return std::find(config.metric_settings.enabled.begin(),
                       config.metric_settings.enabled.end(),
                       name) != config.metric_settings.enabled.end();
    };
    auto add = [&](const std::string& metric, const std::string& format, double value) {
      rows.push_back({task.task_id, cand.candidate_id, metric, format, value});
    };
    metrics::TokenSequence cand_tokens = metrics::tokenize_code(cand.code, task.language_tag);

    if (enabled("bleu"))
      add("bleu", "ref_only", max_over_refs(task, [&](const std::string& ref) {
            return metrics::bleu(cand_tokens, metrics::tokenize_code(ref, task.language_tag));
          }));
    if (enabled("accuracy"))
      add("accuracy", "ref_only", max_over_refs(task, [&](const std::string& ref) {
            return metrics::exact_match(cand.code, ref);
          }));
    if (enabled("codebleu"))
      add("codebleu", "ref_only", max_over_refs(task, [&](const std::string& ref) {
            return metrics::codebleu(cand.code, ref, task.language_tag,
                                     config.metric_settings.codebleu_weights,
                                     config.metric_settings.kappa)
                .combined;
          }));
    if (enabled("crystalbleu"))
      add("crystalbleu", "ref_only", max_over_refs(task, [&](const std::string& ref) {
            return metrics::crystalbleu(cand_tokens,
                                        metrics::tokenize_code(ref, task.language_tag),
                                        trivially_shared);
          }));
    if (enabled("embed_prf")) {
      metrics::Prf best{};  // a token-less side scores zero
      double best_f1 = -1.0;
      for (const auto& ref : task.ref_codes) {
        auto ref_tokens = metrics::tokenize_code(ref, task.language_tag);
        if (cand_tokens.tokens.empty() || ref_tokens.tokens.empty()) continue;
        auto prf = metrics::embed_prf(cand_tokens, ref_tokens, *provider,
                                      idf.empty() ? nullptr : &idf);
        if (prf.f1 > best_f1) {
          best_f1 = prf.f1;
          best = prf;
        }
      }
      add("embed_p", "ref_only", best.precision);
      add("embed_r", "ref_only", best.recall);
      add("embed_f1", "ref_only", best.f1);
    }
    if (model) {
      for (unice::InputFormat fmt : config.formats) {
        std::optional<std::string> r;
        if (fmt != unice::InputFormat::nl_only) {
          if (task.ref_codes.empty())
            throw ValidationError("format " + std::string(unice::to_string(fmt)) +
                                  " needs references; task \"" + task.task_id + "\" has none");
          r = task.ref_codes.front();
        }
        std::optional<std::string> n;
        if (fmt != unice::InputFormat::ref_only) n = task.nl;
        unice::UnifiedSequence seq = unice::assemble(cand.code, r, n, model->vocab, fmt);
        seq.key = task.task_id + "/" + cand.candidate_id;
        unice::Prediction pred = unice::predict(seq, *model);
        add("codescore", unice::to_string(fmt), pred.code_score);
        add("exec_prob", unice::to_string(fmt), pred.p_exec);
      }
    }
  }
};

}  // namespace

std::vector<corpus::MetricRow> score_corpus(const std::vector<corpus::TaskRecord>& tasks,
                                            const RunConfig& config) {
  Scorer scorer(tasks, config);
  std::vector<std::vector<corpus::MetricRow>> per_task(tasks.size());
  sandbox::parallel_for(tasks.size(), config.jobs, [&](size_t t) {
    for (const auto& cand : tasks[t].candidates)
      scorer.score_candidate(tasks[t], cand, per_task[t]);
  });
  std::vector<corpus::MetricRow> rows;
  for (auto& chunk : per_task)
    rows.insert(rows.end(), std::make_move_iterator(chunk.begin()),
                std::make_move_iterator(chunk.end()));
  return rows;
}

int cmd_score(const RunConfig& config) {
  require_corpus(config);
  auto tasks = corpus::load_corpus(config.corpus_path);
  auto rows = score_corpus(tasks, config);
  auto path = out_file(config, "metric_report.jsonl");
  corpus::write_metric_rows(path, rows);
  std::cout << "scored " << rows.size() << " (candidate, metric, format) rows\n"
            << "report written to " << path.string() << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& config) {
  require_corpus(config);
  if (config.ground_truth_path.empty())
    throw UsageError("training needs --ground-truth (from the execute command)");
  auto tasks = corpus::load_corpus(config.corpus_path);
  auto truth = corpus::load_ground_truth(config.ground_truth_path);
  std::map<std::pair<std::string, std::string>, const corpus::GroundTruthRecord*> by_key;
  for (const auto& rec : truth) by_key[{rec.task_id, rec.candidate_id}] = &rec;

  std::vector<unice::TrainExample> examples;
  for (const auto& task : tasks) {
    for (const auto& cand : task.candidates) {
      auto it = by_key.find({task.task_id, cand.candidate_id});
      if (it == by_key.end()) continue;  // unlabeled candidates cannot train
      unice::TrainExample ex;
      ex.g = cand.code;
      if (!task.ref_codes.empty()) ex.r = task.ref_codes.front();
      if (!task.nl.empty()) ex.n = task.nl;
      ex.labels.pass_ratio = it->second->pass_ratio;
      ex.labels.executability = it->second->executability;
      ex.key = task.task_id + "/" + cand.candidate_id;
      examples.push_back(std::move(ex));
    }
  }
  if (examples.empty())
    throw ValidationError("no (task, candidate) pairs joined the ground-truth file");

  unice::TrainResult result = unice::train(examples, config.train);
  auto ckpt_path = out_file(config, "checkpoint.txt");
  unice::save_checkpoint(result.checkpoint, ckpt_path);
  std::vector<json> log_lines;
  for (const auto& e : result.log)
    log_lines.push_back(json{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}});
  auto log_path = out_file(config, "training_log.jsonl");
  jsonl::write_atomic(log_path, 1, log_lines);
  std::cout << "trained on " << examples.size() << " labeled candidates for "
            << config.train.epochs << " epochs\n"
            << "final mean loss " << format_double(result.log.back().mean_loss) << "\n"
            << "checkpoint written to " << ckpt_path.string() << "\n";
  return kExitOk;
}

std::vector<corpus::CorrelationRow> correlate_rows(
    const std::vector<corpus::GroundTruthRecord>& truth,
    const std::vector<corpus::MetricRow>& rows, stats::TauVariant variant, bool strict) {
  std::map<std::pair<std::string, std::string>, double> pass_ratio;
  for (const auto& rec : truth) pass_ratio[{rec.task_id, rec.candidate_id}] = rec.pass_ratio;

  std::map<std::pair<std::string, std::string>, std::vector<const corpus::MetricRow*>> groups;
  for (const auto& row : rows) groups[{row.metric, row.format}].push_back(&row);

  std::vector<corpus::CorrelationRow> out;
  for (auto& [key, group] : groups) {
    std::sort(group.begin(), group.end(), [](const auto* a, const auto* b) {
      return std::tie(a->task_id, a->candidate_id) < std::tie(b->task_id, b->candidate_id);
    });
    stats::PairedSeries series;
    std::vector<std::string> orphans;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto* row : group) {
      auto it = pass_ratio.find({row->task_id, row->candidate_id});
      if (it == pass_ratio.end()) {
        orphans.push_back(row->task_id + "/" + row->candidate_id);
        continue;
      }
      seen.insert(it->first);
      series.m1.push_back(row->value);
      series.m2.push_back(it->second);
    }
    if (strict) {
      for (const auto& [id, value] : pass_ratio)
        if (!seen.count(id)) orphans.push_back(id.first + "/" + id.second);
      if (!orphans.empty()) {
        std::ostringstream msg;
        msg << "strict join failed for metric " << key.first << " (" << key.second << "), "
            << orphans.size() << " orphans:";
        for (size_t i = 0; i < orphans.size() && i < 10; ++i) msg << ' ' << orphans[i];
        throw ValidationError(msg.str());
      }
    }
    corpus::CorrelationRow row;
    row.metric = key.first;
    row.format = key.second;
    row.tau_variant = variant == stats::TauVariant::plain ? "plain" : "tie_corrected";
    row.n = series.n();
    if (series.n() >= 1) row.mae = stats::mae(series);
    if (series.n() >= 2) {
      try {
        row.tau = stats::kendall_tau(series, variant);
      } catch (const ValidationError&) {
      }
      try {
        row.spearman = stats::spearman(series);
      } catch (const ValidationError&) {
      }
      try {
        row.pearson = stats::pearson(series);
      } catch (const ValidationError&) {
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string render_correlation_table(const std::vector<corpus::CorrelationRow>& rows) {
  std::ostringstream out;
  auto cell = [](std::optional<double> v) {
    if (!v) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return std::string(buf);
  };
  size_t name_width = 12;
  for (const auto& r : rows) name_width = std::max(name_width, r.metric.size() + 1);
  out << std::left;
  auto pad = [&](const std::string& s, size_t w) {
    std::string p = s;
    if (p.size() < w) p.append(w - p.size(), ' ');
    return p;
  };
  out << pad("Metric", name_width) << pad("Format", 12) << pad("tau", 10) << pad("r_s", 10)
      << pad("r_p", 10) << pad("MAE", 10) << pad("n", 8) << "tau_variant\n";
  for (const auto& r : rows) {
    char mae_buf[32];
    std::snprintf(mae_buf, sizeof(mae_buf), "%.4f", r.mae);
    out << pad(r.metric, name_width) << pad(r.format, 12) << pad(cell(r.tau), 10)
        << pad(cell(r.spearman), 10) << pad(cell(r.pearson), 10) << pad(mae_buf, 10)
        << pad(std::to_string(r.n), 8) << r.tau_variant << "\n";
  }
  return out.str();
}

int cmd_correlate(const RunConfig& config) {
  if (config.ground_truth_path.empty() || config.metric_report_path.empty())
    throw UsageError("correlate needs --ground-truth and --metric-report");
  auto truth = corpus::load_ground_truth(config.ground_truth_path);
  auto rows = corpus::load_metric_rows(config.metric_report_path);
  auto correlations = correlate_rows(truth, rows, config.tau_variant, config.strict);
  auto path = out_file(config, "correlations.jsonl");
  corpus::write_correlations(path, correlations);
  std::cout << render_correlation_table(correlations) << "report written to " << path.string()
            << "\n";
  return kExitOk;
}

int cmd_report(const RunConfig& config) {
  if (config.metric_report_path.empty())
    throw UsageError("report needs --metric-report (a correlations file)");
  auto correlations = corpus::load_correlations(config.metric_report_path);
  std::cout << render_correlation_table(correlations);
  return kExitOk;
}

namespace {

struct CliFlags {
  std::string config_file;
  std::string corpus, out, checkpoint, ground_truth, metric_report;
  std::string metrics_csv, formats_csv, tau_variant;
  uint64_t seed = 0;
  int jobs = 0;
  int target = 0;
  int epochs = 0;
  double lr = 0.0;
  bool strict = false;
  int wall_ms = 0, cpu_ms = 0;
  long mem_bytes = 0, out_bytes = 0;
  bool network = false;
};

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"code evaluation workbench: execution ground truth, metric scoring, "
               "test extension, learned scoring, correlation reports"};
  app.require_subcommand(1);

  CliFlags flags;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_file, "JSON config file");
    cmd->add_option("--corpus", flags.corpus, "corpus jsonl file");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--seed", flags.seed, "deterministic seed");
    cmd->add_option("--jobs", flags.jobs, "worker pool size");
    cmd->add_option("--checkpoint", flags.checkpoint, "model checkpoint path");
    cmd->add_option("--ground-truth", flags.ground_truth, "ground truth jsonl file");
    cmd->add_option("--metric-report", flags.metric_report, "metric report jsonl file");
    cmd->add_option("--metrics", flags.metrics_csv, "comma-separated metric list");
    cmd->add_option("--format", flags.formats_csv, "comma-separated input formats");
    cmd->add_option("--tau-variant", flags.tau_variant, "plain or tie_corrected");
    cmd->add_flag("--strict", flags.strict, "strict join/validation mode");
    cmd->add_option("--limits.wall_time_ms", flags.wall_ms, "wall clock limit");
    cmd->add_option("--limits.cpu_time_ms", flags.cpu_ms, "cpu time limit");
    cmd->add_option("--limits.memory_bytes", flags.mem_bytes, "address space limit");
    cmd->add_option("--limits.max_output_bytes", flags.out_bytes, "output cap");
    cmd->add_flag("--limits.network_allowed", flags.network, "allow network access");
    cmd->add_option("--target", flags.target, "extension target case count");
    cmd->add_option("--epochs", flags.epochs, "training epochs");
    cmd->add_option("--lr", flags.lr, "learning rate");
    return cmd;
  };

  CLI::App* exec_cmd = add_common(app.add_subcommand("execute", "run candidates, write ground truth"));
  CLI::App* extend_cmd = add_common(app.add_subcommand("extend-tests", "extend test suites"));
  CLI::App* score_cmd = add_common(app.add_subcommand("score", "compute metric reports"));
  CLI::App* train_cmd = add_common(app.add_subcommand("train", "train the learned scorer"));
  CLI::App* corr_cmd = add_common(app.add_subcommand("correlate", "correlate metrics vs ground truth"));
  CLI::App* report_cmd = add_common(app.add_subcommand("report", "render a correlations file"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig config;
    if (!flags.config_file.empty()) config = config_from_file(flags.config_file);
    auto chosen = [&](CLI::App* cmd) { return cmd->parsed(); };
    CLI::App* active = nullptr;
    for (CLI::App* cmd : {exec_cmd, extend_cmd, score_cmd, train_cmd, corr_cmd, report_cmd})
      if (cmd->parsed()) active = cmd;
    auto given = [&](const char* name) { return active && active->count(name) > 0; };

    // flags override the file
    auto set_if = [](const std::string& v, std::filesystem::path& into) {
      if (!v.empty()) into = v;
    };
    set_if(flags.corpus, config.corpus_path);
    set_if(flags.out, config.out_dir);
    set_if(flags.checkpoint, config.checkpoint_path);
    set_if(flags.ground_truth, config.ground_truth_path);
    set_if(flags.metric_report, config.metric_report_path);
    if (given("--seed")) {
      config.seed = flags.seed;
      config.train.seed = flags.seed;
      config.budget.seed = flags.seed;
    }
    if (given("--jobs")) config.jobs = flags.jobs;
    if (flags.strict) config.strict = true;
    if (!flags.metrics_csv.empty()) config.metric_settings.enabled = split_csv(flags.metrics_csv);
    if (!flags.formats_csv.empty()) {
      config.formats.clear();
      for (const auto& f : split_csv(flags.formats_csv))
        config.formats.push_back(unice::input_format_from_string(f));
    }
    if (!flags.tau_variant.empty()) {
      if (flags.tau_variant == "plain") config.tau_variant = stats::TauVariant::plain;
      else if (flags.tau_variant == "tie_corrected")
        config.tau_variant = stats::TauVariant::tie_corrected;
      else throw UsageError("unknown tau variant: " + flags.tau_variant);
    }
    if (given("--limits.wall_time_ms")) config.limits.wall_time_ms = flags.wall_ms;
    if (given("--limits.cpu_time_ms")) config.limits.cpu_time_ms = flags.cpu_ms;
    if (given("--limits.memory_bytes")) config.limits.memory_bytes = flags.mem_bytes;
    if (given("--limits.max_output_bytes")) config.limits.max_output_bytes = flags.out_bytes;
    if (flags.network) config.limits.network_allowed = true;
    if (given("--target")) config.budget.target_count = flags.target;
    if (given("--epochs")) config.train.epochs = flags.epochs;
    if (given("--lr")) config.train.learning_rate = flags.lr;
    if (config.limits.cpu_time_ms > config.limits.wall_time_ms)
      config.limits.cpu_time_ms = config.limits.wall_time_ms;

    if (chosen(exec_cmd)) return cmd_execute(config);
    if (chosen(extend_cmd)) return cmd_extend(config);
    if (chosen(score_cmd)) return cmd_score(config);
    if (chosen(train_cmd)) return cmd_train(config);
    if (chosen(corr_cmd)) return cmd_correlate(config);
    if (chosen(report_cmd)) return cmd_report(config);
    throw UsageError("no subcommand selected");
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const InfraError& e) {
    std::cerr << "infrastructure error: " << e.what() << "\n";
    return kExitInfra;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfra;
  }
}

}  // namespace cseval::cli
