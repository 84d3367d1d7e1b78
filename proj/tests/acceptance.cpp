// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Takes the bundled data directory as argv[1].

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "cseval/cli.hpp"
#include "cseval/dataflow.hpp"
#include "cseval/lexer.hpp"
#include "cseval/metrics.hpp"
#include "cseval/pyast.hpp"
#include "cseval/sandbox.hpp"
#include "cseval/stats.hpp"
#include "cseval/testgen.hpp"
#include "cseval/unice.hpp"

using namespace cseval;
using metrics::NGram;
using metrics::TokenSequence;

namespace {

struct Checker {
  bool ok = true;
  std::ostringstream detail;

  void require(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      detail << "\n    failed: " << what;
    }
  }
};

using CriterionFn = void (*)(Checker&, const std::filesystem::path&);

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// criterion 1: ground-truth exactness on the bundled desk corpus
// ---------------------------------------------------------------------------

void criterion1(Checker& c, const std::filesystem::path& data_dir) {
  auto start = std::chrono::steady_clock::now();
  auto tasks = corpus::load_corpus(data_dir / "desk_corpus.jsonl", true);
  c.require(tasks.size() >= 15, "need at least 15 tasks");
  size_t candidates = 0;
  for (const auto& t : tasks) candidates += t.candidates.size();
  c.require(candidates >= 60, "need at least 4 candidates per task");

  sandbox::ExecutionLimits limits;
  limits.wall_time_ms = 3000;
  limits.cpu_time_ms = 3000;
  auto truths = sandbox::evaluate_corpus(tasks, limits, sandbox::ToolchainTable::defaults(), {},
                                         4);

  // hand-computed (passes, cases, executability) per candidate
  std::map<std::pair<std::string, std::string>, std::tuple<int, int, int>> expected;
  auto expect = [&](const char* task, const char* cand, int p, int n, int e) {
    expected[{task, cand}] = {p, n, e};
  };
  for (const char* t : {"double", "succ", "sum_two", "max3", "upper", "count_words", "reverse",
                        "parity", "sum_list", "spread", "add", "top2", "is_palindrome", "mean",
                        "clamp"}) {
    expect(t, "ok", 3, 3, 1);
    expect(t, "crash", 0, 3, 0);
    expect(t, "syntax", 0, 3, 0);
  }
  expect("double", "square", 2, 3, 1);
  expect("double", "loop", 0, 3, 0);
  expect("succ", "abs_succ", 2, 3, 1);
  expect("sum_two", "diff", 1, 3, 1);
  expect("max3", "min3", 1, 3, 1);
  expect("upper", "echo", 1, 3, 1);
  expect("count_words", "charlen", 0, 3, 1);
  expect("reverse", "echo", 1, 3, 1);
  expect("parity", "always_even", 2, 3, 1);
  expect("sum_list", "product", 2, 3, 1);
  expect("spread", "max_only", 1, 3, 1);
  expect("add", "mult", 1, 3, 1);
  expect("add", "loop", 0, 3, 0);
  expect("top2", "twice_max", 1, 3, 1);
  expect("is_palindrome", "always_true", 2, 3, 1);
  expect("mean", "int_div", 2, 3, 1);
  expect("clamp", "identity", 1, 3, 1);

  std::set<sandbox::CaseStatus> seen_statuses;
  size_t checked = 0;
  for (size_t t = 0; t < tasks.size(); ++t) {
    for (size_t k = 0; k < tasks[t].candidates.size(); ++k) {
      auto key = std::make_pair(tasks[t].task_id, tasks[t].candidates[k].candidate_id);
      auto it = expected.find(key);
      c.require(it != expected.end(), "unexpected candidate " + key.first + "/" + key.second);
      if (it == expected.end()) continue;
      auto [p, n, e] = it->second;
      const auto& truth = truths[t][k];
      double want = static_cast<double>(p) / static_cast<double>(n);
      c.require(truth.pass_ratio == want,
                key.first + "/" + key.second + " pass_ratio " + fmt(truth.pass_ratio) +
                    " != " + fmt(want));
      c.require(truth.executability == e,
                key.first + "/" + key.second + " executability " +
                    std::to_string(truth.executability) + " != " + std::to_string(e));
      for (const auto& o : truth.outcomes) seen_statuses.insert(o.status);
      ++checked;
    }
  }
  c.require(checked == expected.size(), "missing candidates");
  for (auto status : {sandbox::CaseStatus::pass, sandbox::CaseStatus::wrong_output,
                      sandbox::CaseStatus::runtime_error, sandbox::CaseStatus::compile_error,
                      sandbox::CaseStatus::timeout})
    c.require(seen_statuses.count(status) == 1,
              std::string("status never observed: ") + sandbox::to_string(status));
  double secs = elapsed_s(start);
  c.require(secs < 60.0, "runtime " + fmt(secs) + "s exceeds 60s at parallelism 4");
  c.detail << " (" << checked << " candidates, " << fmt(secs) << "s)";
}

// ---------------------------------------------------------------------------
// criterion 2: formula oracles for bleu, crystalbleu, embed_prf and the
// correlation statistics
// ---------------------------------------------------------------------------

double bleu_oracle(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                   const std::set<NGram>* removed = nullptr) {
  size_t lg = cand.size(), lr = ref.size();
  if (lg == 0) return 0.0;
  double logsum = 0.0;
  bool any_mass = false;
  for (size_t n = 1; n <= 4; ++n) {
    std::map<NGram, long> cand_count, ref_count;
    for (size_t i = 0; i + n <= cand.size(); ++i) {
      NGram g(cand.begin() + i, cand.begin() + i + n);
      if (!removed || !removed->count(g)) ++cand_count[g];
    }
    for (size_t i = 0; i + n <= ref.size(); ++i) {
      NGram g(ref.begin() + i, ref.begin() + i + n);
      if (!removed || !removed->count(g)) ++ref_count[g];
    }
    double total = 0, matched = 0;
    for (auto& [g, count] : cand_count) {
      total += count;
      auto it = ref_count.find(g);
      if (it != ref_count.end()) matched += std::min(count, it->second);
    }
    if (total > 0) any_mass = true;
    double p = (total > 0 && matched > 0) ? matched / total : 1.0 / (2.0 * lg);
    logsum += 0.25 * std::log(p);
  }
  if (!any_mass) return 0.0;
  double bp = lg >= lr ? 1.0 : std::exp(1.0 - static_cast<double>(lr) / static_cast<double>(lg));
  return bp * std::exp(logsum);
}

std::vector<double> rank_oracle(const std::vector<double>& values) {
  std::vector<double> ranks(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    size_t less = 0, equal = 0;
    for (double v : values) {
      if (v < values[i]) ++less;
      if (v == values[i]) ++equal;
    }
    ranks[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
  }
  return ranks;
}

double pearson_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  // E[xy] - E[x]E[y] route, distinct from the centered-sum implementation
  size_t n = a.size();
  double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += a[i];
    sy += b[i];
    sxy += a[i] * b[i];
    sxx += a[i] * a[i];
    syy += b[i] * b[i];
  }
  double nn = static_cast<double>(n);
  double cov = sxy / nn - (sx / nn) * (sy / nn);
  double vx = sxx / nn - (sx / nn) * (sx / nn);
  double vy = syy / nn - (sy / nn) * (sy / nn);
  return cov / std::sqrt(vx * vy);
}

void criterion2(Checker& c, const std::filesystem::path&) {
  std::mt19937_64 rng(4242);
  std::vector<std::string> pool{"a", "b", "c", "d", "(", ")", ",", "=", "+", "x"};
  auto draw = [&](size_t max_len) {
    std::uniform_int_distribution<size_t> len(0, max_len);
    std::vector<std::string> out(len(rng));
    for (auto& t : out) t = pool[rng() % pool.size()];
    return out;
  };
  std::set<NGram> shared{{"("}, {")"}, {","}, {"(", ")"}};
  metrics::HashedContextProvider provider(24);

  int bleu_checked = 0, crystal_checked = 0, prf_checked = 0;
  for (int round = 0; round < 120; ++round) {
    auto g = draw(28), r = draw(28);
    double got = metrics::bleu({g}, {r});
    if (std::abs(got - bleu_oracle(g, r)) > 1e-9)
      c.require(false, "bleu mismatch at round " + std::to_string(round));
    ++bleu_checked;
    double crystal = metrics::crystalbleu({g}, {r}, shared);
    if (std::abs(crystal - bleu_oracle(g, r, &shared)) > 1e-9)
      c.require(false, "crystalbleu mismatch at round " + std::to_string(round));
    ++crystal_checked;

    if (g.empty() || r.empty()) continue;
    auto prf = metrics::embed_prf({g}, {r}, provider);
    auto gv = provider.embed(g);
    auto rv = provider.embed(r);
    double rn = 0;
    for (size_t i = 0; i < rv.size(); ++i) {
      double best = -2;
      for (size_t j = 0; j < gv.size(); ++j) {
        double s = 0;
        for (size_t k = 0; k < rv[i].size(); ++k) s += rv[i][k] * gv[j][k];
        best = std::max(best, s);
      }
      rn += best;
    }
    double recall = rn / static_cast<double>(rv.size());
    double pn = 0;
    for (size_t j = 0; j < gv.size(); ++j) {
      double best = -2;
      for (size_t i = 0; i < rv.size(); ++i) {
        double s = 0;
        for (size_t k = 0; k < rv[i].size(); ++k) s += rv[i][k] * gv[j][k];
        best = std::max(best, s);
      }
      pn += best;
    }
    double precision = pn / static_cast<double>(gv.size());
    if (std::abs(prf.recall - recall) > 1e-9 || std::abs(prf.precision - precision) > 1e-9 ||
        std::abs(prf.f1 - 2 * precision * recall / (precision + recall)) > 1e-9)
      c.require(false, "embed_prf mismatch at round " + std::to_string(round));
    ++prf_checked;
  }
  c.require(bleu_checked >= 100 && crystal_checked >= 100 && prf_checked >= 100,
            "not enough randomized metric inputs");

  std::uniform_real_distribution<double> value(-5.0, 5.0);
  std::uniform_int_distribution<int> tie_value(0, 6);
  int stats_checked = 0;
  for (int round = 0; round < 120; ++round) {
    size_t n = 3 + rng() % 40;
    stats::PairedSeries s;
    bool ties = round % 2 == 0;
    for (size_t i = 0; i < n; ++i) {
      s.m1.push_back(ties ? tie_value(rng) / 3.0 : value(rng));
      s.m2.push_back(ties ? tie_value(rng) / 3.0 : value(rng));
    }
    long long concordant = 0, discordant = 0;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = i + 1; j < n; ++j) {
        int s1 = s.m1[i] < s.m1[j] ? -1 : (s.m1[i] > s.m1[j] ? 1 : 0);
        int s2 = s.m2[i] < s.m2[j] ? -1 : (s.m2[i] > s.m2[j] ? 1 : 0);
        if (s1 * s2 > 0) ++concordant;
        if (s1 * s2 < 0) ++discordant;
      }
    }
    if (concordant + discordant > 0) {
      double want = static_cast<double>(concordant - discordant) /
                    static_cast<double>(concordant + discordant);
      if (std::abs(stats::kendall_tau(s) - want) > 1e-12)
        c.require(false, "kendall mismatch at round " + std::to_string(round));
    }
    double sp_want = pearson_oracle(rank_oracle(s.m1), rank_oracle(s.m2));
    if (std::isfinite(sp_want) && std::abs(stats::spearman(s) - sp_want) > 1e-12)
      c.require(false, "spearman mismatch at round " + std::to_string(round));
    double pe_want = pearson_oracle(s.m1, s.m2);
    if (std::isfinite(pe_want) && std::abs(stats::pearson(s) - pe_want) > 1e-12)
      c.require(false, "pearson mismatch at round " + std::to_string(round));
    double mae_want = 0;
    for (size_t i = 0; i < n; ++i) mae_want += std::abs(s.m1[i] - s.m2[i]);
    mae_want /= static_cast<double>(n);
    if (std::abs(stats::mae(s) - mae_want) > 1e-12)
      c.require(false, "mae mismatch at round " + std::to_string(round));
    ++stats_checked;
  }
  c.require(stats_checked >= 100, "not enough randomized statistic inputs");
  c.detail << " (" << bleu_checked << " bleu, " << crystal_checked << " crystal, "
           << prf_checked << " prf, " << stats_checked << " stat series)";
}

// ---------------------------------------------------------------------------
// criterion 3: subtree and dataflow brute-force oracles
// ---------------------------------------------------------------------------

void collect_subtrees(const pyast::Node& n, std::vector<const pyast::Node*>& out) {
  out.push_back(&n);
  for (const auto& child : n.children) collect_subtrees(child, out);
}

double ast_match_oracle(const std::string& cand_code, const std::string& ref_code) {
  pyast::Node ref = pyast::parse_python(ref_code);
  pyast::Node cand = pyast::parse_python(cand_code);
  std::vector<const pyast::Node*> cand_all, ref_all;
  collect_subtrees(cand, cand_all);
  collect_subtrees(ref, ref_all);
  size_t total = 0, matched = 0;
  for (const auto* r : ref_all) {
    if (r->leaf()) continue;
    ++total;
    for (const auto* k : cand_all) {
      if (pyast::structurally_equal(*r, *k)) {
        ++matched;
        break;
      }
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(total);
}

struct FlatEdge {
  int var, def_pos, use_pos;
  bool operator==(const FlatEdge& o) const {
    return var == o.var && def_pos == o.def_pos && use_pos == o.use_pos;
  }
};

std::vector<FlatEdge> straight_line_edges(const std::string& code) {
  std::vector<FlatEdge> edges;
  std::map<std::string, int> var_ids, last_def;
  int occ = 0;
  auto var_id = [&](const std::string& name) {
    auto it = var_ids.find(name);
    if (it != var_ids.end()) return it->second;
    int id = static_cast<int>(var_ids.size());
    var_ids[name] = id;
    return id;
  };
  auto add_edge = [&](const std::string& name, int pos) {
    auto it = last_def.find(name);
    if (it != last_def.end()) edges.push_back({var_id(name), it->second, pos});
  };
  for (const auto& line : split_lines(code)) {
    auto lexed = lexer::lex_python(line);
    std::vector<std::pair<std::string, bool>> items;  // (text, is_name)
    bool aug = false, assign = false;
    for (const auto& t : lexed.tokens) {
      if (t.kind == lexer::TokenKind::name) items.emplace_back(t.text, true);
      if (t.kind == lexer::TokenKind::op && items.size() == 1 &&
          (t.text == "=" || t.text == "+=" || t.text == "-=" || t.text == "*=")) {
        assign = true;
        aug = t.text != "=";
      }
    }
    if (items.empty()) continue;
    std::vector<std::pair<std::string, int>> occurrences;
    for (auto& [name, is_name] : items)
      if (is_name) occurrences.emplace_back(name, occ++);
    if (!assign) {
      for (auto& [name, pos] : occurrences) {
        var_id(name);
        add_edge(name, pos);
      }
      continue;
    }
    auto target = occurrences[0];
    var_id(target.first);
    if (aug) add_edge(target.first, target.second);
    for (size_t i = 1; i < occurrences.size(); ++i) {
      var_id(occurrences[i].first);
      add_edge(occurrences[i].first, occurrences[i].second);
    }
    last_def[target.first] = target.second;
  }
  return edges;
}

double dataflow_match_oracle(const std::string& cand_code, const std::string& ref_code) {
  auto ref_edges = straight_line_edges(ref_code);
  if (ref_edges.empty()) return 1.0;
  auto cand_edges = straight_line_edges(cand_code);
  size_t matched = 0;
  for (const auto& e : ref_edges)
    for (const auto& k : cand_edges)
      if (e == k) {
        ++matched;
        break;
      }
  return static_cast<double>(matched) / static_cast<double>(ref_edges.size());
}

std::string small_program(std::mt19937_64& rng, const std::string& prefix) {
  std::uniform_int_distribution<int> stmt_count(2, 3);
  std::uniform_int_distribution<int> literal(0, 9);
  const char* ops[] = {"+", "-", "*"};
  std::vector<std::string> defined;
  std::ostringstream code;
  int n = stmt_count(rng);
  for (int i = 0; i < n; ++i) {
    auto operand = [&]() -> std::string {
      if (!defined.empty() && rng() % 2 == 0) return defined[rng() % defined.size()];
      return std::to_string(literal(rng));
    };
    if (rng() % 4 == 0 && !defined.empty()) {
      code << defined[rng() % defined.size()] << " += " << operand() << "\n";
    } else {
      std::string target = prefix + std::to_string(i);
      code << target << " = " << operand() << " " << ops[rng() % 3] << " " << operand() << "\n";
      defined.push_back(target);
    }
  }
  return code.str();
}

void criterion3(Checker& c, const std::filesystem::path&) {
  std::mt19937_64 rng(777);
  int checked = 0;
  while (checked < 60) {
    std::string a = small_program(rng, "v");
    std::string b = rng() % 4 == 0 ? a : small_program(rng, rng() % 2 ? "v" : "w");
    if (pyast::count_nodes(pyast::parse_python(a)) > 30 ||
        pyast::count_nodes(pyast::parse_python(b)) > 30)
      continue;
    double ast_got = metrics::ast_match(a, b, "python");
    double ast_want = ast_match_oracle(a, b);
    if (ast_got != ast_want)
      c.require(false, "ast_match " + fmt(ast_got) + " != oracle " + fmt(ast_want) +
                           " on pair " + std::to_string(checked));
    double df_got = metrics::dataflow_match(a, b, "python");
    double df_want = dataflow_match_oracle(a, b);
    if (df_got != df_want)
      c.require(false, "dataflow_match " + fmt(df_got) + " != oracle " + fmt(df_want) +
                           " on pair " + std::to_string(checked));
    ++checked;
  }
  c.require(checked >= 50, "not enough program pairs");
  c.detail << " (" << checked << " pairs, ASTs <= 30 nodes, exact)";
}

// ---------------------------------------------------------------------------
// criterion 4: codebleu algebra and collapse identities
// ---------------------------------------------------------------------------

void criterion4(Checker& c, const std::filesystem::path&) {
  std::mt19937_64 rng(888);
  std::vector<std::string> programs;
  for (int i = 0; i < 8; ++i) programs.push_back(small_program(rng, i % 2 ? "v" : "u"));

  std::uniform_real_distribution<double> raw(0.0, 1.0);
  int checked = 0;
  for (size_t i = 0; i < programs.size(); ++i) {
    for (size_t j = 0; j < programs.size(); ++j) {
      const std::string& cand = programs[i];
      const std::string& ref = programs[j];
      double w0 = raw(rng), w1 = raw(rng), w2 = raw(rng), w3 = raw(rng);
      double sum = w0 + w1 + w2 + w3;
      metrics::CodeBleuWeights weights{w0 / sum, w1 / sum, w2 / sum,
                                       1.0 - w0 / sum - w1 / sum - w2 / sum};
      auto parts = metrics::codebleu(cand, ref, "python", weights);
      double want = weights.alpha * parts.bleu + weights.beta * parts.weighted +
                    weights.delta * parts.ast + weights.zeta * parts.dataflow;
      if (parts.combined != want) c.require(false, "weighted sum not exact");

      auto collapse = [&](metrics::CodeBleuWeights w, double component) {
        auto got = metrics::codebleu(cand, ref, "python", w);
        if (got.combined != component)
          c.require(false, "single-weight collapse not exact");
      };
      collapse({1, 0, 0, 0}, parts.bleu);
      collapse({0, 1, 0, 0}, parts.weighted);
      collapse({0, 0, 1, 0}, parts.ast);
      collapse({0, 0, 0, 1}, parts.dataflow);

      TokenSequence ct = metrics::tokenize_code(cand, "python");
      TokenSequence rt = metrics::tokenize_code(ref, "python");
      if (metrics::weighted_ngram_precision(ct, rt, metrics::keyword_set("python"), 1.0) !=
          metrics::bleu(ct, rt))
        c.require(false, "kappa=1 does not collapse to bleu");
      if (metrics::crystalbleu(ct, rt, {}) != metrics::bleu(ct, rt))
        c.require(false, "empty shared set does not collapse to bleu");
      ++checked;
    }
  }
  c.detail << " (" << checked << " pairs, exact algebra)";
}

// ---------------------------------------------------------------------------
// criterion 5: gradient checks on 10 random configurations
// ---------------------------------------------------------------------------

void criterion5(Checker& c, const std::filesystem::path&) {
  std::mt19937_64 rng(999);
  std::vector<std::string> pool;
  for (char a = 'a'; a <= 'z'; ++a) pool.push_back(std::string(1, a));
  int configs_checked = 0;
  for (int config_round = 0; config_round < 10; ++config_round) {
    unice::TrainConfig cfg;
    cfg.seed = 5000 + static_cast<uint64_t>(config_round);
    cfg.backbone.dim = 3 + config_round % 5;
    cfg.backbone.layers = 2 + config_round % 3;
    cfg.head_dims = {4 + config_round % 6, 3 + config_round % 4, 2};

    std::vector<unice::TrainExample> batch;
    for (int i = 0; i < 3; ++i) {
      unice::TrainExample ex;
      auto draw = [&] {
        std::string s;
        size_t n = 2 + rng() % 8;
        for (size_t k = 0; k < n; ++k) s += pool[rng() % pool.size()] + " ";
        return s;
      };
      ex.g = draw();
      ex.r = draw();
      ex.n = draw();
      if (config_round % 3 == 1 && i == 0) ex.r.reset();
      if (config_round % 3 == 2 && i == 1) ex.n.reset();
      ex.labels.pass_ratio = static_cast<double>(rng() % 101) / 100.0;
      ex.labels.executability = static_cast<int>(rng() % 2);
      batch.push_back(std::move(ex));
    }
    std::vector<std::vector<std::string>> docs;
    for (const auto& ex : batch) docs.push_back({ex.g});
    auto vocab = unice::build_vocab(docs, 1);
    auto model = unice::init_model(cfg, vocab);
    auto refs = unice::parameter_refs(model);
    auto grad = unice::batch_gradient(batch, model);

    // a few indices from every trainable parameter group
    std::map<std::string, std::vector<size_t>> by_group;
    for (size_t i = 0; i < refs.size(); ++i) by_group[refs[i].group].push_back(i);
    std::set<size_t> chosen;
    for (const auto& [group, indices] : by_group)
      for (int i = 0; i < 4; ++i) chosen.insert(indices[rng() % indices.size()]);
    for (size_t idx : chosen) {
      double saved = *refs[idx].value;
      double h = 1e-5 * std::max(1.0, std::abs(saved));
      *refs[idx].value = saved + h;
      double up = unice::batch_loss(batch, model);
      *refs[idx].value = saved - h;
      double down = unice::batch_loss(batch, model);
      *refs[idx].value = saved;
      double numeric = (up - down) / (2.0 * h);
      double denom = std::max({1e-8, std::abs(numeric), std::abs(grad[idx])});
      if (std::abs(numeric - grad[idx]) / denom >= 1e-4)
        c.require(false, "config " + std::to_string(config_round) + " group " +
                             refs[idx].group + ": analytic " + fmt(grad[idx]) + " vs numeric " +
                             fmt(numeric));
    }
    ++configs_checked;
  }
  c.require(configs_checked == 10, "expected 10 configurations");
  c.detail << " (10 configs, relative error < 1e-4)";
}

// ---------------------------------------------------------------------------
// criterion 6: loss arithmetic
// ---------------------------------------------------------------------------

void criterion6(Checker& c, const std::filesystem::path&) {
  std::mt19937_64 rng(1111);
  std::vector<std::string> pool{"a", "b", "c", "x", "y", "p", "(", ")"};
  auto vocab = unice::build_vocab({pool}, 1);
  unice::TrainConfig cfg;
  cfg.backbone.dim = 6;
  cfg.backbone.layers = 2;
  cfg.head_dims = {6, 4, 2};
  cfg.seed = 31;
  auto model = unice::init_model(cfg, vocab);

  int fuzzed = 0;
  for (int i = 0; i < 1000; ++i) {
    auto draw = [&] {
      std::string s;
      size_t n = 1 + rng() % 8;
      for (size_t k = 0; k < n; ++k) s += pool[rng() % pool.size()] + " ";
      return s;
    };
    unice::Labels labels{static_cast<double>(rng() % 101) / 100.0,
                         static_cast<int>(rng() % 2)};
    auto loss = unice::unified_loss(draw(), draw(), draw(), labels, model);
    double sum = 0.0;
    for (const auto& [fmt_, v] : loss.per_format) sum += v;
    if (loss.total != sum) c.require(false, "total != per-format sum at round " + std::to_string(i));
    if (loss.per_format.size() != 3) c.require(false, "full triple must yield three losses");
    ++fuzzed;
  }
  c.require(fuzzed == 1000, "fuzz run incomplete");
  c.require(std::abs(unice::loss_e(0.5, 0) - 0.693147) < 1e-6, "loss_e(0.5, 0) closed form");
  c.require(std::abs(unice::loss_e(0.5, 1) - 0.693147) < 1e-6, "loss_e(0.5, 1) closed form");
  c.detail << " (1000-sample fuzz, exact additivity)";
}

// ---------------------------------------------------------------------------
// criterion 7: learning sanity on a synthetic token-overlap corpus
// ---------------------------------------------------------------------------

struct SyntheticTriple {
  std::vector<std::string> g_tokens;
  std::vector<std::string> r_tokens;
  unice::TrainExample example;
};

double token_overlap(const std::vector<std::string>& g, const std::vector<std::string>& r) {
  std::map<std::string, int> cg, cr;
  for (const auto& t : g) ++cg[t];
  for (const auto& t : r) ++cr[t];
  long inter = 0;
  for (const auto& [tok, count] : cg) {
    auto it = cr.find(tok);
    if (it != cr.end()) inter += std::min(count, it->second);
  }
  return static_cast<double>(inter) /
         static_cast<double>(std::max(g.size(), r.size()));
}

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

void criterion7(Checker& c, const std::filesystem::path&) {
  auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::vector<std::string> code_pool, noise_pool, nl_pool;
  for (int i = 0; i < 60; ++i) code_pool.push_back("w" + std::to_string(i));
  for (int i = 0; i < 25; ++i) noise_pool.push_back("nz" + std::to_string(i));
  for (int i = 0; i < 30; ++i) nl_pool.push_back("word" + std::to_string(i));

  std::vector<SyntheticTriple> triples;
  std::uniform_real_distribution<double> qdist(0.0, 0.95);
  std::uniform_int_distribution<size_t> rlen(15, 30);
  for (int task = 0; task < 150; ++task) {
    std::vector<std::string> r(rlen(rng));
    for (auto& t : r) t = code_pool[rng() % code_pool.size()];
    std::string nl;
    for (int w = 0; w < 5; ++w) nl += nl_pool[rng() % nl_pool.size()] + " ";
    for (int candidate = 0; candidate < 4; ++candidate) {
      std::vector<std::string> g = r;
      double q = qdist(rng);
      size_t corrupt = static_cast<size_t>(std::ceil(q * static_cast<double>(g.size())));
      for (size_t k = 0; k < corrupt; ++k)
        g[rng() % g.size()] = noise_pool[rng() % noise_pool.size()];
      if (rng() % 2 == 0 && g.size() > 6) {
        // order-only perturbation: hurts n-gram metrics, not the overlap
        size_t at = rng() % (g.size() - 6);
        std::shuffle(g.begin() + static_cast<long>(at), g.begin() + static_cast<long>(at) + 6,
                     rng);
      }
      if (rng() % 3 == 0 && g.size() > 18) g.resize(g.size() - rng() % 4);
      SyntheticTriple t;
      t.g_tokens = g;
      t.r_tokens = r;
      t.example.g = join(g);
      t.example.r = join(r);
      t.example.n = nl;
      t.example.labels.pass_ratio = token_overlap(g, r);
      t.example.labels.executability = t.example.labels.pass_ratio > 0 ? 1 : 0;
      triples.push_back(std::move(t));
    }
  }
  c.require(triples.size() >= 500, "need at least 500 triples");

  size_t held_out = 120;
  std::vector<unice::TrainExample> train_set;
  for (size_t i = 0; i < triples.size() - held_out; ++i) train_set.push_back(triples[i].example);

  unice::TrainConfig cfg;
  cfg.seed = 7;
  cfg.backbone.dim = 48;
  cfg.backbone.layers = 2;
  cfg.head_dims = {48, 24, 2};
  cfg.learning_rate = 0.005;
  cfg.epochs = 60;
  auto trained = unice::train(train_set, cfg);

  stats::PairedSeries score_series, bleu_series;
  double mae_sum = 0.0;
  for (size_t i = triples.size() - held_out; i < triples.size(); ++i) {
    const auto& t = triples[i];
    auto seq = unice::assemble(t.example.g, t.example.r, std::nullopt, trained.checkpoint.vocab,
                               unice::InputFormat::ref_only);
    auto pred = unice::predict(seq, trained.checkpoint);
    score_series.m1.push_back(pred.code_score);
    score_series.m2.push_back(t.example.labels.pass_ratio);
    bleu_series.m1.push_back(metrics::bleu({t.g_tokens}, {t.r_tokens}));
    bleu_series.m2.push_back(t.example.labels.pass_ratio);
    mae_sum += std::abs(pred.code_score - t.example.labels.pass_ratio);
  }
  double rs_score = stats::spearman(score_series);
  double rs_bleu = stats::spearman(bleu_series);
  double mae = mae_sum / static_cast<double>(held_out);
  c.require(rs_score > rs_bleu, "held-out r_s(codescore)=" + fmt(rs_score) +
                                    " not greater than r_s(bleu)=" + fmt(rs_bleu));
  c.require(mae < 0.15, "held-out MAE " + fmt(mae) + " not below 0.15");
  double secs = elapsed_s(start);
  c.require(secs < 600.0, "runtime " + fmt(secs) + "s exceeds 10 minutes");
  c.detail << " (r_s " << fmt(rs_score) << " vs bleu " << fmt(rs_bleu) << ", MAE " << fmt(mae)
           << ", " << fmt(secs) << "s)";
}

// ---------------------------------------------------------------------------
// criterion 8: exec classification on injected syntax errors
// ---------------------------------------------------------------------------

void criterion8(Checker& c, const std::filesystem::path&) {
  auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(3033);
  std::vector<std::string> names{"alpha", "beta", "gamma", "delta", "omega", "kappa",
                                 "sigma", "theta"};
  const char* ops[] = {"+", "-", "*"};

  struct Sample {
    std::string g, r, n;
    bool corrupted;
  };
  std::vector<Sample> samples;
  for (int i = 0; i < 240; ++i) {
    std::string fn = "fn" + std::to_string(i % 40);
    std::string v1 = names[rng() % names.size()];
    std::string v2 = names[rng() % names.size()];
    auto program = [&](int c1, int c2) {
      std::ostringstream s;
      s << "def " << fn << "(x):\n";
      s << "    " << v1 << " = x " << ops[rng() % 3] << " " << c1 << "\n";
      s << "    " << v2 << " = " << v1 << " " << ops[rng() % 3] << " " << c2 << "\n";
      s << "    return " << v2 << "\n";
      return s.str();
    };
    Sample sample;
    sample.r = program(static_cast<int>(rng() % 9) + 1, static_cast<int>(rng() % 9) + 1);
    sample.g = program(static_cast<int>(rng() % 9) + 1, static_cast<int>(rng() % 9) + 1);
    sample.n = "apply two arithmetic steps to the input " + std::to_string(i % 40);
    sample.corrupted = i % 2 == 1;
    if (sample.corrupted) {
      int kind = static_cast<int>(rng() % 10);
      if (kind < 6) {
        // alien character: always a lexical error
        size_t at = 1 + rng() % (sample.g.size() - 2);
        sample.g.insert(at, "$");
      } else if (kind < 8) {
        // unbalanced parenthesis at the end of the def line
        size_t line_end = sample.g.find('\n');
        sample.g.insert(line_end, ")");
      } else {
        // strip the def line's colon
        size_t colon = sample.g.find(':');
        sample.g.erase(colon, 1);
      }
    }
    samples.push_back(std::move(sample));
  }

  // honest labels: run every candidate through the sandbox
  sandbox::ExecutionLimits limits;
  limits.wall_time_ms = 3000;
  limits.cpu_time_ms = 3000;
  const auto toolchains = sandbox::ToolchainTable::defaults();
  const auto& toolchain = toolchains.lookup("python");
  corpus::TestCase trivial;
  trivial.mode = corpus::CaseMode::stdio;
  trivial.input = "";
  trivial.expected = "";
  std::vector<int> executability(samples.size(), 0);
  sandbox::parallel_for(samples.size(), 4, [&](size_t i) {
    auto truth = sandbox::evaluate_candidate(samples[i].g, {trivial}, limits, toolchain);
    executability[i] = truth.executability;
  });
  size_t label_mismatches = 0;
  for (size_t i = 0; i < samples.size(); ++i)
    if (executability[i] == (samples[i].corrupted ? 1 : 0)) ++label_mismatches;
  c.require(label_mismatches == 0, "injected corruption did not map 1:1 to executability");

  std::vector<unice::TrainExample> train_set;
  size_t held_out = 60;
  for (size_t i = 0; i < samples.size() - held_out; ++i) {
    unice::TrainExample ex;
    ex.g = samples[i].g;
    ex.r = samples[i].r;
    ex.n = samples[i].n;
    ex.labels.executability = executability[i];
    ex.labels.pass_ratio = executability[i] ? 1.0 : 0.0;
    train_set.push_back(std::move(ex));
  }
  unice::TrainConfig cfg;
  cfg.seed = 11;
  cfg.backbone.dim = 32;
  cfg.backbone.layers = 2;
  cfg.head_dims = {32, 16, 2};
  cfg.learning_rate = 0.005;
  cfg.epochs = 40;
  auto trained = unice::train(train_set, cfg);

  size_t correct = 0, held_corrupted = 0;
  for (size_t i = samples.size() - held_out; i < samples.size(); ++i) {
    auto seq = unice::assemble(samples[i].g, samples[i].r, samples[i].n,
                               trained.checkpoint.vocab, unice::InputFormat::ref_and_nl);
    auto pred = unice::predict(seq, trained.checkpoint);
    if (pred.exec == executability[i]) ++correct;
    if (samples[i].corrupted) ++held_corrupted;
  }
  double accuracy = static_cast<double>(correct) / static_cast<double>(held_out);
  c.require(held_corrupted >= held_out / 3, "held-out split lost its corrupted half");
  c.require(accuracy >= 0.90, "held-out exec accuracy " + fmt(accuracy) + " below 0.90");
  double secs = elapsed_s(start);
  c.require(secs < 600.0, "runtime " + fmt(secs) + "s exceeds 10 minutes");
  c.detail << " (accuracy " << fmt(accuracy) << " on " << held_out << " held-out, "
           << fmt(secs) << "s)";
}

// ---------------------------------------------------------------------------
// criterion 9: test extension exposes a planted wrong candidate
// ---------------------------------------------------------------------------

void criterion9(Checker& c, const std::filesystem::path&) {
  auto start = std::chrono::steady_clock::now();
  sandbox::ExecutionLimits limits;
  limits.wall_time_ms = 3000;
  limits.cpu_time_ms = 3000;
  auto toolchains = sandbox::ToolchainTable::defaults();

  std::vector<int> factors{2, 3, 4, 5, 6, 8, 9, 10, 11, 12};
  std::vector<corpus::TaskRecord> seeds;
  for (int k : factors) {
    corpus::TaskRecord t;
    t.task_id = "mul" + std::to_string(k);
    t.nl = "multiply the input by " + std::to_string(k);
    t.ref_codes = {"print(int(input())*" + std::to_string(k) + ")"};
    // the wide third input keeps the observed range large enough for the
    // enumerator to reach 100 distinct integers
    for (int input : {0, k, 47}) {
      corpus::TestCase tc;
      tc.mode = corpus::CaseMode::stdio;
      tc.input = std::to_string(input) + "\n";
      tc.expected = std::to_string(input * k) + "\n";
      t.test_cases.push_back(tc);
    }
    // x*x agrees with x*k exactly on inputs 0 and k: 2 of 3 original cases
    t.candidates = {{"planted", "print(int(input())**2)", std::nullopt}};
    seeds.push_back(std::move(t));
  }

  std::vector<std::string> failures(seeds.size());
  std::vector<double> original_pr(seeds.size()), extended_pr(seeds.size());
  std::vector<size_t> extended_counts(seeds.size());
  sandbox::parallel_for(seeds.size(), 4, [&](size_t i) {
    const auto& task = seeds[i];
    const auto& toolchain = toolchains.lookup("python");
    testgen::GenerationBudget budget;
    budget.target_count = 100;
    budget.max_attempts = 2000;
    budget.seed = 4100 + i;
    auto extended = testgen::extend_task(task, budget, limits, toolchains, 1);
    extended_counts[i] = extended.test_cases.size();
    if (extended.test_cases.size() < task.test_cases.size() + 50) {
      failures[i] = "extension added too few cases";
      return;
    }
    // every extended case re-executes cleanly against the reference
    auto self = sandbox::evaluate_candidate(task.ref_codes[0], extended.test_cases, limits,
                                            toolchain);
    if (self.pass_ratio != 1.0) {
      failures[i] = "extended suite not self-consistent for " + task.task_id;
      return;
    }
    auto before = sandbox::evaluate_candidate(task.candidates[0].code, task.test_cases, limits,
                                              toolchain);
    auto after = sandbox::evaluate_candidate(task.candidates[0].code, extended.test_cases,
                                             limits, toolchain);
    original_pr[i] = before.pass_ratio;
    extended_pr[i] = after.pass_ratio;
    if (before.pass_ratio != 2.0 / 3.0) {
      failures[i] = "planted candidate should pass 2 of 3 original cases";
      return;
    }
    if (!(after.pass_ratio < before.pass_ratio)) {
      failures[i] = "extension did not strictly decrease the planted candidate's PassRatio";
      return;
    }
  });
  for (size_t i = 0; i < seeds.size(); ++i)
    c.require(failures[i].empty(), seeds[i].task_id + ": " + failures[i]);
  double secs = elapsed_s(start);
  std::ostringstream drop;
  drop << fmt(original_pr[0]) << "->" << fmt(extended_pr[0]);
  c.detail << " (10 tasks to >=" << extended_counts[0] << " cases, e.g. PassRatio "
           << drop.str() << ", " << fmt(secs) << "s)";
}

// ---------------------------------------------------------------------------
// criterion 10: determinism of execute, extend-tests, and train
// ---------------------------------------------------------------------------

void criterion10(Checker& c, const std::filesystem::path& data_dir) {
  auto scratch = std::filesystem::temp_directory_path() / "cseval-acceptance-determinism";
  std::filesystem::remove_all(scratch);
  std::filesystem::create_directories(scratch);

  cli::RunConfig config;
  config.corpus_path = data_dir / "desk_corpus.jsonl";
  config.jobs = 4;
  config.seed = 99;
  config.limits.wall_time_ms = 3000;
  config.limits.cpu_time_ms = 3000;

  // execute twice: fields identical apart from durations
  for (const char* run : {"x1", "x2"}) {
    config.out_dir = scratch / run;
    if (cli::cmd_execute(config) != cli::kExitOk) {
      c.require(false, "execute failed");
      return;
    }
  }
  auto gt1 = corpus::load_ground_truth(scratch / "x1" / "ground_truth.jsonl");
  auto gt2 = corpus::load_ground_truth(scratch / "x2" / "ground_truth.jsonl");
  c.require(gt1.size() == gt2.size(), "execute reruns disagree on record count");
  for (size_t i = 0; i < std::min(gt1.size(), gt2.size()); ++i) {
    bool same = gt1[i].task_id == gt2[i].task_id &&
                gt1[i].candidate_id == gt2[i].candidate_id &&
                gt1[i].pass_ratio == gt2[i].pass_ratio &&
                gt1[i].executability == gt2[i].executability &&
                gt1[i].cases.size() == gt2[i].cases.size();
    if (same)
      for (size_t k = 0; k < gt1[i].cases.size(); ++k)
        same = same && gt1[i].cases[k].first == gt2[i].cases[k].first;  // status, not duration
    if (!same) {
      std::ostringstream diff;
      diff << "execute rerun differs at " << gt1[i].task_id << "/" << gt1[i].candidate_id
           << ": run1 pr=" << gt1[i].pass_ratio << " exec=" << gt1[i].executability << " [";
      for (const auto& [s, ms] : gt1[i].cases) diff << s << ",";
      diff << "] run2 pr=" << gt2[i].pass_ratio << " exec=" << gt2[i].executability << " [";
      for (const auto& [s, ms] : gt2[i].cases) diff << s << ",";
      diff << "]";
      c.require(false, diff.str());
      break;
    }
  }

  // extend-tests twice on a 3-task subset: byte-identical corpora
  {
    auto tasks = corpus::load_corpus(data_dir / "desk_corpus.jsonl");
    std::vector<corpus::TaskRecord> subset;
    for (const auto& t : tasks)
      if (t.task_id == "double" || t.task_id == "succ" || t.task_id == "add") {
        corpus::TaskRecord copy = t;
        copy.candidates = {copy.candidates.front()};
        subset.push_back(copy);
      }
    corpus::write_corpus(scratch / "seeds.jsonl", subset);
    cli::RunConfig extend_config = config;
    extend_config.corpus_path = scratch / "seeds.jsonl";
    extend_config.budget.target_count = 25;
    extend_config.budget.max_attempts = 400;
    for (const char* run : {"e1", "e2"}) {
      extend_config.out_dir = scratch / run;
      if (cli::cmd_extend(extend_config) != cli::kExitOk) {
        c.require(false, "extend-tests failed");
        return;
      }
    }
    c.require(jsonl::read_text_file(scratch / "e1" / "extended_corpus.jsonl") ==
                  jsonl::read_text_file(scratch / "e2" / "extended_corpus.jsonl"),
              "extend-tests reruns differ");
  }

  // train twice: byte-identical checkpoint and log
  {
    cli::RunConfig train_config = config;
    train_config.ground_truth_path = scratch / "x1" / "ground_truth.jsonl";
    train_config.train.seed = 55;
    train_config.train.epochs = 4;
    train_config.train.backbone.dim = 12;
    train_config.train.backbone.layers = 2;
    train_config.train.head_dims = {12, 6, 2};
    for (const char* run : {"t1", "t2"}) {
      train_config.out_dir = scratch / run;
      if (cli::cmd_train(train_config) != cli::kExitOk) {
        c.require(false, "train failed");
        return;
      }
    }
    c.require(jsonl::read_text_file(scratch / "t1" / "checkpoint.txt") ==
                  jsonl::read_text_file(scratch / "t2" / "checkpoint.txt"),
              "train reruns produced different checkpoints");
    c.require(jsonl::read_text_file(scratch / "t1" / "training_log.jsonl") ==
                  jsonl::read_text_file(scratch / "t2" / "training_log.jsonl"),
              "train reruns produced different logs");
  }
  c.detail << " (execute/extend/train reproduced field-identically)";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <data-dir> [criterion-number]\n";
    return 2;
  }
  std::filesystem::path data_dir = argv[1];
  int only = argc > 2 ? std::atoi(argv[2]) : 0;

  struct Entry {
    int number;
    const char* name;
    CriterionFn fn;
  };
  const Entry criteria[] = {
      {1, "ground-truth exactness on the desk corpus", criterion1},
      {2, "formula oracles (bleu, crystalbleu, embed_prf, tau, r_s, r_p, mae)", criterion2},
      {3, "subtree/dataflow brute-force oracles", criterion3},
      {4, "codebleu algebra and collapse identities", criterion4},
      {5, "gradient checks vs central differences", criterion5},
      {6, "loss arithmetic (additivity, loss_e closed form)", criterion6},
      {7, "learning sanity beats bleu on held-out rank correlation", criterion7},
      {8, "exec head classifies injected syntax errors", criterion8},
      {9, "test extension is self-consistent and exposes a planted bug", criterion9},
      {10, "determinism of execute, extend-tests, train", criterion10},
  };

  int failures = 0;
  for (const auto& entry : criteria) {
    if (only && entry.number != only) continue;
    Checker checker;
    try {
      entry.fn(checker, data_dir);
    } catch (const std::exception& e) {
      checker.ok = false;
      checker.detail << "\n    exception: " << e.what();
    }
    std::cout << (checker.ok ? "PASS" : "FAIL") << " criterion " << entry.number << ": "
              << entry.name << checker.detail.str() << "\n";
    if (!checker.ok) ++failures;
  }
  if (failures) {
    std::cout << failures << " criteria failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
