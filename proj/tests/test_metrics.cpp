#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "cseval/metrics.hpp"
#include "doctest.h"

using namespace cseval;
using metrics::NGram;
using metrics::TokenSequence;

namespace {

TokenSequence seq(std::vector<std::string> tokens) {
  return TokenSequence{std::move(tokens)};
}

std::vector<std::string> random_tokens(std::mt19937_64& rng, size_t max_len,
                                       const std::vector<std::string>& pool) {
  std::uniform_int_distribution<size_t> len_d(0, max_len);
  std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
  std::vector<std::string> out(len_d(rng));
  for (auto& t : out) t = pool[pick(rng)];
  return out;
}

// ---- independent BLEU oracle: direct reading of the formula, separate
// counting code (nested scans instead of count maps) ----
double bleu_oracle(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                   const std::set<NGram>* removed = nullptr,
                   const std::set<std::string>* keywords = nullptr, double kappa = 1.0) {
  size_t lg = cand.size(), lr = ref.size();
  if (lg == 0) return 0.0;
  auto grams_of = [&](const std::vector<std::string>& toks, size_t n) {
    std::vector<NGram> grams;
    for (size_t i = 0; i + n <= toks.size(); ++i)
      grams.emplace_back(toks.begin() + i, toks.begin() + i + n);
    if (removed) {
      std::vector<NGram> kept;
      for (auto& g : grams)
        if (!removed->count(g)) kept.push_back(g);
      grams = std::move(kept);
    }
    return grams;
  };
  auto weight_of = [&](const NGram& g) {
    if (!keywords) return 1.0;
    for (const auto& t : g)
      if (keywords->count(t)) return kappa;
    return 1.0;
  };
  double logsum = 0.0;
  bool any_mass = false;
  for (size_t n = 1; n <= 4; ++n) {
    auto cg = grams_of(cand, n);
    auto rg = grams_of(ref, n);
    double total = 0.0, matched = 0.0;
    std::map<NGram, long> ref_budget;
    for (auto& g : rg) ++ref_budget[g];
    std::map<NGram, long> cand_count;
    for (auto& g : cg) ++cand_count[g];
    for (auto& [g, c] : cand_count) {
      double w = weight_of(g);
      total += w * c;
      auto it = ref_budget.find(g);
      if (it != ref_budget.end()) matched += w * std::min(c, it->second);
    }
    if (total > 0) any_mass = true;
    double p = (total > 0 && matched > 0) ? matched / total : 1.0 / (2.0 * lg);
    logsum += 0.25 * std::log(p);
  }
  if (!any_mass) return 0.0;
  double bp = lg >= lr ? 1.0 : std::exp(1.0 - static_cast<double>(lr) / static_cast<double>(lg));
  return bp * std::exp(logsum);
}

}  // namespace

TEST_CASE("tokenize drops comments and keeps string literals whole") {
  auto t = metrics::tokenize_code("a = 1  # note", "python");
  CHECK(t.tokens == std::vector<std::string>{"a", "=", "1"});
  CHECK(metrics::tokenize_code("", "python").tokens.empty());
  auto s = metrics::tokenize_code("x = 'hello world'  # trailing", "python");
  CHECK(s.tokens == std::vector<std::string>{"x", "=", "'hello world'"});
  auto twice = metrics::tokenize_code("def f(n):\n    return n*2\n", "python");
  CHECK(twice.tokens == metrics::tokenize_code("def f(n):\n    return n*2\n", "python").tokens);
  CHECK_THROWS_AS(metrics::tokenize_code("x", "cobol"), ValidationError);
}

TEST_CASE("tokenizer handles multi-char operators, numbers, and prefixes") {
  auto t = metrics::tokenize_code("y **= 0x1f + 2.5e-3 // b'z'", "python");
  CHECK(t.tokens == std::vector<std::string>{"y", "**=", "0x1f", "+", "2.5e-3", "//", "b'z'"});
}

TEST_CASE("bleu identity and the closed-form brevity penalty") {
  auto same = seq({"def", "f", "(", "x", ")", ":"});
  CHECK(metrics::bleu(same, same) == doctest::Approx(1.0));
  // l_g=5, l_r=10, every candidate n-gram present in the reference
  auto cand = seq({"a", "b", "c", "d", "e"});
  auto ref = seq({"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"});
  CHECK(metrics::bleu(cand, ref) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(metrics::bleu(cand, ref) == doctest::Approx(0.36787944117144233).epsilon(1e-12));
  CHECK(metrics::bleu(seq({}), ref) == 0.0);
}

TEST_CASE("bleu matches the definitional oracle on 150 random pairs") {
  std::mt19937_64 rng(41);
  std::vector<std::string> pool{"a", "b", "c", "d", "(", ")", "=", "+", "x", "y"};
  for (int round = 0; round < 150; ++round) {
    auto c = random_tokens(rng, 30, pool);
    auto r = random_tokens(rng, 30, pool);
    double got = metrics::bleu(seq(c), seq(r));
    double want = bleu_oracle(c, r);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
  }
}

TEST_CASE("exact match normalizes trailing whitespace only") {
  CHECK(metrics::exact_match("a=1\nb=2", "a=1\nb=2") == 1.0);
  CHECK(metrics::exact_match("a=1", "a=2") == 0.0);
  CHECK(metrics::exact_match("a=1  \nb=2\t", "a=1\nb=2") == 1.0);
  CHECK(metrics::exact_match(" a=1", "a=1") == 0.0);  // leading space is significant
}

TEST_CASE("weighted n-gram precision: identity, no-keyword collapse, kappa=1 collapse") {
  const auto& kws = metrics::keyword_set("python");
  auto same = seq({"return", "x", "+", "1", ")"});
  CHECK(metrics::weighted_ngram_precision(same, same, kws, 5.0) == doctest::Approx(1.0));

  std::mt19937_64 rng(43);
  std::vector<std::string> nokw_pool{"a", "b", "+", "(", ")"};
  std::vector<std::string> kw_pool{"return", "if", "a", "b", "+", "(", ")", "not"};
  for (int round = 0; round < 100; ++round) {
    auto c = random_tokens(rng, 25, nokw_pool);
    auto r = random_tokens(rng, 25, nokw_pool);
    CHECK(metrics::weighted_ngram_precision(seq(c), seq(r), kws, 5.0) ==
          doctest::Approx(metrics::bleu(seq(c), seq(r))).epsilon(1e-12));
    auto ck = random_tokens(rng, 25, kw_pool);
    auto rk = random_tokens(rng, 25, kw_pool);
    // kappa = 1 collapses to plain bleu even with keywords present
    CHECK(metrics::weighted_ngram_precision(seq(ck), seq(rk), kws, 1.0) ==
          doctest::Approx(metrics::bleu(seq(ck), seq(rk))).epsilon(1e-12));
    // and matches the weighted oracle otherwise
    CHECK(metrics::weighted_ngram_precision(seq(ck), seq(rk), kws, 5.0) ==
          doctest::Approx(bleu_oracle(ck, rk, nullptr, &kws, 5.0)).epsilon(1e-9));
  }
}

TEST_CASE("crystalbleu collapses with an empty shared set and zeroes out shared-only candidates") {
  std::mt19937_64 rng(47);
  std::vector<std::string> pool{"(", ")", ",", "a", "b", "c", "="};
  for (int round = 0; round < 100; ++round) {
    auto c = random_tokens(rng, 25, pool);
    auto r = random_tokens(rng, 25, pool);
    CHECK(metrics::crystalbleu(seq(c), seq(r), {}) ==
          doctest::Approx(metrics::bleu(seq(c), seq(r))).epsilon(1e-12));
  }
  // candidate whose every n-gram is trivially shared
  std::set<NGram> shared;
  std::vector<std::string> paren_run{"(", "(", "(", "("};
  for (size_t n = 1; n <= 4; ++n)
    shared.insert(NGram(paren_run.begin(), paren_run.begin() + n));
  CHECK(metrics::crystalbleu(seq(paren_run), seq({"(", "(", "a"}), shared) == 0.0);
}

TEST_CASE("crystalbleu matches definitional recomputation with deletions") {
  std::mt19937_64 rng(53);
  std::vector<std::string> pool{"(", ")", ",", "a", "b", "c", "=", "+"};
  std::set<NGram> shared{{"("}, {")"}, {","}, {"(", ")"}};
  for (int round = 0; round < 120; ++round) {
    auto c = random_tokens(rng, 30, pool);
    auto r = random_tokens(rng, 30, pool);
    double got = metrics::crystalbleu(seq(c), seq(r), shared);
    double want = bleu_oracle(c, r, &shared);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("compute_trivially_shared picks the most frequent n-grams deterministically") {
  std::vector<TokenSequence> corpus{seq({"(", "(", "(", "a"}), seq({"(", "b"})};
  auto top1 = metrics::compute_trivially_shared(corpus, 1);
  REQUIRE(top1.size() == 1);
  CHECK(*top1.begin() == NGram{"("});

  auto all = metrics::compute_trivially_shared(corpus, 100000);
  // oversize k returns every distinct n-gram of the corpus
  std::set<NGram> expect;
  for (const auto& s : corpus)
    for (const auto& [g, c] : metrics::ngram_profile(s).counts) expect.insert(g);
  CHECK(all == expect);

  CHECK(metrics::compute_trivially_shared(corpus, 3) ==
        metrics::compute_trivially_shared(corpus, 3));
  CHECK_THROWS_AS(metrics::compute_trivially_shared({}, 5), ValidationError);
}

TEST_CASE("hashed provider emits unit vectors deterministically") {
  metrics::HashedContextProvider provider(48);
  std::vector<std::string> toks{"def", "f", "(", "x", ")"};
  auto a = provider.embed(toks);
  auto b = provider.embed(toks);
  REQUIRE(a.size() == toks.size());
  CHECK(a == b);
  for (const auto& v : a) {
    double norm = 0;
    for (double x : v) norm += x * x;
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);
  }
}

TEST_CASE("embed_prf: identity scores 1 and f1 is the harmonic mean") {
  metrics::HashedContextProvider provider(32);
  auto same = seq({"def", "f", "(", "x", ")", ":", "return", "x"});
  auto prf = metrics::embed_prf(same, same, provider);
  CHECK(prf.precision == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(prf.recall == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(prf.f1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(metrics::embed_prf(seq({}), same, provider), ValidationError);
}

TEST_CASE("embed_prf matches the exhaustive double-loop oracle on 120 random pairs") {
  metrics::HashedContextProvider provider(24);
  std::mt19937_64 rng(59);
  std::vector<std::string> pool{"a", "b", "c", "d", "e", "(", ")", "="};
  std::map<std::string, double> idf{{"a", 2.0}, {"b", 0.5}, {"(", 0.1}, {"e", 3.0}};
  for (int round = 0; round < 120; ++round) {
    auto c = random_tokens(rng, 20, pool);
    auto r = random_tokens(rng, 20, pool);
    if (c.empty() || r.empty()) continue;
    const std::map<std::string, double>* table = round % 2 ? &idf : nullptr;
    auto got = metrics::embed_prf(seq(c), seq(r), provider, table);

    // oracle: full similarity matrix first, then row/column maxima
    auto cv = provider.embed(c);
    auto rv = provider.embed(r);
    std::vector<std::vector<double>> sim(r.size(), std::vector<double>(c.size()));
    for (size_t i = 0; i < r.size(); ++i)
      for (size_t j = 0; j < c.size(); ++j) {
        double s = 0;
        for (size_t k = 0; k < rv[i].size(); ++k) s += rv[i][k] * cv[j][k];
        sim[i][j] = s;
      }
    auto w = [&](const std::string& tok) {
      if (!table) return 1.0;
      auto it = table->find(tok);
      return it == table->end() ? 1.0 : it->second;
    };
    double rn = 0, rd = 0;
    for (size_t i = 0; i < r.size(); ++i) {
      double best = *std::max_element(sim[i].begin(), sim[i].end());
      rn += w(r[i]) * best;
      rd += w(r[i]);
    }
    double pn = 0, pd = 0;
    for (size_t j = 0; j < c.size(); ++j) {
      double best = sim[0][j];
      for (size_t i = 1; i < r.size(); ++i) best = std::max(best, sim[i][j]);
      pn += w(c[j]) * best;
      pd += w(c[j]);
    }
    double recall = rn / rd, precision = pn / pd;
    CHECK(got.recall == doctest::Approx(recall).epsilon(1e-9));
    CHECK(got.precision == doctest::Approx(precision).epsilon(1e-9));
    CHECK(got.f1 ==
          doctest::Approx(2 * precision * recall / (precision + recall)).epsilon(1e-9));
  }
}

TEST_CASE("table provider reads rows, renormalizes, and falls back deterministically") {
  auto path = std::filesystem::temp_directory_path() / "cseval-embed-table.txt";
  {
    std::ofstream out(path);
    out << "alpha 3 0 0 0\n";  // renormalized to unit length
    out << "beta 0 1 0 0\n";
  }
  metrics::TableProvider provider(path);
  auto vecs = provider.embed({"alpha", "beta", "missing"});
  CHECK(vecs[0][0] == doctest::Approx(1.0));
  CHECK(vecs[1][1] == doctest::Approx(1.0));
  auto again = provider.embed({"missing"});
  CHECK(vecs[2] == again[0]);
  double norm = 0;
  for (double x : vecs[2]) norm += x * x;
  CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);
}

TEST_CASE("idf table round-trips through its cache file") {
  std::vector<TokenSequence> refs{seq({"a", "b", "a"}), seq({"a", "c"})};
  auto idf = metrics::idf_table(refs);
  CHECK(idf.at("a") == doctest::Approx(std::log(3.0 / 3.0)));
  CHECK(idf.at("b") == doctest::Approx(std::log(3.0 / 2.0)));
  auto path = std::filesystem::temp_directory_path() / "cseval-idf.txt";
  metrics::write_idf_table(path, idf);
  CHECK(metrics::read_idf_table(path) == idf);
}

TEST_CASE("every metric stays inside [0,1] and f1 swaps symmetrically") {
  metrics::HashedContextProvider provider(16);
  const auto& kws = metrics::keyword_set("python");
  std::mt19937_64 rng(61);
  std::vector<std::string> pool{"a", "b", "if", "(", ")", "=", "1", "x"};
  for (int round = 0; round < 80; ++round) {
    auto c = random_tokens(rng, 20, pool);
    auto r = random_tokens(rng, 20, pool);
    for (double v : {metrics::bleu(seq(c), seq(r)),
                     metrics::weighted_ngram_precision(seq(c), seq(r), kws, 5.0),
                     metrics::crystalbleu(seq(c), seq(r), {{"("}, {")"}})}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    if (!c.empty() && !r.empty()) {
      auto ab = metrics::embed_prf(seq(c), seq(r), provider);
      auto ba = metrics::embed_prf(seq(r), seq(c), provider);
      CHECK(ab.f1 == doctest::Approx(ba.f1).epsilon(1e-12));
      CHECK(ab.precision == doctest::Approx(ba.recall).epsilon(1e-12));
    }
  }
}

TEST_CASE("codebleu weight validation") {
  metrics::CodeBleuWeights ok;
  CHECK_NOTHROW(ok.validate());
  metrics::CodeBleuWeights bad{0.5, 0.5, 0.5, 0.5};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  metrics::CodeBleuWeights negative{-0.25, 0.5, 0.5, 0.25};
  CHECK_THROWS_AS(negative.validate(), ValidationError);
}
