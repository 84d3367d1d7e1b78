#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cseval/common.hpp"

namespace cseval::metrics {

struct TokenSequence {
  std::vector<std::string> tokens;
  size_t length() const { return tokens.size(); }
};

// Lexical tokens for language_tag; comments dropped, string literals kept
// as single tokens. Throws ValidationError on an unknown tag.
TokenSequence tokenize_code(const std::string& code, const std::string& language_tag);

// Whitespace/punctuation word split for natural-language text.
std::vector<std::string> nl_tokens(const std::string& text);

using NGram = std::vector<std::string>;

struct NGramProfile {
  std::map<NGram, long> counts;  // all n-grams, 1 <= n <= max_n
  size_t source_length = 0;
};

NGramProfile ngram_profile(const TokenSequence& seq, int max_n = 4);

// BP * exp(sum_{m=1..4} (1/4) log p_m). Zero-count precisions are replaced
// by the smoothing floor 1/(2*l_g); an empty candidate scores 0.
double bleu(const TokenSequence& candidate, const TokenSequence& reference);

// 1 iff the strings are equal after per-line trailing-whitespace stripping.
double exact_match(const std::string& candidate, const std::string& reference);

// BLEU where every matched or counted n-gram containing a keyword weighs
// kappa instead of 1.
double weighted_ngram_precision(const TokenSequence& candidate, const TokenSequence& reference,
                                const std::set<std::string>& keyword_set, double kappa = 5.0);

// Fraction of reference non-leaf subtrees (identifiers abstracted) that
// occur as exact labeled trees in the candidate. Unparseable candidate
// scores 0; an unparseable reference is a corpus defect.
double ast_match(const std::string& candidate_code, const std::string& reference_code,
                 const std::string& language_tag);

// Fraction of reference def-use edges present in the candidate's edge set.
double dataflow_match(const std::string& candidate_code, const std::string& reference_code,
                      const std::string& language_tag);

struct CodeBleuWeights {
  double alpha = 0.25;
  double beta = 0.25;
  double delta = 0.25;
  double zeta = 0.25;
  void validate() const;  // non-negative and summing to 1 within 1e-12
};

struct CodeBleuBreakdown {
  double bleu = 0.0;
  double weighted = 0.0;
  double ast = 0.0;
  double dataflow = 0.0;
  double combined = 0.0;
};

CodeBleuBreakdown codebleu(const std::string& candidate_code, const std::string& reference_code,
                           const std::string& language_tag,
                           const CodeBleuWeights& weights = {}, double kappa = 5.0);

// BLEU after deleting all occurrences of the trivially shared n-grams from
// both count tables. A candidate left with no n-gram mass at any order
// scores 0.
double crystalbleu(const TokenSequence& candidate, const TokenSequence& reference,
                   const std::set<NGram>& trivially_shared);

// The k most frequent n-grams (1 <= n <= 4) over the corpus; ties broken
// lexicographically.
std::set<NGram> compute_trivially_shared(const std::vector<TokenSequence>& corpus, int k);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// embed(tokens) yields one unit-normalized vector per token.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) = 0;
  virtual int dimension() const = 0;
};

// Deterministic pseudo-embeddings hashed from each token and its immediate
// neighbors.
class HashedContextProvider : public EmbeddingProvider {
 public:
  explicit HashedContextProvider(int dim = 64, uint64_t seed = 0x5eed);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) override;
  int dimension() const override { return dim_; }

 private:
  int dim_;
  uint64_t seed_;
};

// Reads "token v1 v2 ... vd" lines; rows are re-normalized on load. Tokens
// absent from the table fall back to the hashed provider so output stays
// total.
class TableProvider : public EmbeddingProvider {
 public:
  explicit TableProvider(const std::filesystem::path& path);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) override;
  int dimension() const override { return dim_; }

 private:
  int dim_ = 0;
  std::map<std::string, std::vector<double>> table_;
  std::unique_ptr<HashedContextProvider> fallback_;
};

// Greedy-match precision/recall/F1 over token embeddings, optionally
// idf-weighted. Throws on an empty sequence.
Prf embed_prf(const TokenSequence& candidate, const TokenSequence& reference,
              EmbeddingProvider& provider,
              const std::map<std::string, double>* idf = nullptr);

// idf(token) = log((N+1)/(df+1)) over the given reference documents.
std::map<std::string, double> idf_table(const std::vector<TokenSequence>& references);
void write_idf_table(const std::filesystem::path& path, const std::map<std::string, double>& idf);
std::map<std::string, double> read_idf_table(const std::filesystem::path& path);

// Reserved words of the language, used as the keyword set for the weighted
// n-gram component.
const std::set<std::string>& keyword_set(const std::string& language_tag);

}  // namespace cseval::metrics
