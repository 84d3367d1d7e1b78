#include "cseval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <array>
#include <random>
#include <sstream>
#include <unordered_set>

#include "cseval/dataflow.hpp"
#include "json.hpp"
#include "cseval/lexer.hpp"
#include "cseval/pyast.hpp"

namespace cseval::metrics {

namespace {

void require_python(const std::string& language_tag) {
  if (language_tag != "python")
    throw ValidationError("unsupported language_tag: '" + language_tag + "'");
}

}  // namespace

TokenSequence tokenize_code(const std::string& code, const std::string& language_tag) {
  require_python(language_tag);
  lexer::LexResult lexed = lexer::lex_python(code);
  TokenSequence seq;
  for (const auto& t : lexed.tokens) {
    switch (t.kind) {
      case lexer::TokenKind::name:
      case lexer::TokenKind::keyword:
      case lexer::TokenKind::number:
      case lexer::TokenKind::string:
      case lexer::TokenKind::op:
      case lexer::TokenKind::unknown:
        seq.tokens.push_back(t.text);
        break;
      default:
        break;  // layout
    }
  }
  return seq;
}

std::vector<std::string> nl_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'') {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
      if (!std::isspace(static_cast<unsigned char>(c)))
        out.push_back(std::string(1, c));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

NGramProfile ngram_profile(const TokenSequence& seq, int max_n) {
  NGramProfile prof;
  prof.source_length = seq.length();
  for (int n = 1; n <= max_n; ++n) {
    if (seq.tokens.size() < static_cast<size_t>(n)) break;
    for (size_t i = 0; i + n <= seq.tokens.size(); ++i)
      ++prof.counts[NGram(seq.tokens.begin() + i, seq.tokens.begin() + i + n)];
  }
  return prof;
}

namespace {

double brevity_penalty(size_t l_g, size_t l_r) {
  if (l_g >= l_r) return 1.0;
  return std::exp(1.0 - static_cast<double>(l_r) / static_cast<double>(l_g));
}

struct PrecisionMass {
  double matched = 0.0;
  double total = 0.0;
};

// Clipped n-gram precision masses per order, with an optional per-n-gram
// weight function.
template <typename WeightFn>
std::array<PrecisionMass, 4> precision_masses(const NGramProfile& cand,
                                              const NGramProfile& ref, WeightFn weight) {
  std::array<PrecisionMass, 4> mass{};
  for (const auto& [gram, count] : cand.counts) {
    int n = static_cast<int>(gram.size());
    if (n < 1 || n > 4) continue;
    double w = weight(gram);
    auto it = ref.counts.find(gram);
    long clipped = it == ref.counts.end() ? 0 : std::min(count, it->second);
    mass[n - 1].matched += w * static_cast<double>(clipped);
    mass[n - 1].total += w * static_cast<double>(count);
  }
  return mass;
}

double bleu_from_masses(const std::array<PrecisionMass, 4>& mass, size_t l_g, size_t l_r) {
  if (l_g == 0) return 0.0;
  bool any_total = false;
  for (const auto& m : mass)
    if (m.total > 0.0) any_total = true;
  if (!any_total) return 0.0;
  const double floor = 1.0 / (2.0 * static_cast<double>(l_g));
  double log_sum = 0.0;
  for (const auto& m : mass) {
    double p = (m.total > 0.0 && m.matched > 0.0) ? m.matched / m.total : floor;
    log_sum += 0.25 * std::log(p);
  }
  return brevity_penalty(l_g, l_r) * std::exp(log_sum);
}

}  // namespace

double bleu(const TokenSequence& candidate, const TokenSequence& reference) {
  NGramProfile cand = ngram_profile(candidate);
  NGramProfile ref = ngram_profile(reference);
  auto mass = precision_masses(cand, ref, [](const NGram&) { return 1.0; });
  return bleu_from_masses(mass, candidate.length(), reference.length());
}

double exact_match(const std::string& candidate, const std::string& reference) {
  auto normalize = [](const std::string& s) {
    std::vector<std::string> lines = split_lines(s);
    std::string out;
    for (size_t i = 0; i < lines.size(); ++i) {
      if (i) out += '\n';
      out += rstrip(lines[i]);
    }
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
  };
  return normalize(candidate) == normalize(reference) ? 1.0 : 0.0;
}

double weighted_ngram_precision(const TokenSequence& candidate, const TokenSequence& reference,
                                const std::set<std::string>& keyword_set, double kappa) {
  NGramProfile cand = ngram_profile(candidate);
  NGramProfile ref = ngram_profile(reference);
  auto weight = [&](const NGram& gram) {
    for (const auto& tok : gram)
      if (keyword_set.count(tok)) return kappa;
    return 1.0;
  };
  auto mass = precision_masses(cand, ref, weight);
  return bleu_from_masses(mass, candidate.length(), reference.length());
}

namespace {

void collect_nonleaf_serializations(const pyast::Node& n,
                                    std::unordered_set<std::string>& out) {
  if (n.leaf()) return;
  out.insert(pyast::serialize(n));
  for (const auto& c : n.children) collect_nonleaf_serializations(c, out);
}

void count_matched_subtrees(const pyast::Node& n, const std::unordered_set<std::string>& cand,
                            size_t& total, size_t& matched) {
  if (n.leaf()) return;
  ++total;
  if (cand.count(pyast::serialize(n))) ++matched;
  for (const auto& c : n.children) count_matched_subtrees(c, cand, total, matched);
}

}  // namespace

double ast_match(const std::string& candidate_code, const std::string& reference_code,
                 const std::string& language_tag) {
  require_python(language_tag);
  pyast::Node ref;
  try {
    ref = pyast::parse_python(reference_code);
  } catch (const pyast::ParseError& e) {
    throw ValidationError(std::string("reference code does not parse: ") + e.what());
  }
  pyast::Node cand;
  try {
    cand = pyast::parse_python(candidate_code);
  } catch (const pyast::ParseError&) {
    return 0.0;
  }
  std::unordered_set<std::string> cand_subtrees;
  collect_nonleaf_serializations(cand, cand_subtrees);
  size_t total = 0, matched = 0;
  count_matched_subtrees(ref, cand_subtrees, total, matched);
  if (total == 0) return 1.0;  // empty reference imposes no structure
  return static_cast<double>(matched) / static_cast<double>(total);
}

double dataflow_match(const std::string& candidate_code, const std::string& reference_code,
                      const std::string& language_tag) {
  require_python(language_tag);
  pyast::Node ref;
  try {
    ref = pyast::parse_python(reference_code);
  } catch (const pyast::ParseError& e) {
    throw ValidationError(std::string("reference code does not parse: ") + e.what());
  }
  pyast::Node cand;
  try {
    cand = pyast::parse_python(candidate_code);
  } catch (const pyast::ParseError&) {
    return 0.0;
  }
  auto ref_edges = dataflow::extract_def_use(ref).edges;
  if (ref_edges.empty()) return 1.0;  // no reference semantics to violate
  auto cand_edges = dataflow::extract_def_use(cand).edges;
  std::set<dataflow::DefUseEdge> cand_set(cand_edges.begin(), cand_edges.end());
  size_t matched = 0;
  for (const auto& e : ref_edges)
    if (cand_set.count(e)) ++matched;
  return static_cast<double>(matched) / static_cast<double>(ref_edges.size());
}

void CodeBleuWeights::validate() const {
  if (alpha < 0 || beta < 0 || delta < 0 || zeta < 0)
    throw ValidationError("codebleu weights must be non-negative");
  double sum = alpha + beta + delta + zeta;
  if (std::abs(sum - 1.0) > 1e-12)
    throw ValidationError("codebleu weights must sum to 1, got " + format_double(sum));
}

CodeBleuBreakdown codebleu(const std::string& candidate_code, const std::string& reference_code,
                           const std::string& language_tag, const CodeBleuWeights& weights,
                           double kappa) {
  weights.validate();
  TokenSequence cand = tokenize_code(candidate_code, language_tag);
  TokenSequence ref = tokenize_code(reference_code, language_tag);
  CodeBleuBreakdown out;
  out.bleu = bleu(cand, ref);
  out.weighted = weighted_ngram_precision(cand, ref, keyword_set(language_tag), kappa);
  out.ast = ast_match(candidate_code, reference_code, language_tag);
  out.dataflow = dataflow_match(candidate_code, reference_code, language_tag);
  out.combined = weights.alpha * out.bleu + weights.beta * out.weighted +
                 weights.delta * out.ast + weights.zeta * out.dataflow;
  return out;
}

double crystalbleu(const TokenSequence& candidate, const TokenSequence& reference,
                   const std::set<NGram>& trivially_shared) {
  NGramProfile cand = ngram_profile(candidate);
  NGramProfile ref = ngram_profile(reference);
  for (const auto& gram : trivially_shared) {
    cand.counts.erase(gram);
    ref.counts.erase(gram);
  }
  auto mass = precision_masses(cand, ref, [](const NGram&) { return 1.0; });
  return bleu_from_masses(mass, candidate.length(), reference.length());
}

std::set<NGram> compute_trivially_shared(const std::vector<TokenSequence>& corpus, int k) {
  if (k <= 0) throw UsageError("compute_trivially_shared needs k > 0");
  if (corpus.empty()) throw ValidationError("compute_trivially_shared: empty corpus");
  std::map<NGram, long> totals;
  for (const auto& seq : corpus)
    for (const auto& [gram, count] : ngram_profile(seq).counts) totals[gram] += count;
  // order by count descending, then lexicographically ascending
  std::vector<std::pair<NGram, long>> ranked(totals.begin(), totals.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::set<NGram> out;
  for (size_t i = 0; i < ranked.size() && i < static_cast<size_t>(k); ++i)
    out.insert(ranked[i].first);
  return out;
}

HashedContextProvider::HashedContextProvider(int dim, uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim <= 0) throw UsageError("embedding dimension must be positive");
}

std::vector<std::vector<double>> HashedContextProvider::embed(
    const std::vector<std::string>& tokens) {
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string& prev = i > 0 ? tokens[i - 1] : std::string("^");
    const std::string& next = i + 1 < tokens.size() ? tokens[i + 1] : std::string("$");
    uint64_t h = fnv1a(tokens[i], seed_ ^ 0x9e3779b97f4a7c15ull);
    uint64_t hp = fnv1a(prev, seed_ ^ 0xc2b2ae3d27d4eb4full);
    uint64_t hn = fnv1a(next, seed_ ^ 0x165667b19e3779f9ull);
    std::mt19937_64 rng_tok(h), rng_prev(hp), rng_next(hn);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(dim_);
    double norm_sq = 0.0;
    for (int d = 0; d < dim_; ++d) {
      v[d] = gauss(rng_tok) + 0.35 * gauss(rng_prev) + 0.35 * gauss(rng_next);
      norm_sq += v[d] * v[d];
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
    out.push_back(std::move(v));
  }
  return out;
}

TableProvider::TableProvider(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InfraError("cannot open embedding table: " + path.string());
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> v;
    double x;
    while (ss >> x) v.push_back(x);
    if (v.empty())
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": embedding row has no values");
    if (dim_ == 0) dim_ = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != dim_)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": inconsistent embedding dimension");
    double norm_sq = 0.0;
    for (double y : v) norm_sq += y * y;
    if (norm_sq <= 0.0)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": zero embedding vector");
    double inv = 1.0 / std::sqrt(norm_sq);
    for (double& y : v) y *= inv;
    table_[token] = std::move(v);
  }
  if (table_.empty()) throw ValidationError(path.string() + ": empty embedding table");
  fallback_ = std::make_unique<HashedContextProvider>(dim_);
}

std::vector<std::vector<double>> TableProvider::embed(const std::vector<std::string>& tokens) {
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    auto it = table_.find(tokens[i]);
    if (it != table_.end()) {
      out.push_back(it->second);
    } else {
      std::vector<std::string> one{tokens[i]};
      out.push_back(fallback_->embed(one)[0]);
    }
  }
  return out;
}

Prf embed_prf(const TokenSequence& candidate, const TokenSequence& reference,
              EmbeddingProvider& provider, const std::map<std::string, double>* idf) {
  if (candidate.tokens.empty() || reference.tokens.empty())
    throw ValidationError("embed_prf needs non-empty token sequences");
  auto cand_vecs = provider.embed(candidate.tokens);
  auto ref_vecs = provider.embed(reference.tokens);
  auto weight = [&](const std::string& tok) {
    if (!idf) return 1.0;
    auto it = idf->find(tok);
    return it == idf->end() ? 1.0 : it->second;
  };
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  double recall_num = 0.0, recall_den = 0.0;
  for (size_t i = 0; i < ref_vecs.size(); ++i) {
    double best = -2.0;
    for (const auto& cv : cand_vecs) best = std::max(best, dot(ref_vecs[i], cv));
    double w = weight(reference.tokens[i]);
    recall_num += w * best;
    recall_den += w;
  }
  double prec_num = 0.0, prec_den = 0.0;
  for (size_t j = 0; j < cand_vecs.size(); ++j) {
    double best = -2.0;
    for (const auto& rv : ref_vecs) best = std::max(best, dot(cand_vecs[j], rv));
    double w = weight(candidate.tokens[j]);
    prec_num += w * best;
    prec_den += w;
  }
  Prf out;
  out.recall = recall_den > 0.0 ? recall_num / recall_den : 0.0;
  out.precision = prec_den > 0.0 ? prec_num / prec_den : 0.0;
  double pr = out.precision + out.recall;
  out.f1 = pr != 0.0 ? 2.0 * out.precision * out.recall / pr : 0.0;
  return out;
}

std::map<std::string, double> idf_table(const std::vector<TokenSequence>& references) {
  std::map<std::string, long> df;
  for (const auto& seq : references) {
    std::set<std::string> distinct(seq.tokens.begin(), seq.tokens.end());
    for (const auto& tok : distinct) ++df[tok];
  }
  std::map<std::string, double> idf;
  double n = static_cast<double>(references.size());
  for (const auto& [tok, count] : df)
    idf[tok] = std::log((n + 1.0) / (static_cast<double>(count) + 1.0));
  return idf;
}

void write_idf_table(const std::filesystem::path& path,
                     const std::map<std::string, double>& idf) {
  std::ofstream out(path);
  if (!out) throw InfraError("cannot write idf table: " + path.string());
  for (const auto& [tok, v] : idf) {
    nlohmann::ordered_json key = tok;  // JSON-escaped so spaces survive
    out << key.dump() << ' ' << format_double(v) << '\n';
  }
}

std::map<std::string, double> read_idf_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InfraError("cannot open idf table: " + path.string());
  std::map<std::string, double> idf;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    size_t split = line.rfind(' ');
    if (split == std::string::npos)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": malformed idf row");
    try {
      std::string tok = nlohmann::ordered_json::parse(line.substr(0, split)).get<std::string>();
      idf[tok] = parse_double(line.substr(split + 1));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": malformed idf row: " + e.what());
    }
  }
  return idf;
}

const std::set<std::string>& keyword_set(const std::string& language_tag) {
  require_python(language_tag);
  static const std::set<std::string> kws(lexer::python_keywords().begin(),
                                         lexer::python_keywords().end());
  return kws;
}

}  // namespace cseval::metrics
