#include "cseval/unice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "cseval/jsonl.hpp"
#include "cseval/metrics.hpp"

namespace cseval::unice {

namespace {
constexpr const char* kSpecials[4] = {"[CLS]", "[SEP]", "[UNK]", "[PAD]"};
constexpr double kProbClamp = 1e-15;
}  // namespace

int Vocabulary::encode(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? unk_id : it->second;
}

uint64_t Vocabulary::content_hash() const {
  uint64_t h = fnv1a("vocab-v1");
  h = fnv1a(std::to_string(cutoff), h);
  for (const auto& tok : id_to_token) {
    h = fnv1a(tok, h);
    h = fnv1a("\x1f", h);
  }
  return h;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& documents, int cutoff) {
  if (documents.empty()) throw ValidationError("build_vocab: empty corpus");
  if (cutoff < 1) throw ValidationError("build_vocab: cutoff must be >= 1");
  std::map<std::string, long> counts;
  for (const auto& doc : documents)
    for (const auto& tok : doc) ++counts[tok];
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab;
  vocab.cutoff = cutoff;
  for (const char* s : kSpecials) vocab.id_to_token.push_back(s);
  for (const auto& [tok, count] : ranked) {
    if (count < cutoff) continue;
    bool special = false;
    for (const char* s : kSpecials) special = special || tok == s;
    if (special) continue;
    vocab.id_to_token.push_back(tok);
  }
  for (size_t i = 0; i < vocab.id_to_token.size(); ++i)
    vocab.token_to_id[vocab.id_to_token[i]] = static_cast<int>(i);
  return vocab;
}

const char* to_string(InputFormat f) {
  switch (f) {
    case InputFormat::ref_only: return "ref_only";
    case InputFormat::nl_only: return "nl_only";
    case InputFormat::ref_and_nl: return "ref_and_nl";
  }
  return "ref_only";
}

InputFormat input_format_from_string(const std::string& s) {
  if (s == "ref_only") return InputFormat::ref_only;
  if (s == "nl_only") return InputFormat::nl_only;
  if (s == "ref_and_nl") return InputFormat::ref_and_nl;
  throw ValidationError("unknown input format: '" + s + "'");
}

UnifiedSequence assemble(const std::string& g, const std::optional<std::string>& r,
                         const std::optional<std::string>& n, const Vocabulary& vocab,
                         InputFormat format) {
  bool want_ref = format != InputFormat::nl_only;
  bool want_nl = format != InputFormat::ref_only;
  if (want_ref && !r)
    throw ValidationError(std::string("format ") + to_string(format) +
                          " needs a reference code");
  if (want_nl && !n)
    throw ValidationError(std::string("format ") + to_string(format) +
                          " needs an NL description");

  UnifiedSequence seq;
  seq.format = format;
  seq.ids.push_back(vocab.cls_id);
  seq.segments.push_back(SegmentTag::cls);
  auto push_segment = [&](const std::vector<std::string>& tokens, SegmentTag tag) {
    for (const auto& tok : tokens) {
      seq.ids.push_back(vocab.encode(tok));
      seq.segments.push_back(tag);
    }
    seq.ids.push_back(vocab.sep_id);
    seq.segments.push_back(SegmentTag::sep);
  };
  push_segment(metrics::tokenize_code(g, "python").tokens, SegmentTag::gen);
  if (want_ref) push_segment(metrics::tokenize_code(*r, "python").tokens, SegmentTag::ref);
  if (want_nl) push_segment(metrics::nl_tokens(*n), SegmentTag::nl);

  while (seq.ids.size() > kMaxSequenceLength) {
    size_t counts[kSegmentKinds] = {0, 0, 0, 0, 0};
    for (SegmentTag t : seq.segments) ++counts[static_cast<int>(t)];
    // longest of gen/ref/nl; ties go to the segment later in the layout
    SegmentTag victim = SegmentTag::gen;
    size_t best = counts[static_cast<int>(SegmentTag::gen)];
    for (SegmentTag t : {SegmentTag::ref, SegmentTag::nl}) {
      if (counts[static_cast<int>(t)] >= best && counts[static_cast<int>(t)] > 0) {
        best = counts[static_cast<int>(t)];
        victim = t;
      }
    }
    if (best == 0) break;  // nothing droppable beyond separators
    for (size_t i = seq.ids.size(); i-- > 0;) {
      if (seq.segments[i] == victim) {
        seq.ids.erase(seq.ids.begin() + static_cast<long>(i));
        seq.segments.erase(seq.segments.begin() + static_cast<long>(i));
        break;
      }
    }
  }
  return seq;
}

Vec PoolingWeights::layer_weights() const {
  Vec h(layer_logits.size());
  double mx = *std::max_element(layer_logits.begin(), layer_logits.end());
  double sum = 0.0;
  for (size_t i = 0; i < layer_logits.size(); ++i) {
    h[i] = std::exp(layer_logits[i] - mx);
    sum += h[i];
  }
  for (double& v : h) v /= sum;
  return h;
}

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw ValidationError("learning_rate must be positive");
  if (epochs <= 0) throw ValidationError("epochs must be positive");
  for (int d : head_dims)
    if (d <= 0) throw ValidationError("head dimensions must be positive");
  if (head_dims[2] != 2) throw ValidationError("final head dimension must be 2");
  if (vocab_cutoff < 1) throw ValidationError("vocab_cutoff must be >= 1");
  if (backbone.kind == BackboneConfig::Kind::built_in) {
    if (backbone.dim <= 0 || backbone.layers <= 0)
      throw ValidationError("backbone dim and layers must be positive");
  } else if (backbone.path.empty()) {
    throw ValidationError("file_backed backbone needs a path");
  }
}

std::string FileBackedEmbeddings::record_key(const std::string& key, InputFormat format) {
  return key + "\x1f" + to_string(format);
}

FileBackedEmbeddings FileBackedEmbeddings::load(const std::filesystem::path& path) {
  jsonl::File file = jsonl::read(path);
  FileBackedEmbeddings out;
  size_t line = 1;
  for (const auto& rec : file.records) {
    ++line;
    std::string where = path.string() + ":" + std::to_string(line);
    if (!rec.contains("key") || !rec.contains("format") || !rec.contains("layers"))
      throw ValidationError(where + ": embedding record needs key, format, layers");
    InputFormat fmt = input_format_from_string(rec.at("format").get<std::string>());
    const auto& layers = rec.at("layers");
    if (!layers.is_array() || layers.empty())
      throw ValidationError(where + ": layers must be a non-empty array");
    std::vector<std::vector<Vec>> parsed;
    for (const auto& layer : layers) {
      std::vector<Vec> tokens;
      for (const auto& tok : layer) tokens.push_back(tok.get<Vec>());
      if (tokens.empty()) throw ValidationError(where + ": empty token row");
      parsed.push_back(std::move(tokens));
    }
    int dim = static_cast<int>(parsed[0][0].size());
    int nlayers = static_cast<int>(parsed.size());
    for (const auto& layer : parsed) {
      if (layer.size() != parsed[0].size())
        throw ValidationError(where + ": layers disagree on token count");
      for (const auto& tok : layer)
        if (static_cast<int>(tok.size()) != dim)
          throw ValidationError(where + ": inconsistent embedding dimension");
    }
    if (out.dim == 0) {
      out.dim = dim;
      out.layers = nlayers;
    } else if (out.dim != dim || out.layers != nlayers) {
      throw ValidationError(where + ": record shape differs from earlier records");
    }
    out.records[record_key(rec.at("key").get<std::string>(), fmt)] = std::move(parsed);
  }
  if (out.records.empty()) throw ValidationError(path.string() + ": no embedding records");
  return out;
}

namespace {

int backbone_dim(const ModelCheckpoint& model) {
  return model.config.backbone.kind == BackboneConfig::Kind::built_in
             ? model.config.backbone.dim
             : model.file_embeddings->dim;
}

int backbone_layers(const ModelCheckpoint& model) {
  return model.config.backbone.kind == BackboneConfig::Kind::built_in
             ? model.config.backbone.layers
             : model.file_embeddings->layers;
}

// layer-0 rows for every position: embedding + segment vector, with the
// summary slot (position 0) also receiving the mean of the other rows
std::vector<Vec> layer0_rows(const UnifiedSequence& seq, const ModelCheckpoint& model) {
  const auto& emb = model.backbone.embedding;
  const auto& seg = model.backbone.segment;
  const int d = backbone_dim(model);
  const size_t T = seq.ids.size();
  std::vector<Vec> rows(T, Vec(static_cast<size_t>(d), 0.0));
  for (size_t t = 0; t < T; ++t) {
    int id = seq.ids[t];
    if (id < 0 || id >= static_cast<int>(emb.size()))
      throw ValidationError("token id out of range: " + std::to_string(id));
    const Vec& e = emb[static_cast<size_t>(id)];
    const Vec& s = seg[static_cast<size_t>(seq.segments[t])];
    for (int i = 0; i < d; ++i) rows[t][static_cast<size_t>(i)] = e[i] + s[i];
  }
  if (T > 1) {
    Vec acc(static_cast<size_t>(d), 0.0);
    for (size_t t = 1; t < T; ++t)
      for (int i = 0; i < d; ++i) acc[static_cast<size_t>(i)] += rows[t][static_cast<size_t>(i)];
    double inv = 1.0 / static_cast<double>(T - 1);
    for (int i = 0; i < d; ++i) rows[0][static_cast<size_t>(i)] += acc[static_cast<size_t>(i)] * inv;
  }
  return rows;
}

Vec affine_tanh(const Mat& w, const Vec& b, const Vec& x) {
  Vec out(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    double acc = b[i];
    const Vec& row = w[i];
    for (size_t j = 0; j < row.size(); ++j) acc += row[j] * x[j];
    out[i] = std::tanh(acc);
  }
  return out;
}

Vec affine(const Mat& w, const Vec& b, const Vec& x) {
  Vec out(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    double acc = b[i];
    const Vec& row = w[i];
    for (size_t j = 0; j < row.size(); ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
  return out;
}

double sigmoid_clamped(double x) {
  double v = 1.0 / (1.0 + std::exp(-x));
  return std::clamp(v, kProbClamp, 1.0 - kProbClamp);
}

// position-0 activations shared by predict, losses, and backprop
struct Forward0 {
  std::vector<Vec> layer0;   // all rows (needed for embedding gradients)
  std::vector<Vec> column;   // z[k] = layer k at position 0
  Vec h;                     // softmax layer weights
  Vec pooled;
  Vec u1, u2;
  std::array<double, 2> out{};
  double code_score = 0.0;
  double p_exec = 0.0;
};

Forward0 forward0(const UnifiedSequence& seq, const ModelCheckpoint& model) {
  Forward0 f;
  const int L = backbone_layers(model);
  f.column.resize(static_cast<size_t>(L));
  if (model.config.backbone.kind == BackboneConfig::Kind::built_in) {
    f.layer0 = layer0_rows(seq, model);
    f.column[0] = f.layer0[0];
    for (int k = 1; k < L; ++k)
      f.column[static_cast<size_t>(k)] =
          affine_tanh(model.backbone.w[static_cast<size_t>(k - 1)],
                      model.backbone.b[static_cast<size_t>(k - 1)],
                      f.column[static_cast<size_t>(k - 1)]);
  } else {
    const auto& records = model.file_embeddings->records;
    auto it = records.find(FileBackedEmbeddings::record_key(seq.key, seq.format));
    if (it == records.end())
      throw ValidationError("no file-backed embeddings for key '" + seq.key + "' format " +
                            to_string(seq.format));
    for (int k = 0; k < L; ++k) f.column[static_cast<size_t>(k)] = it->second[static_cast<size_t>(k)][0];
  }

  f.h = model.pooling.layer_weights();
  if (f.h.size() != static_cast<size_t>(L))
    throw ValidationError("pooling weights cover " + std::to_string(f.h.size()) +
                          " layers, backbone has " + std::to_string(L));
  const int d = backbone_dim(model);
  f.pooled.assign(static_cast<size_t>(d), 0.0);
  for (int k = 0; k < L; ++k)
    for (int i = 0; i < d; ++i)
      f.pooled[static_cast<size_t>(i)] +=
          f.h[static_cast<size_t>(k)] * f.column[static_cast<size_t>(k)][static_cast<size_t>(i)];
  for (int i = 0; i < d; ++i) f.pooled[static_cast<size_t>(i)] *= model.pooling.gamma;

  f.u1 = affine_tanh(model.head.w1, model.head.b1, f.pooled);
  f.u2 = affine_tanh(model.head.w2, model.head.b2, f.u1);
  Vec o = affine(model.head.w3, model.head.b3, f.u2);
  f.out = {o[0], o[1]};
  f.code_score = sigmoid_clamped(o[0]);
  f.p_exec = sigmoid_clamped(o[1]);
  return f;
}

std::vector<InputFormat> available_formats(bool has_ref, bool has_nl) {
  std::vector<InputFormat> fmts;
  if (has_ref) fmts.push_back(InputFormat::ref_only);
  if (has_nl) fmts.push_back(InputFormat::nl_only);
  if (has_ref && has_nl) fmts.push_back(InputFormat::ref_and_nl);
  return fmts;
}

}  // namespace

BackboneOutput backbone_forward(const UnifiedSequence& seq, const ModelCheckpoint& model) {
  BackboneOutput out;
  const int L = backbone_layers(model);
  if (model.config.backbone.kind == BackboneConfig::Kind::file_backed) {
    auto it = model.file_embeddings->records.find(
        FileBackedEmbeddings::record_key(seq.key, seq.format));
    if (it == model.file_embeddings->records.end())
      throw ValidationError("no file-backed embeddings for key '" + seq.key + "' format " +
                            to_string(seq.format));
    out.per_layer = it->second;
    return out;
  }
  out.per_layer.resize(static_cast<size_t>(L));
  out.per_layer[0] = layer0_rows(seq, model);
  const size_t T = seq.ids.size();
  for (int k = 1; k < L; ++k) {
    out.per_layer[static_cast<size_t>(k)].resize(T);
    for (size_t t = 0; t < T; ++t)
      out.per_layer[static_cast<size_t>(k)][t] =
          affine_tanh(model.backbone.w[static_cast<size_t>(k - 1)],
                      model.backbone.b[static_cast<size_t>(k - 1)],
                      out.per_layer[static_cast<size_t>(k - 1)][t]);
  }
  return out;
}

std::vector<Vec> pool_layers(const BackboneOutput& out, const PoolingWeights& pw) {
  if (out.per_layer.empty()) throw ValidationError("pool_layers: no layers");
  if (out.per_layer.size() != pw.layer_logits.size())
    throw ValidationError("pool_layers: layer count mismatch: " +
                          std::to_string(out.per_layer.size()) + " vs " +
                          std::to_string(pw.layer_logits.size()));
  const size_t T = out.per_layer[0].size();
  for (const auto& layer : out.per_layer)
    if (layer.size() != T) throw ValidationError("pool_layers: ragged token counts");
  Vec h = pw.layer_weights();
  const size_t d = out.per_layer[0][0].size();
  std::vector<Vec> pooled(T, Vec(d, 0.0));
  for (size_t t = 0; t < T; ++t) {
    for (size_t k = 0; k < out.per_layer.size(); ++k) {
      const Vec& src = out.per_layer[k][t];
      if (src.size() != d) throw ValidationError("pool_layers: ragged dimensions");
      for (size_t i = 0; i < d; ++i) pooled[t][i] += h[k] * src[i];
    }
    for (size_t i = 0; i < d; ++i) pooled[t][i] *= pw.gamma;
  }
  return pooled;
}

Prediction predict(const UnifiedSequence& seq, const ModelCheckpoint& model) {
  Forward0 f = forward0(seq, model);
  Prediction p;
  p.code_score = f.code_score;
  p.p_exec = f.p_exec;
  p.exec = f.p_exec >= 0.5 ? 1 : 0;
  return p;
}

double loss_c(double code_score, double pass_ratio) {
  double d = code_score - pass_ratio;
  return d * d;
}

double loss_e(double p_exec, int executability) {
  if (!(p_exec > 0.0 && p_exec < 1.0))
    throw ValidationError("loss_e needs p_exec strictly inside (0,1)");
  return executability == 1 ? -std::log(p_exec) : -std::log(1.0 - p_exec);
}

UnifiedLoss unified_loss(const std::string& g, const std::optional<std::string>& r,
                         const std::optional<std::string>& n, const Labels& labels,
                         const ModelCheckpoint& model, const std::string& key) {
  auto fmts = available_formats(r.has_value(), n.has_value());
  if (fmts.empty())
    throw ValidationError("unified_loss needs at least one of r and n");
  UnifiedLoss out;
  for (InputFormat fmt : fmts) {
    UnifiedSequence seq = assemble(g, r, n, model.vocab, fmt);
    seq.key = key;
    Forward0 f = forward0(seq, model);
    double value = loss_c(f.code_score, labels.pass_ratio) +
                   loss_e(f.p_exec, labels.executability);
    out.per_format.push_back({fmt, value});
    out.total += value;
  }
  return out;
}

// ---- parameter flattening, gradients, training ----

namespace {

void push_mat(std::vector<ParamRef>& refs, Mat& m, const std::string& group) {
  for (auto& row : m)
    for (double& v : row) refs.push_back({&v, group});
}

void push_vec(std::vector<ParamRef>& refs, Vec& v, const std::string& group) {
  for (double& x : v) refs.push_back({&x, group});
}

struct Grads {
  Mat embedding;
  Mat segment;
  std::vector<Mat> w;
  std::vector<Vec> b;
  double gamma = 0.0;
  Vec layer_logits;
  Mat hw1; Vec hb1;
  Mat hw2; Vec hb2;
  Mat hw3; Vec hb3;

  static Grads zeros_like(const ModelCheckpoint& m) {
    Grads g;
    auto zero_mat = [](const Mat& src) {
      return Mat(src.size(), Vec(src.empty() ? 0 : src[0].size(), 0.0));
    };
    if (m.config.backbone.kind == BackboneConfig::Kind::built_in) {
      g.embedding = zero_mat(m.backbone.embedding);
      g.segment = zero_mat(m.backbone.segment);
      for (const auto& w : m.backbone.w) g.w.push_back(zero_mat(w));
      for (const auto& b : m.backbone.b) g.b.push_back(Vec(b.size(), 0.0));
    }
    g.layer_logits.assign(m.pooling.layer_logits.size(), 0.0);
    g.hw1 = zero_mat(m.head.w1);
    g.hb1.assign(m.head.b1.size(), 0.0);
    g.hw2 = zero_mat(m.head.w2);
    g.hb2.assign(m.head.b2.size(), 0.0);
    g.hw3 = zero_mat(m.head.w3);
    g.hb3.assign(m.head.b3.size(), 0.0);
    return g;
  }

  std::vector<double> flatten(const ModelCheckpoint& m) const {
    std::vector<double> out;
    auto add_mat = [&](const Mat& mat) {
      for (const auto& row : mat) out.insert(out.end(), row.begin(), row.end());
    };
    auto add_vec = [&](const Vec& v) { out.insert(out.end(), v.begin(), v.end()); };
    if (m.config.backbone.kind == BackboneConfig::Kind::built_in) {
      add_mat(embedding);
      add_mat(segment);
      for (const auto& w : this->w) add_mat(w);
      for (const auto& b : this->b) add_vec(b);
    }
    out.push_back(gamma);
    add_vec(layer_logits);
    add_mat(hw1);
    add_vec(hb1);
    add_mat(hw2);
    add_vec(hb2);
    add_mat(hw3);
    add_vec(hb3);
    return out;
  }
};

// accumulates d(loss)/d(params) for one example-format into g
void backward0(const UnifiedSequence& seq, const ModelCheckpoint& model, const Labels& labels,
               const Forward0& f, Grads& g, double scale) {
  const int L = backbone_layers(model);
  const int d = backbone_dim(model);

  double dout0 = scale * 2.0 * (f.code_score - labels.pass_ratio) * f.code_score *
                 (1.0 - f.code_score);
  double dout1 = scale * (f.p_exec - static_cast<double>(labels.executability));

  // head backward
  Vec du2(f.u2.size(), 0.0);
  for (size_t j = 0; j < f.u2.size(); ++j)
    du2[j] = model.head.w3[0][j] * dout0 + model.head.w3[1][j] * dout1;
  for (size_t j = 0; j < f.u2.size(); ++j) {
    g.hw3[0][j] += dout0 * f.u2[j];
    g.hw3[1][j] += dout1 * f.u2[j];
  }
  g.hb3[0] += dout0;
  g.hb3[1] += dout1;

  Vec da2(f.u2.size());
  for (size_t i = 0; i < f.u2.size(); ++i) da2[i] = du2[i] * (1.0 - f.u2[i] * f.u2[i]);
  Vec du1(f.u1.size(), 0.0);
  for (size_t i = 0; i < da2.size(); ++i) {
    for (size_t j = 0; j < f.u1.size(); ++j) {
      g.hw2[i][j] += da2[i] * f.u1[j];
      du1[j] += model.head.w2[i][j] * da2[i];
    }
    g.hb2[i] += da2[i];
  }

  Vec da1(f.u1.size());
  for (size_t i = 0; i < f.u1.size(); ++i) da1[i] = du1[i] * (1.0 - f.u1[i] * f.u1[i]);
  Vec dpooled(static_cast<size_t>(d), 0.0);
  for (size_t i = 0; i < da1.size(); ++i) {
    for (size_t j = 0; j < dpooled.size(); ++j) {
      g.hw1[i][j] += da1[i] * f.pooled[j];
      dpooled[j] += model.head.w1[i][j] * da1[i];
    }
    g.hb1[i] += da1[i];
  }

  // pooling backward
  Vec weighted_sum(static_cast<size_t>(d), 0.0);
  for (int k = 0; k < L; ++k)
    for (int i = 0; i < d; ++i)
      weighted_sum[static_cast<size_t>(i)] +=
          f.h[static_cast<size_t>(k)] * f.column[static_cast<size_t>(k)][static_cast<size_t>(i)];
  double dgamma = 0.0;
  for (int i = 0; i < d; ++i) dgamma += dpooled[static_cast<size_t>(i)] * weighted_sum[static_cast<size_t>(i)];
  g.gamma += dgamma;

  Vec dh(static_cast<size_t>(L), 0.0);
  std::vector<Vec> dcol(static_cast<size_t>(L), Vec(static_cast<size_t>(d), 0.0));
  for (int k = 0; k < L; ++k) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      acc += dpooled[static_cast<size_t>(i)] * f.column[static_cast<size_t>(k)][static_cast<size_t>(i)];
      dcol[static_cast<size_t>(k)][static_cast<size_t>(i)] +=
          model.pooling.gamma * f.h[static_cast<size_t>(k)] * dpooled[static_cast<size_t>(i)];
    }
    dh[static_cast<size_t>(k)] = model.pooling.gamma * acc;
  }
  double hdot = 0.0;
  for (int k = 0; k < L; ++k) hdot += dh[static_cast<size_t>(k)] * f.h[static_cast<size_t>(k)];
  for (int k = 0; k < L; ++k)
    g.layer_logits[static_cast<size_t>(k)] +=
        f.h[static_cast<size_t>(k)] * (dh[static_cast<size_t>(k)] - hdot);

  if (model.config.backbone.kind != BackboneConfig::Kind::built_in) return;

  // backbone backward along the position-0 column
  for (int k = L - 1; k >= 1; --k) {
    const Vec& zk = f.column[static_cast<size_t>(k)];
    const Vec& zprev = f.column[static_cast<size_t>(k - 1)];
    Mat& gw = g.w[static_cast<size_t>(k - 1)];
    Vec& gb = g.b[static_cast<size_t>(k - 1)];
    const Mat& w = model.backbone.w[static_cast<size_t>(k - 1)];
    Vec da(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i)
      da[static_cast<size_t>(i)] =
          dcol[static_cast<size_t>(k)][static_cast<size_t>(i)] *
          (1.0 - zk[static_cast<size_t>(i)] * zk[static_cast<size_t>(i)]);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        gw[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
            da[static_cast<size_t>(i)] * zprev[static_cast<size_t>(j)];
        dcol[static_cast<size_t>(k - 1)][static_cast<size_t>(j)] +=
            w[static_cast<size_t>(i)][static_cast<size_t>(j)] * da[static_cast<size_t>(i)];
      }
      gb[static_cast<size_t>(i)] += da[static_cast<size_t>(i)];
    }
  }

  // layer 0: position 0 row is cls + segment + mean of the other rows
  const Vec& g0 = dcol[0];
  const size_t T = seq.ids.size();
  for (int i = 0; i < d; ++i) {
    g.embedding[static_cast<size_t>(seq.ids[0])][static_cast<size_t>(i)] += g0[static_cast<size_t>(i)];
    g.segment[static_cast<size_t>(seq.segments[0])][static_cast<size_t>(i)] += g0[static_cast<size_t>(i)];
  }
  if (T > 1) {
    double inv = 1.0 / static_cast<double>(T - 1);
    for (size_t t = 1; t < T; ++t) {
      for (int i = 0; i < d; ++i) {
        g.embedding[static_cast<size_t>(seq.ids[t])][static_cast<size_t>(i)] +=
            g0[static_cast<size_t>(i)] * inv;
        g.segment[static_cast<size_t>(seq.segments[t])][static_cast<size_t>(i)] +=
            g0[static_cast<size_t>(i)] * inv;
      }
    }
  }
}

double example_loss_and_grad(const TrainExample& ex, const ModelCheckpoint& model, Grads* grads,
                             double scale) {
  auto fmts = available_formats(ex.r.has_value(), ex.n.has_value());
  if (fmts.empty())
    throw ValidationError("training example needs at least one of r and n");
  double total = 0.0;
  for (InputFormat fmt : fmts) {
    UnifiedSequence seq = assemble(ex.g, ex.r, ex.n, model.vocab, fmt);
    seq.key = ex.key;
    Forward0 f = forward0(seq, model);
    total += loss_c(f.code_score, ex.labels.pass_ratio) +
             loss_e(f.p_exec, ex.labels.executability);
    if (grads) backward0(seq, model, ex.labels, f, *grads, scale);
  }
  return total;
}

}  // namespace

std::vector<ParamRef> parameter_refs(ModelCheckpoint& model) {
  std::vector<ParamRef> refs;
  if (model.config.backbone.kind == BackboneConfig::Kind::built_in) {
    push_mat(refs, model.backbone.embedding, "embedding");
    push_mat(refs, model.backbone.segment, "segment");
    for (size_t k = 0; k < model.backbone.w.size(); ++k)
      push_mat(refs, model.backbone.w[k], "backbone_w" + std::to_string(k));
    for (size_t k = 0; k < model.backbone.b.size(); ++k)
      push_vec(refs, model.backbone.b[k], "backbone_b" + std::to_string(k));
  }
  refs.push_back({&model.pooling.gamma, "gamma"});
  push_vec(refs, model.pooling.layer_logits, "layer_logits");
  push_mat(refs, model.head.w1, "head_w1");
  push_vec(refs, model.head.b1, "head_b1");
  push_mat(refs, model.head.w2, "head_w2");
  push_vec(refs, model.head.b2, "head_b2");
  push_mat(refs, model.head.w3, "head_w3");
  push_vec(refs, model.head.b3, "head_b3");
  return refs;
}

double batch_loss(const std::vector<TrainExample>& batch, const ModelCheckpoint& model) {
  if (batch.empty()) throw ValidationError("batch_loss: empty batch");
  double total = 0.0;
  for (const auto& ex : batch) total += example_loss_and_grad(ex, model, nullptr, 1.0);
  return total / static_cast<double>(batch.size());
}

std::vector<double> batch_gradient(const std::vector<TrainExample>& batch,
                                   const ModelCheckpoint& model) {
  if (batch.empty()) throw ValidationError("batch_gradient: empty batch");
  Grads grads = Grads::zeros_like(model);
  double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) example_loss_and_grad(ex, model, &grads, scale);
  return grads.flatten(model);
}

ModelCheckpoint init_model(const TrainConfig& config, const Vocabulary& vocab) {
  config.validate();
  ModelCheckpoint model;
  model.config = config;
  model.vocab = vocab;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> small(-0.1, 0.1);

  int layers;
  int dim;
  if (config.backbone.kind == BackboneConfig::Kind::built_in) {
    layers = config.backbone.layers;
    dim = config.backbone.dim;
    model.backbone.embedding.assign(static_cast<size_t>(vocab.size()),
                                    Vec(static_cast<size_t>(dim)));
    for (auto& row : model.backbone.embedding)
      for (double& v : row) v = small(rng);
    model.backbone.segment.assign(kSegmentKinds, Vec(static_cast<size_t>(dim)));
    for (auto& row : model.backbone.segment)
      for (double& v : row) v = small(rng);
    double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    std::uniform_real_distribution<double> fan(-scale, scale);
    for (int k = 1; k < layers; ++k) {
      Mat w(static_cast<size_t>(dim), Vec(static_cast<size_t>(dim)));
      for (auto& row : w)
        for (double& v : row) v = fan(rng);
      model.backbone.w.push_back(std::move(w));
      model.backbone.b.push_back(Vec(static_cast<size_t>(dim), 0.0));
    }
  } else {
    auto loaded = FileBackedEmbeddings::load(config.backbone.path);
    layers = loaded.layers;
    dim = loaded.dim;
    model.file_embeddings = std::make_shared<FileBackedEmbeddings>(std::move(loaded));
    model.config.backbone.dim = dim;
    model.config.backbone.layers = layers;
  }

  model.pooling.gamma = 1.0;
  model.pooling.layer_logits.assign(static_cast<size_t>(layers), 0.0);

  auto init_affine = [&](Mat& w, Vec& b, int rows, int cols) {
    double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> fan(-scale, scale);
    w.assign(static_cast<size_t>(rows), Vec(static_cast<size_t>(cols)));
    for (auto& row : w)
      for (double& v : row) v = fan(rng);
    b.assign(static_cast<size_t>(rows), 0.0);
  };
  init_affine(model.head.w1, model.head.b1, config.head_dims[0], dim);
  init_affine(model.head.w2, model.head.b2, config.head_dims[1], config.head_dims[0]);
  init_affine(model.head.w3, model.head.b3, 2, config.head_dims[1]);
  return model;
}

TrainResult train(const std::vector<TrainExample>& examples, const TrainConfig& config) {
  config.validate();
  if (examples.empty()) throw ValidationError("train: empty corpus");
  for (const auto& ex : examples) {
    if (ex.labels.pass_ratio < 0.0 || ex.labels.pass_ratio > 1.0)
      throw ValidationError("train: pass_ratio outside [0,1]");
    if (ex.labels.executability != 0 && ex.labels.executability != 1)
      throw ValidationError("train: executability must be 0 or 1");
  }

  Vocabulary vocab;
  {
    std::vector<std::vector<std::string>> docs;
    for (const auto& ex : examples) {
      docs.push_back(metrics::tokenize_code(ex.g, "python").tokens);
      if (ex.r) docs.push_back(metrics::tokenize_code(*ex.r, "python").tokens);
      if (ex.n) docs.push_back(metrics::nl_tokens(*ex.n));
    }
    vocab = build_vocab(docs, config.vocab_cutoff);
  }

  TrainResult result;
  result.checkpoint = init_model(config, vocab);
  ModelCheckpoint& model = result.checkpoint;

  auto refs = parameter_refs(model);
  std::vector<double> m(refs.size(), 0.0), v(refs.size(), 0.0);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  std::mt19937_64 shuffle_rng(config.seed ^ 0x517cc1b727220a95ull);
  std::vector<size_t> order(examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (size_t idx : order) {
      Grads grads = Grads::zeros_like(model);
      double loss = example_loss_and_grad(examples[idx], model, &grads, 1.0);
      if (!std::isfinite(loss))
        throw InfraError("train: non-finite loss at epoch " + std::to_string(epoch) +
                         ", example " + std::to_string(idx));
      epoch_loss += loss;
      std::vector<double> flat = grads.flatten(model);
      ++step;
      double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (size_t i = 0; i < refs.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * flat[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * flat[i] * flat[i];
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        *refs[i].value -= config.learning_rate * mhat / (std::sqrt(vhat) + eps);
      }
    }
    result.log.push_back({epoch, epoch_loss / static_cast<double>(examples.size())});
  }
  return result;
}

// ---- checkpoint persistence ----

namespace {

void write_tensor(std::ostream& out, const std::string& name, const Mat& m) {
  out << "tensor " << name << ' ' << m.size() << ' ' << (m.empty() ? 0 : m[0].size()) << '\n';
  for (const auto& row : m) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ' ';
      out << format_double(row[i]);
    }
    out << '\n';
  }
}

void write_vector(std::ostream& out, const std::string& name, const Vec& v) {
  out << "vector " << name << ' ' << v.size() << '\n';
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out << ' ';
    out << format_double(v[i]);
  }
  out << '\n';
}

struct CheckpointReader {
  std::istringstream in;
  std::string path;
  size_t lineno = 0;

  explicit CheckpointReader(std::string text, std::string p)
      : in(std::move(text)), path(std::move(p)) {}

  [[noreturn]] void fail(const std::string& msg) {
    throw ValidationError(path + ":" + std::to_string(lineno) + ": " + msg);
  }

  std::string next_line() {
    std::string line;
    if (!std::getline(in, line)) fail("checkpoint truncated");
    ++lineno;
    return line;
  }

  std::vector<std::string> next_fields(const std::string& expect_head) {
    std::istringstream ls(next_line());
    std::vector<std::string> fields;
    std::string f;
    while (ls >> f) fields.push_back(f);
    if (fields.empty() || fields[0] != expect_head)
      fail("expected '" + expect_head + "' record");
    return fields;
  }

  Mat read_tensor(const std::string& name) {
    auto fields = next_fields("tensor");
    if (fields.size() != 4 || fields[1] != name) fail("expected tensor " + name);
    size_t rows = std::stoul(fields[2]), cols = std::stoul(fields[3]);
    Mat m(rows, Vec(cols));
    for (size_t r = 0; r < rows; ++r) {
      std::istringstream ls(next_line());
      std::string tok;
      for (size_t c = 0; c < cols; ++c) {
        if (!(ls >> tok)) fail("tensor " + name + " row too short");
        m[r][c] = parse_double(tok);
      }
    }
    return m;
  }

  Vec read_vector(const std::string& name) {
    auto fields = next_fields("vector");
    if (fields.size() != 3 || fields[1] != name) fail("expected vector " + name);
    size_t n = std::stoul(fields[2]);
    Vec v(n);
    std::istringstream ls(next_line());
    std::string tok;
    for (size_t i = 0; i < n; ++i) {
      if (!(ls >> tok)) fail("vector " + name + " too short");
      v[i] = parse_double(tok);
    }
    return v;
  }
};

}  // namespace

void save_checkpoint(const ModelCheckpoint& model, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "cseval-checkpoint " << ModelCheckpoint::kFormatVersion << '\n';
  const TrainConfig& c = model.config;
  out << "config learning_rate=" << format_double(c.learning_rate) << " epochs=" << c.epochs
      << " seed=" << c.seed << " head_dims=" << c.head_dims[0] << ',' << c.head_dims[1] << ','
      << c.head_dims[2] << " vocab_cutoff=" << c.vocab_cutoff << '\n';
  out << "backbone "
      << (c.backbone.kind == BackboneConfig::Kind::built_in ? "built_in" : "file_backed") << ' '
      << c.backbone.dim << ' ' << c.backbone.layers << ' '
      << nlohmann::ordered_json(c.backbone.path).dump() << '\n';
  out << "vocab " << model.vocab.size() << ' ' << model.vocab.cutoff << '\n';
  for (int i = 0; i < model.vocab.size(); ++i)
    out << i << ' ' << nlohmann::ordered_json(model.vocab.id_to_token[static_cast<size_t>(i)]).dump()
        << '\n';
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(model.vocab.content_hash()));
  out << "vocab_hash " << hash_hex << '\n';
  if (c.backbone.kind == BackboneConfig::Kind::built_in) {
    write_tensor(out, "embedding", model.backbone.embedding);
    write_tensor(out, "segment", model.backbone.segment);
    for (size_t k = 0; k < model.backbone.w.size(); ++k) {
      write_tensor(out, "w" + std::to_string(k), model.backbone.w[k]);
      write_vector(out, "b" + std::to_string(k), model.backbone.b[k]);
    }
  }
  out << "scalar gamma " << format_double(model.pooling.gamma) << '\n';
  write_vector(out, "layer_logits", model.pooling.layer_logits);
  write_tensor(out, "head_w1", model.head.w1);
  write_vector(out, "head_b1", model.head.b1);
  write_tensor(out, "head_w2", model.head.w2);
  write_vector(out, "head_b2", model.head.b2);
  write_tensor(out, "head_w3", model.head.w3);
  write_vector(out, "head_b3", model.head.b3);
  out << "end\n";
  jsonl::write_text_file_atomic(path, out.str());
}

namespace {
ModelCheckpoint load_checkpoint_impl(const std::filesystem::path& path);
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return load_checkpoint_impl(path);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(path.string() + ": malformed checkpoint: " + e.what());
  } catch (const std::out_of_range& e) {
    throw ValidationError(path.string() + ": malformed checkpoint: " + e.what());
  }
}

namespace {

ModelCheckpoint load_checkpoint_impl(const std::filesystem::path& path) {
  CheckpointReader reader(jsonl::read_text_file(path), path.string());
  {
    auto fields = reader.next_fields("cseval-checkpoint");
    if (fields.size() != 2) reader.fail("malformed header");
    int version = std::stoi(fields[1]);
    if (version != ModelCheckpoint::kFormatVersion)
      throw ValidationError(path.string() + ": unsupported checkpoint version " +
                            std::to_string(version) + " (expected " +
                            std::to_string(ModelCheckpoint::kFormatVersion) + ")");
  }
  ModelCheckpoint model;
  TrainConfig& c = model.config;
  {
    auto fields = reader.next_fields("config");
    for (size_t i = 1; i < fields.size(); ++i) {
      const std::string& kv = fields[i];
      size_t eq = kv.find('=');
      if (eq == std::string::npos) reader.fail("malformed config entry: " + kv);
      std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      if (key == "learning_rate") c.learning_rate = parse_double(val);
      else if (key == "epochs") c.epochs = std::stoi(val);
      else if (key == "seed") c.seed = std::stoull(val);
      else if (key == "vocab_cutoff") c.vocab_cutoff = std::stoi(val);
      else if (key == "head_dims") {
        if (std::sscanf(val.c_str(), "%d,%d,%d", &c.head_dims[0], &c.head_dims[1],
                        &c.head_dims[2]) != 3)
          reader.fail("malformed head_dims");
      } else {
        reader.fail("unknown config key: " + key);
      }
    }
  }
  {
    auto fields = reader.next_fields("backbone");
    if (fields.size() < 4) reader.fail("malformed backbone record");
    if (fields[1] == "built_in") c.backbone.kind = BackboneConfig::Kind::built_in;
    else if (fields[1] == "file_backed") c.backbone.kind = BackboneConfig::Kind::file_backed;
    else reader.fail("unknown backbone kind: " + fields[1]);
    c.backbone.dim = std::stoi(fields[2]);
    c.backbone.layers = std::stoi(fields[3]);
    std::string joined;
    for (size_t i = 4; i < fields.size(); ++i) {
      if (i > 4) joined += ' ';
      joined += fields[i];
    }
    if (!joined.empty())
      c.backbone.path = nlohmann::ordered_json::parse(joined).get<std::string>();
  }
  {
    auto fields = reader.next_fields("vocab");
    if (fields.size() != 3) reader.fail("malformed vocab record");
    int size = std::stoi(fields[1]);
    model.vocab.cutoff = std::stoi(fields[2]);
    model.vocab.id_to_token.resize(static_cast<size_t>(size));
    for (int i = 0; i < size; ++i) {
      std::string line = reader.next_line();
      size_t sp = line.find(' ');
      if (sp == std::string::npos) reader.fail("malformed vocab row");
      int id = std::stoi(line.substr(0, sp));
      if (id != i) reader.fail("vocab rows out of order");
      try {
        model.vocab.id_to_token[static_cast<size_t>(i)] =
            nlohmann::ordered_json::parse(line.substr(sp + 1)).get<std::string>();
      } catch (const nlohmann::json::exception&) {
        reader.fail("malformed vocab token");
      }
    }
    for (size_t i = 0; i < model.vocab.id_to_token.size(); ++i)
      model.vocab.token_to_id[model.vocab.id_to_token[i]] = static_cast<int>(i);
    auto hash_fields = reader.next_fields("vocab_hash");
    if (hash_fields.size() != 2) reader.fail("malformed vocab_hash");
    char expect[32];
    std::snprintf(expect, sizeof(expect), "%016llx",
                  static_cast<unsigned long long>(model.vocab.content_hash()));
    if (hash_fields[1] != expect)
      throw ValidationError(path.string() + ": vocabulary hash mismatch (expected " + expect +
                            ", file has " + hash_fields[1] + ")");
  }
  if (c.backbone.kind == BackboneConfig::Kind::built_in) {
    model.backbone.embedding = reader.read_tensor("embedding");
    model.backbone.segment = reader.read_tensor("segment");
    for (int k = 0; k + 1 < c.backbone.layers; ++k) {
      model.backbone.w.push_back(reader.read_tensor("w" + std::to_string(k)));
      model.backbone.b.push_back(reader.read_vector("b" + std::to_string(k)));
    }
    if (static_cast<int>(model.backbone.embedding.size()) != model.vocab.size())
      throw ValidationError(path.string() + ": embedding rows disagree with vocabulary size");
  } else {
    model.file_embeddings =
        std::make_shared<FileBackedEmbeddings>(FileBackedEmbeddings::load(c.backbone.path));
    if (model.file_embeddings->dim != c.backbone.dim ||
        model.file_embeddings->layers != c.backbone.layers)
      throw ValidationError(path.string() + ": embedding file shape changed since save");
  }
  {
    auto fields = reader.next_fields("scalar");
    if (fields.size() != 3 || fields[1] != "gamma") reader.fail("expected scalar gamma");
    model.pooling.gamma = parse_double(fields[2]);
  }
  model.pooling.layer_logits = reader.read_vector("layer_logits");
  model.head.w1 = reader.read_tensor("head_w1");
  model.head.b1 = reader.read_vector("head_b1");
  model.head.w2 = reader.read_tensor("head_w2");
  model.head.b2 = reader.read_vector("head_b2");
  model.head.w3 = reader.read_tensor("head_w3");
  model.head.b3 = reader.read_vector("head_b3");
  {
    auto fields = reader.next_fields("end");
    (void)fields;
  }
  c.validate();
  if (model.pooling.layer_logits.size() != static_cast<size_t>(c.backbone.layers))
    throw ValidationError(path.string() + ": pooling logits disagree with layer count");
  return model;
}

}  // namespace

}  // namespace cseval::unice
