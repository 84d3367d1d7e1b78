#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cseval/common.hpp"

namespace cseval::unice {

struct Vocabulary {
  std::vector<std::string> id_to_token;    // specials occupy ids 0..3
  std::map<std::string, int> token_to_id;
  int cls_id = 0;
  int sep_id = 1;
  int unk_id = 2;
  int pad_id = 3;
  int cutoff = 1;

  int size() const { return static_cast<int>(id_to_token.size()); }
  int encode(const std::string& token) const;
  uint64_t content_hash() const;
};

// Tokens below the frequency cutoff map to UNK. Deterministic: tokens are
// ordered by descending count, then lexicographically.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& documents, int cutoff);

enum class InputFormat { ref_only, nl_only, ref_and_nl };
const char* to_string(InputFormat f);
InputFormat input_format_from_string(const std::string& s);

enum class SegmentTag : int { cls = 0, gen = 1, ref = 2, nl = 3, sep = 4 };
inline constexpr int kSegmentKinds = 5;
inline constexpr size_t kMaxSequenceLength = 1024;

struct UnifiedSequence {
  InputFormat format = InputFormat::ref_only;
  std::vector<int> ids;                 // starts with CLS
  std::vector<SegmentTag> segments;     // parallel to ids
  std::string key;                      // provenance for file-backed embeddings
};

// Layout: CLS g SEP [r SEP] [n SEP] per the format. Over-length sequences
// drop tokens from the tail of the longest remaining segment first (ties go
// to the later segment) until the 1024 cap holds.
UnifiedSequence assemble(const std::string& g, const std::optional<std::string>& r,
                         const std::optional<std::string>& n, const Vocabulary& vocab,
                         InputFormat format);

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

struct BackboneOutput {
  std::vector<std::vector<Vec>> per_layer;  // [layer][token][dim]
};

struct PoolingWeights {
  double gamma = 1.0;
  Vec layer_logits;
  Vec layer_weights() const;  // softmax of the logits
};

struct HeadWeights {
  Mat w1; Vec b1;
  Mat w2; Vec b2;
  Mat w3; Vec b3;  // final width 2
};

struct Prediction {
  double code_score = 0.0;  // in [0,1]
  double p_exec = 0.5;      // in (0,1)
  int exec = 0;             // 1 iff p_exec >= 0.5
};

struct BackboneConfig {
  enum class Kind { built_in, file_backed };
  Kind kind = Kind::built_in;
  int dim = 64;
  int layers = 3;     // total layers including the embedding layer
  std::string path;   // file_backed record file
};

struct TrainConfig {
  double learning_rate = 0.001;
  int epochs = 5;
  uint64_t seed = 1;
  std::array<int, 3> head_dims{64, 32, 2};
  int vocab_cutoff = 1;
  BackboneConfig backbone;
  void validate() const;
};

struct BuiltInBackbone {
  Mat embedding;       // vocab x dim
  Mat segment;         // kSegmentKinds x dim
  std::vector<Mat> w;  // layers-1 affine maps, dim x dim
  std::vector<Vec> b;
};

// Precomputed per-layer token embeddings keyed by (provenance key, format).
struct FileBackedEmbeddings {
  int dim = 0;
  int layers = 0;
  std::map<std::string, std::vector<std::vector<Vec>>> records;

  static std::string record_key(const std::string& key, InputFormat format);
  static FileBackedEmbeddings load(const std::filesystem::path& path);
};

struct ModelCheckpoint {
  static constexpr int kFormatVersion = 1;
  TrainConfig config;
  Vocabulary vocab;
  BuiltInBackbone backbone;  // populated for built_in backbones
  std::shared_ptr<const FileBackedEmbeddings> file_embeddings;
  PoolingWeights pooling;
  HeadWeights head;
};

// Built-in backbone: layer 0 is the embedding-table row plus a learned
// segment vector per token, with position 0 additionally receiving the mean
// of the other tokens' layer-0 vectors so the summary slot sees the whole
// input; layer k is a per-token affine map plus Tanh of layer k-1.
BackboneOutput backbone_forward(const UnifiedSequence& seq, const ModelCheckpoint& model);

// e_t = gamma * sum_k softmax(layer_logits)_k * e^k_t
std::vector<Vec> pool_layers(const BackboneOutput& out, const PoolingWeights& pw);

// Head: three affine layers with Tanh between, final width 2; both outputs
// squashed by the logistic function.
Prediction predict(const UnifiedSequence& seq, const ModelCheckpoint& model);

double loss_c(double code_score, double pass_ratio);
// -log(p_exec) when executability = 1, else -log(1 - p_exec). Callers must
// squash first; exact 0 or 1 is an error.
double loss_e(double p_exec, int executability);

struct Labels {
  double pass_ratio = 0.0;
  int executability = 0;
};

struct FormatLoss {
  InputFormat format;
  double value;
};

struct UnifiedLoss {
  double total = 0.0;
  std::vector<FormatLoss> per_format;
};

// One loss per assemblable format (all three when r and n are both present);
// total is exactly their sum.
UnifiedLoss unified_loss(const std::string& g, const std::optional<std::string>& r,
                         const std::optional<std::string>& n, const Labels& labels,
                         const ModelCheckpoint& model, const std::string& key = "");

struct TrainExample {
  std::string g;
  std::optional<std::string> r;
  std::optional<std::string> n;
  Labels labels;
  std::string key;  // for file-backed embedding lookup
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
};

struct TrainResult {
  ModelCheckpoint checkpoint;
  std::vector<EpochLog> log;
};

ModelCheckpoint init_model(const TrainConfig& config, const Vocabulary& vocab);
TrainResult train(const std::vector<TrainExample>& examples, const TrainConfig& config);

void save_checkpoint(const ModelCheckpoint& model, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

//-- gradient surface (training internals, also used by the finite-difference
//    checks) --

struct ParamRef {
  double* value;
  std::string group;
};

std::vector<ParamRef> parameter_refs(ModelCheckpoint& model);

// Mean unified loss over the batch.
double batch_loss(const std::vector<TrainExample>& batch, const ModelCheckpoint& model);
// Analytic gradient of batch_loss, aligned with parameter_refs order.
std::vector<double> batch_gradient(const std::vector<TrainExample>& batch,
                                   const ModelCheckpoint& model);

}  // namespace cseval::unice
