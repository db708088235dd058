#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emsaudit/bilstm.hpp"
#include "emsaudit/crf.hpp"
#include "emsaudit/entity.hpp"
#include "emsaudit/preprocess.hpp"

namespace emsaudit {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();
  // Tokens sorted by first appearance; ids 0 and 1 are reserved.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences);
  static Vocabulary from_tokens(std::vector<std::string> id_to_token);

  int id(std::string_view token) const;
  const std::string& token(int id) const { return id_to_token_[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(id_to_token_.size()); }
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.id_to_token_ == b.id_to_token_;
  }

 private:
  void add(std::string token);

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

struct Hyperparams {
  int embed_dim = 100;
  int hidden_dim = 64;  // per direction
  int batch_size = 512;
  double learning_rate = 0.001;
  int patience = 5;
  int max_epochs = 300;
  std::uint64_t seed = 2019;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int threads = 0;  // 0: hardware concurrency; results do not depend on it
  // Probability, drawn afresh each epoch, that a training token seen only once
  // is fed as UNK. Gives the UNK embedding something to learn from; 0 keeps
  // UNK untrained.
  double unk_singleton_rate = 0.0;

  void validate() const;
};

// All trainable tensors, in checkpoint order.
struct TaggerParams {
  RowMatrix embeddings;          // |V| x E, row PAD stays zero
  LstmParams forward;
  LstmParams backward;
  RowMatrix projection;          // 2H x K
  Eigen::VectorXd projection_bias;  // K
  crf::Transitions transitions;  // (K+2) x (K+2)

  static TaggerParams zeros(int vocab_size, int embed_dim, int hidden_dim, int num_tags = kNumTags);
  // Zero embeddings; LSTM and projection weights uniform in [-0.1, 0.1];
  // forget-gate biases 1; transitions zero apart from the forbidden entries.
  static TaggerParams initialized(int vocab_size, int embed_dim, int hidden_dim, std::uint64_t seed,
                                  int num_tags = kNumTags);

  int vocab_size() const { return static_cast<int>(embeddings.rows()); }
  int embed_dim() const { return static_cast<int>(embeddings.cols()); }
  int hidden_dim() const { return forward.hidden_dim(); }
  int num_tags() const { return static_cast<int>(projection.cols()); }

  struct Tensor {
    std::string_view name;
    std::span<double> values;
  };
  std::vector<Tensor> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::size_t parameter_count() const;
  void set_zero();
};

struct TaggerModel {
  Vocabulary vocab;
  TaggerParams params;
  std::uint64_t seed = 0;
};

// BiLSTM features projected to T x K emission scores. Throws on an empty
// sentence or an out-of-range id.
crf::Emissions encode(const TaggerParams& params, std::span<const int> token_ids);
crf::Emissions encode(const TaggerModel& model, std::span<const int> token_ids);

// log Z - score(gold).
double nll_loss(const TaggerParams& params, std::span<const int> token_ids, std::span<const int> gold);
double nll_loss(const TaggerModel& model, std::span<const int> token_ids, std::span<const int> gold);

// Returns the loss and adds scale * d(loss)/d(params) into grad.
double nll_loss_backward(const TaggerParams& params, std::span<const int> token_ids,
                         std::span<const int> gold, TaggerParams& grad, double scale = 1.0);

struct LabeledSentence {
  std::vector<std::string> tokens;
  std::vector<Tag> tags;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  std::int64_t elapsed_ms = 0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool early_stopped = false;

  // "epoch,train_loss,dev_loss,elapsed_ms" rows. Timing is omitted when
  // include_timing is false so logs can be compared across runs.
  std::string to_csv(bool include_timing = true) const;
};

struct TrainOptions {
  // Replaces the dev-loss evaluation after each epoch when set.
  std::function<double(const TaggerModel& model, int epoch)> dev_loss_hook;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  TaggerModel model;  // parameters from the best dev-loss epoch
  TrainingLog log;
};

// Mini-batch Adam on the CRF likelihood with early stopping on mean dev NLL.
// The dev set may be empty only when a dev_loss_hook is supplied; otherwise
// an empty dev set makes the mean train loss the stopping signal.
TrainResult train(const std::vector<LabeledSentence>& train_set, const std::vector<LabeledSentence>& dev_set,
                  const Hyperparams& hp, const TrainOptions& options = {});

double mean_loss(const TaggerModel& model, const std::vector<LabeledSentence>& sentences);

std::vector<Tag> predict(const TaggerModel& model, const std::vector<std::string>& tokens);
std::vector<Tag> predict(const TaggerModel& model, const TokenizedSentence& sentence);

// Binary checkpoint. Layout (all integers and floats little-endian):
//   "EMSTAGGR"  u32 version  u64 vocab_size  u32 embed_dim  u32 hidden_dim
//   u32 num_tags  u64 seed
//   vocab_size x (u32 byte_length, UTF-8 bytes)
//   every tensor of TaggerParams::tensors() in order, row-major f64
void save_model(const TaggerModel& model, const std::filesystem::path& path);
TaggerModel load_model(const std::filesystem::path& path);
std::string serialize_model(const TaggerModel& model);
TaggerModel deserialize_model(std::string_view bytes);

}  // namespace emsaudit
