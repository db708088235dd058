#include "emsaudit/tagger.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "emsaudit/error.hpp"
#include "emsaudit/io.hpp"
#include "emsaudit/random.hpp"

namespace emsaudit {

// ---- Vocabulary -------------------------------------------------------------

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
}

void Vocabulary::add(std::string token) {
  if (token_to_id_.contains(token)) return;
  token_to_id_.emplace(token, size());
  id_to_token_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sentences) {
  Vocabulary vocab;
  for (const auto& sentence : sentences) {
    for (const auto& token : sentence) vocab.add(token);
  }
  return vocab;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> id_to_token) {
  if (id_to_token.size() < 2) throw Error("vocabulary must contain the reserved PAD and UNK entries");
  Vocabulary vocab;
  for (std::size_t i = 2; i < id_to_token.size(); ++i) {
    if (vocab.token_to_id_.contains(id_to_token[i])) throw Error("duplicate vocabulary entry");
    vocab.add(std::move(id_to_token[i]));
  }
  return vocab;
}

int Vocabulary::id(std::string_view token) const {
  const auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end() || it->second == kPad) return kUnk;
  return it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

// ---- Hyperparams / params ---------------------------------------------------

void Hyperparams::validate() const {
  if (embed_dim <= 0 || hidden_dim <= 0 || batch_size <= 0 || patience <= 0 || max_epochs <= 0) {
    throw Error("hyperparameters must be positive");
  }
  if (!(learning_rate > 0) || !(adam_epsilon > 0) || adam_beta1 < 0 || adam_beta1 >= 1 ||
      adam_beta2 < 0 || adam_beta2 >= 1) {
    throw Error("invalid optimizer settings");
  }
  if (!(unk_singleton_rate >= 0 && unk_singleton_rate <= 1)) throw Error("unk_singleton_rate must be in [0, 1]");
}

TaggerParams TaggerParams::zeros(int vocab_size, int embed_dim, int hidden_dim, int num_tags) {
  TaggerParams p;
  p.embeddings = RowMatrix::Zero(vocab_size, embed_dim);
  p.forward = LstmParams::zeros(embed_dim, hidden_dim);
  p.backward = LstmParams::zeros(embed_dim, hidden_dim);
  p.projection = RowMatrix::Zero(2 * hidden_dim, num_tags);
  p.projection_bias = Eigen::VectorXd::Zero(num_tags);
  p.transitions = crf::make_transitions(num_tags);
  return p;
}

TaggerParams TaggerParams::initialized(int vocab_size, int embed_dim, int hidden_dim, std::uint64_t seed,
                                       int num_tags) {
  TaggerParams p = zeros(vocab_size, embed_dim, hidden_dim, num_tags);
  Rng rng(seed);
  const auto fill = [&rng](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-0.1, 0.1);
  };
  for (LstmParams* lstm : {&p.forward, &p.backward}) {
    fill(lstm->w_input);
    fill(lstm->w_hidden);
    lstm->bias.segment(hidden_dim, hidden_dim).setOnes();
  }
  fill(p.projection);
  return p;
}

std::vector<TaggerParams::Tensor> TaggerParams::tensors() {
  const auto view = [](auto& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  return {
      {"embeddings", view(embeddings)},
      {"forward.w_input", view(forward.w_input)},
      {"forward.w_hidden", view(forward.w_hidden)},
      {"forward.bias", view(forward.bias)},
      {"backward.w_input", view(backward.w_input)},
      {"backward.w_hidden", view(backward.w_hidden)},
      {"backward.bias", view(backward.bias)},
      {"projection", view(projection)},
      {"projection_bias", view(projection_bias)},
      {"transitions", view(transitions)},
  };
}

std::vector<std::span<const double>> TaggerParams::tensors() const {
  std::vector<std::span<const double>> out;
  for (const auto& t : const_cast<TaggerParams*>(this)->tensors()) out.emplace_back(t.values);
  return out;
}

std::size_t TaggerParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

void TaggerParams::set_zero() {
  embeddings.setZero();
  forward.set_zero();
  backward.set_zero();
  projection.setZero();
  projection_bias.setZero();
  transitions.setZero();
}

// ---- Forward / backward -----------------------------------------------------

namespace {

struct EncodeTrace {
  Eigen::MatrixXd inputs;  // E x T
  LstmTrace fwd;
  LstmTrace bwd;
  Eigen::MatrixXd features;  // 2H x T
  crf::Emissions emissions;  // T x K
};

EncodeTrace run_encoder(const TaggerParams& params, std::span<const int> ids) {
  if (ids.empty()) throw Error("cannot encode an empty sentence");
  const int T = static_cast<int>(ids.size());
  const int H = params.hidden_dim();
  EncodeTrace tr;
  tr.inputs.resize(params.embed_dim(), T);
  for (int t = 0; t < T; ++t) {
    const int id = ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= params.vocab_size()) throw Error("token id out of vocabulary range");
    tr.inputs.col(t) = params.embeddings.row(id).transpose();
  }
  tr.fwd = lstm_forward(params.forward, tr.inputs, /*reverse=*/false);
  tr.bwd = lstm_forward(params.backward, tr.inputs, /*reverse=*/true);
  tr.features.resize(2 * H, T);
  tr.features.topRows(H) = tr.fwd.hidden;
  tr.features.bottomRows(H) = tr.bwd.hidden;
  tr.emissions = tr.features.transpose() * params.projection;
  tr.emissions.rowwise() += params.projection_bias.transpose();
  return tr;
}

void check_gold(std::span<const int> ids, std::span<const int> gold, int num_tags) {
  if (ids.size() != gold.size()) throw Error("token and tag sequences differ in length");
  for (int g : gold) {
    if (g < 0 || g >= num_tags) throw Error("gold tag id out of range");
  }
}

}  // namespace

crf::Emissions encode(const TaggerParams& params, std::span<const int> token_ids) {
  return run_encoder(params, token_ids).emissions;
}

crf::Emissions encode(const TaggerModel& model, std::span<const int> token_ids) {
  return encode(model.params, token_ids);
}

double nll_loss(const TaggerParams& params, std::span<const int> token_ids, std::span<const int> gold) {
  check_gold(token_ids, gold, params.num_tags());
  const auto em = encode(params, token_ids);
  return crf::log_partition(em, params.transitions) - crf::path_score(em, params.transitions, gold);
}

double nll_loss(const TaggerModel& model, std::span<const int> token_ids, std::span<const int> gold) {
  return nll_loss(model.params, token_ids, gold);
}

double nll_loss_backward(const TaggerParams& params, std::span<const int> token_ids,
                         std::span<const int> gold, TaggerParams& grad, double scale) {
  check_gold(token_ids, gold, params.num_tags());
  const EncodeTrace tr = run_encoder(params, token_ids);
  crf::NllGradient crf_grad = crf::nll_with_gradient(tr.emissions, params.transitions, gold);
  crf_grad.d_emissions *= scale;

  // Forbidden entries carry -inf scores and zero gradient.
  const int K = params.num_tags();
  for (int i = 0; i < K + 2; ++i) {
    for (int j = 0; j < K + 2; ++j) {
      if (std::isfinite(params.transitions(i, j))) grad.transitions(i, j) += scale * crf_grad.d_transitions(i, j);
    }
  }

  const int H = params.hidden_dim();
  grad.projection.noalias() += tr.features * crf_grad.d_emissions;
  grad.projection_bias += crf_grad.d_emissions.colwise().sum().transpose();
  const Eigen::MatrixXd d_features = params.projection * crf_grad.d_emissions.transpose();

  const Eigen::MatrixXd d_in_fwd =
      lstm_backward(params.forward, tr.inputs, tr.fwd, d_features.topRows(H), false, grad.forward);
  const Eigen::MatrixXd d_in_bwd =
      lstm_backward(params.backward, tr.inputs, tr.bwd, d_features.bottomRows(H), true, grad.backward);
  for (std::size_t t = 0; t < token_ids.size(); ++t) {
    const auto col = static_cast<Eigen::Index>(t);
    grad.embeddings.row(token_ids[t]) += (d_in_fwd.col(col) + d_in_bwd.col(col)).transpose();
  }
  return crf_grad.nll;
}

// ---- Training ---------------------------------------------------------------

std::string TrainingLog::to_csv(bool include_timing) const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,dev_loss" << (include_timing ? ",elapsed_ms" : "") << "\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.train_loss << ',' << e.dev_loss;
    if (include_timing) out << ',' << e.elapsed_ms;
    out << "\n";
  }
  return out.str();
}

namespace {

struct Example {
  std::vector<int> ids;
  std::vector<int> tags;
};

std::vector<Example> to_examples(const Vocabulary& vocab, const std::vector<LabeledSentence>& sentences) {
  std::vector<Example> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    if (s.tokens.size() != s.tags.size()) throw Error("tokens and tags differ in length");
    if (s.tokens.empty()) continue;
    Example ex;
    ex.ids = vocab.encode(s.tokens);
    ex.tags.reserve(s.tags.size());
    for (Tag t : s.tags) ex.tags.push_back(t.id());
    out.push_back(std::move(ex));
  }
  return out;
}

// Fixed number of gradient partitions per batch. Each partition sums its
// sentences in order and partitions are reduced in index order, so results
// are identical for any thread count.
constexpr std::size_t kPartitions = 8;

class Adam {
 public:
  Adam(const TaggerParams& shape, const Hyperparams& hp)
      : hp_(hp),
        m_(TaggerParams::zeros(shape.vocab_size(), shape.embed_dim(), shape.hidden_dim(), shape.num_tags())),
        v_(m_) {
    m_.set_zero();
    v_.set_zero();
  }

  void step(TaggerParams& params, TaggerParams& grad) {
    ++t_;
    const double bc1 = 1.0 - std::pow(hp_.adam_beta1, t_);
    const double bc2 = 1.0 - std::pow(hp_.adam_beta2, t_);
    auto p_tensors = params.tensors();
    auto g_tensors = grad.tensors();
    auto m_tensors = m_.tensors();
    auto v_tensors = v_.tensors();
    const std::size_t pad_row = static_cast<std::size_t>(params.embed_dim());
    for (std::size_t k = 0; k < p_tensors.size(); ++k) {
      auto p = p_tensors[k].values;
      auto g = g_tensors[k].values;
      auto m = m_tensors[k].values;
      auto v = v_tensors[k].values;
      const std::size_t first = k == 0 ? pad_row : 0;  // PAD embedding is frozen
      for (std::size_t i = first; i < p.size(); ++i) {
        if (!std::isfinite(p[i])) continue;
        m[i] = hp_.adam_beta1 * m[i] + (1.0 - hp_.adam_beta1) * g[i];
        v[i] = hp_.adam_beta2 * v[i] + (1.0 - hp_.adam_beta2) * g[i] * g[i];
        p[i] -= hp_.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + hp_.adam_epsilon);
      }
    }
  }

 private:
  Hyperparams hp_;
  TaggerParams m_;
  TaggerParams v_;
  int t_ = 0;
};

void zero_grad(TaggerParams& grad) {
  grad.set_zero();
}

void accumulate(TaggerParams& into, const TaggerParams& from) {
  auto a = into.tensors();
  const auto b = from.tensors();
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < a[k].values.size(); ++i) a[k].values[i] += b[k][i];
  }
}

}  // namespace

double mean_loss(const TaggerModel& model, const std::vector<LabeledSentence>& sentences) {
  const auto examples = to_examples(model.vocab, sentences);
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : examples) total += nll_loss(model.params, ex.ids, ex.tags);
  return total / static_cast<double>(examples.size());
}

TrainResult train(const std::vector<LabeledSentence>& train_set, const std::vector<LabeledSentence>& dev_set,
                  const Hyperparams& hp, const TrainOptions& options) {
  hp.validate();
  std::vector<std::vector<std::string>> train_tokens;
  for (const auto& s : train_set) {
    if (!s.tokens.empty()) train_tokens.push_back(s.tokens);
  }
  if (train_tokens.empty()) throw Error("empty training set");

  TaggerModel model;
  model.vocab = Vocabulary::build(train_tokens);
  model.seed = hp.seed;
  model.params = TaggerParams::initialized(model.vocab.size(), hp.embed_dim, hp.hidden_dim, hp.seed);
  const std::vector<Example> examples = to_examples(model.vocab, train_set);
  const std::vector<LabeledSentence>& dev = dev_set;

  const auto shape_like = [&] {
    TaggerParams g = model.params;
    g.set_zero();
    return g;
  };
  std::vector<TaggerParams> partial(kPartitions, shape_like());
  TaggerParams grad = shape_like();
  Adam adam(model.params, hp);
  Rng rng(hp.seed ^ 0x9E3779B97F4A7C15ULL);

  unsigned threads = hp.threads > 0 ? static_cast<unsigned>(hp.threads) : std::thread::hardware_concurrency();
  threads = std::clamp(threads, 1U, static_cast<unsigned>(kPartitions));

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> losses(examples.size());

  std::vector<int> frequency(static_cast<std::size_t>(model.vocab.size()), 0);
  for (const auto& ex : examples) {
    for (int id : ex.ids) ++frequency[static_cast<std::size_t>(id)];
  }
  std::vector<std::vector<int>> epoch_ids;
  for (const auto& ex : examples) epoch_ids.push_back(ex.ids);
  Rng unk_rng(hp.seed ^ 0xD1B54A32D192ED03ULL);
  const std::size_t batch_size = std::min<std::size_t>(static_cast<std::size_t>(hp.batch_size), examples.size());

  TrainResult result;
  TaggerParams best = model.params;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    if (hp.unk_singleton_rate > 0) {
      for (std::size_t e = 0; e < examples.size(); ++e) {
        for (std::size_t t = 0; t < examples[e].ids.size(); ++t) {
          const int id = examples[e].ids[t];
          const bool drop = frequency[static_cast<std::size_t>(id)] == 1 && unk_rng.bernoulli(hp.unk_singleton_rate);
          epoch_ids[e][t] = drop ? Vocabulary::kUnk : id;
        }
      }
    }
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      const std::size_t count = end - begin;
      const double scale = 1.0 / static_cast<double>(count);

      const auto work = [&](std::size_t part) {
        TaggerParams& g = partial[part];
        zero_grad(g);
        const std::size_t lo = begin + count * part / kPartitions;
        const std::size_t hi = begin + count * (part + 1) / kPartitions;
        for (std::size_t k = lo; k < hi; ++k) {
          const Example& ex = examples[order[k]];
          losses[k] = nll_loss_backward(model.params, epoch_ids[order[k]], ex.tags, g, scale);
        }
      };
      if (threads == 1) {
        for (std::size_t part = 0; part < kPartitions; ++part) work(part);
      } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) {
          pool.emplace_back([&, w] {
            for (std::size_t part = w; part < kPartitions; part += threads) work(part);
          });
        }
      }
      zero_grad(grad);
      for (const auto& g : partial) accumulate(grad, g);
      adam.step(model.params, grad);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
    if (options.dev_loss_hook) {
      rec.dev_loss = options.dev_loss_hook(model, epoch);
    } else if (!dev.empty()) {
      rec.dev_loss = mean_loss(model, dev);
    } else {
      rec.dev_loss = rec.train_loss;
    }
    rec.elapsed_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    result.log.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);

    if (rec.dev_loss < best_loss) {
      best_loss = rec.dev_loss;
      best = model.params;
      result.log.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= hp.patience) {
      result.log.early_stopped = true;
      break;
    }
  }

  model.params = std::move(best);
  result.model = std::move(model);
  return result;
}

// ---- Prediction -------------------------------------------------------------

std::vector<Tag> predict(const TaggerModel& model, const std::vector<std::string>& tokens) {
  if (tokens.empty()) return {};
  const std::vector<int> ids = model.vocab.encode(tokens);
  const auto em = encode(model.params, ids);
  const auto best = crf::viterbi(em, model.params.transitions);
  std::vector<Tag> tags;
  tags.reserve(best.tags.size());
  for (int id : best.tags) tags.push_back(Tag::from_id(id));
  return tags;
}

std::vector<Tag> predict(const TaggerModel& model, const TokenizedSentence& sentence) {
  return predict(model, sentence.tokens);
}

// ---- Checkpoint -------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'E', 'M', 'S', 'T', 'A', 'G', 'G', 'R'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  template <typename T>
  void uint(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_ += static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    uint(bits);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  std::string_view bytes(std::size_t n) {
    if (pos_ + n > data_.size()) throw Error("truncated model checkpoint");
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T uint() {
    const auto s = bytes(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  double f64() {
    const auto bits = uint<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const TaggerModel& model) {
  const TaggerParams& p = model.params;
  Writer w;
  w.bytes(std::string_view(kMagic, sizeof kMagic));
  w.uint<std::uint32_t>(kFormatVersion);
  w.uint<std::uint64_t>(static_cast<std::uint64_t>(model.vocab.size()));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(p.embed_dim()));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(p.hidden_dim()));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(p.num_tags()));
  w.uint<std::uint64_t>(model.seed);
  for (const auto& token : model.vocab.tokens()) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(token.size()));
    w.bytes(token);
  }
  for (const auto& tensor : p.tensors()) {
    for (double v : tensor) w.f64(v);
  }
  return w.take();
}

TaggerModel deserialize_model(std::string_view bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) throw Error("not a tagger checkpoint");
  const auto version = r.uint<std::uint32_t>();
  if (version != kFormatVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
  const auto vocab_size = r.uint<std::uint64_t>();
  const auto embed_dim = r.uint<std::uint32_t>();
  const auto hidden_dim = r.uint<std::uint32_t>();
  const auto num_tags = r.uint<std::uint32_t>();
  TaggerModel model;
  model.seed = r.uint<std::uint64_t>();
  if (vocab_size < 2 || vocab_size > (1ULL << 31) || embed_dim == 0 || hidden_dim == 0 ||
      num_tags != static_cast<std::uint32_t>(kNumTags)) {
    throw Error("corrupt checkpoint header");
  }
  std::vector<std::string> tokens;
  tokens.reserve(vocab_size);
  for (std::uint64_t i = 0; i < vocab_size; ++i) {
    const auto len = r.uint<std::uint32_t>();
    tokens.emplace_back(r.bytes(len));
  }
  model.vocab = Vocabulary::from_tokens(std::move(tokens));
  model.params = TaggerParams::zeros(static_cast<int>(vocab_size), static_cast<int>(embed_dim),
                                     static_cast<int>(hidden_dim), static_cast<int>(num_tags));
  for (auto& tensor : model.params.tensors()) {
    for (double& v : tensor.values) v = r.f64();
  }
  if (!r.done()) throw Error("trailing bytes in checkpoint");
  return model;
}

void save_model(const TaggerModel& model, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_model(model));
}

TaggerModel load_model(const std::filesystem::path& path) {
  return deserialize_model(io::read_file(path));
}

}  // namespace emsaudit
