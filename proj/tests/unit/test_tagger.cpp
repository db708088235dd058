#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "emsaudit/error.hpp"
#include "emsaudit/io.hpp"
#include "emsaudit/tagger.hpp"
#include "gradcheck.hpp"

using namespace emsaudit;

namespace {

Hyperparams small_hp() {
  Hyperparams hp;
  hp.embed_dim = 8;
  hp.hidden_dim = 6;
  hp.batch_size = 4;
  hp.learning_rate = 0.02;
  hp.max_epochs = 40;
  hp.seed = 3;
  hp.threads = 1;
  return hp;
}

// "aspirin" is always B-ASPIRIN; every other token is O.
std::vector<LabeledSentence> toy_corpus(std::uint64_t seed, std::size_t n) {
  const std::vector<std::string> words = {"pt", "given", "stat", "alert", "o", "e", "conscious", "bp", "no", "fall"};
  Rng rng(seed);
  std::vector<LabeledSentence> out;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledSentence s;
    const int len = rng.between(2, 7);
    for (int t = 0; t < len; ++t) {
      if (rng.bernoulli(0.25)) {
        s.tokens.push_back("aspirin");
        s.tags.push_back(Tag::begin(EntityType::kAspirin));
      } else {
        s.tokens.push_back(rng.pick(words));
        s.tags.push_back(Tag::outside());
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

bool same_params(const TaggerParams& a, const TaggerParams& b) {
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!std::equal(ta[i].begin(), ta[i].end(), tb[i].begin(), tb[i].end(),
                    [](double x, double y) { return x == y || (std::isinf(x) && x == y); })) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST(Vocabulary, ReservedIdsAndOov) {
  const auto v = Vocabulary::build({{"pt", "alert"}, {"pt", "gtn"}});
  EXPECT_EQ(v.size(), 5);
  EXPECT_EQ(v.id("pt"), 2);
  EXPECT_EQ(v.id("alert"), 3);
  EXPECT_EQ(v.id("gtn"), 4);
  EXPECT_EQ(v.id("asprin"), Vocabulary::kUnk);
  EXPECT_EQ(v.encode({"gtn", "zzz"}), (std::vector<int>{4, Vocabulary::kUnk}));
  EXPECT_EQ(Vocabulary::from_tokens(v.tokens()), v);
}

TEST(Hyperparams, Defaults) {
  const Hyperparams hp;
  EXPECT_EQ(hp.embed_dim, 100);
  EXPECT_EQ(hp.hidden_dim, 64);
  EXPECT_EQ(hp.batch_size, 512);
  EXPECT_EQ(hp.learning_rate, 0.001);
  EXPECT_EQ(hp.patience, 5);
  EXPECT_EQ(hp.max_epochs, 300);
  EXPECT_EQ(hp.adam_beta1, 0.9);
  EXPECT_EQ(hp.adam_beta2, 0.999);
  EXPECT_EQ(hp.adam_epsilon, 1e-8);
  Hyperparams bad;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Params, Initialization) {
  const auto p = TaggerParams::initialized(10, 100, 64, 9);
  EXPECT_TRUE(p.embeddings.isZero());
  EXPECT_LE(p.forward.w_input.cwiseAbs().maxCoeff(), 0.1);
  EXPECT_LE(p.backward.w_hidden.cwiseAbs().maxCoeff(), 0.1);
  EXPECT_LE(p.projection.cwiseAbs().maxCoeff(), 0.1);
  EXPECT_GT(p.projection.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(p.forward.bias.segment(64, 64).isOnes());
  EXPECT_TRUE(p.forward.bias.segment(0, 64).isZero());
  EXPECT_EQ(p.transitions.rows(), 37);
  EXPECT_TRUE(std::isinf(p.transitions(3, 35)));
  EXPECT_EQ(p.transitions(35, 3), 0.0);
}

TEST(Encode, ZeroParamsGiveBias) {
  auto p = TaggerParams::zeros(5, 4, 3);
  for (int k = 0; k < kNumTags; ++k) p.projection_bias(k) = 0.1 * k;
  const auto em = encode(p, std::vector<int>{3});
  ASSERT_EQ(em.rows(), 1);
  ASSERT_EQ(em.cols(), 35);
  for (int k = 0; k < kNumTags; ++k) EXPECT_DOUBLE_EQ(em(0, k), 0.1 * k);
}

TEST(Encode, ShapeDeterminismAndErrors) {
  Rng rng(1);
  const auto p = oracle::random_params(6, 5, 4, rng);
  const std::vector<int> ids = {2, 3, 1, 5};
  const auto a = encode(p, ids);
  EXPECT_EQ(a.rows(), 4);
  EXPECT_EQ(a.cols(), 35);
  EXPECT_EQ(a, encode(p, ids));
  EXPECT_THROW(encode(p, std::vector<int>{}), Error);
  EXPECT_THROW(encode(p, std::vector<int>{6}), Error);
}

TEST(Loss, ZeroParamsIsUniform) {
  const auto p = TaggerParams::zeros(5, 3, 2);
  const std::vector<int> ids = {2, 3, 4};
  const std::vector<int> gold = {0, 1, 2};
  EXPECT_NEAR(nll_loss(p, ids, gold), 3 * std::log(35.0), 1e-10);
}

TEST(Loss, GradientSpotCheck) {
  Rng rng(2);
  const auto p = oracle::random_params(7, 4, 3, rng);
  const std::vector<int> ids = {2, 6, 3, 3, 5};
  const std::vector<int> gold = {0, 3, 4, 0, 1};
  const auto r = oracle::gradient_check(p, ids, gold, 6, rng);
  EXPECT_GE(r.checked, 50u);
  EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(Loss, ScaledBackwardAccumulates) {
  Rng rng(4);
  const auto p = oracle::random_params(5, 3, 2, rng);
  const std::vector<int> ids = {2, 3};
  const std::vector<int> gold = {1, 2};
  TaggerParams once = p, twice = p;
  once.set_zero();
  twice.set_zero();
  nll_loss_backward(p, ids, gold, once, 1.0);
  nll_loss_backward(p, ids, gold, twice, 0.5);
  nll_loss_backward(p, ids, gold, twice, 0.5);
  EXPECT_NEAR((once.projection - twice.projection).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(Train, EmptyTrainingSet) {
  try {
    train({}, {}, small_hp());
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty training set");
  }
}

TEST(Train, EarlyStoppingOnRiggedDevLoss) {
  const std::vector<double> rigged = {5, 4, 4, 4, 4, 4, 4, 4, 4, 4};
  TaggerParams at_epoch2;
  TrainOptions opt;
  opt.dev_loss_hook = [&](const TaggerModel& m, int epoch) {
    if (epoch == 2) at_epoch2 = m.params;
    return rigged[static_cast<std::size_t>(epoch - 1)];
  };
  auto hp = small_hp();
  hp.patience = 5;
  const auto result = train(toy_corpus(1, 12), {}, hp, opt);
  EXPECT_EQ(result.log.epochs.size(), 7u);
  EXPECT_EQ(result.log.best_epoch, 2);
  EXPECT_TRUE(result.log.early_stopped);
  EXPECT_TRUE(same_params(result.model.params, at_epoch2));
}

TEST(Train, MaxEpochsWithoutEarlyStop) {
  auto hp = small_hp();
  hp.max_epochs = 3;
  TrainOptions opt;
  opt.dev_loss_hook = [](const TaggerModel&, int epoch) { return 10.0 - epoch; };
  const auto result = train(toy_corpus(1, 8), {}, hp, opt);
  EXPECT_EQ(result.log.epochs.size(), 3u);
  EXPECT_FALSE(result.log.early_stopped);
  EXPECT_EQ(result.log.best_epoch, 3);
}

TEST(Train, LearnsSeparableToy) {
  const auto result = train(toy_corpus(1, 80), toy_corpus(2, 20), small_hp());
  for (const auto& s : toy_corpus(3, 30)) EXPECT_EQ(predict(result.model, s.tokens), s.tags);
  for (const auto& s : toy_corpus(1, 10)) EXPECT_EQ(predict(result.model, s.tokens), s.tags);
  EXPECT_TRUE(result.model.params.embeddings.row(Vocabulary::kPad).isZero());
}

TEST(Train, DeterministicAcrossRunsAndThreads) {
  auto hp = small_hp();
  hp.max_epochs = 4;
  hp.unk_singleton_rate = 0.5;
  const auto a = train(toy_corpus(5, 30), toy_corpus(6, 5), hp);
  const auto b = train(toy_corpus(5, 30), toy_corpus(6, 5), hp);
  hp.threads = 3;
  const auto c = train(toy_corpus(5, 30), toy_corpus(6, 5), hp);
  EXPECT_TRUE(same_params(a.model.params, b.model.params));
  EXPECT_TRUE(same_params(a.model.params, c.model.params));
  EXPECT_EQ(a.log.to_csv(false), c.log.to_csv(false));
}

TEST(Predict, EmptyAndOov) {
  const auto result = train(toy_corpus(1, 20), {}, small_hp());
  EXPECT_TRUE(predict(result.model, std::vector<std::string>{}).empty());
  EXPECT_EQ(predict(result.model, std::vector<std::string>{"never", "seen", "aspirin"}).size(), 3u);
}

TEST(Checkpoint, RoundTripAndCorruption) {
  auto hp = small_hp();
  hp.max_epochs = 2;
  const auto model = train(toy_corpus(1, 10), {}, hp).model;
  const std::string bytes = serialize_model(model);
  const auto back = deserialize_model(bytes);
  EXPECT_EQ(back.vocab, model.vocab);
  EXPECT_EQ(back.seed, model.seed);
  EXPECT_TRUE(same_params(back.params, model.params));
  EXPECT_EQ(bytes.substr(0, 8), "EMSTAGGR");

  EXPECT_THROW(deserialize_model(bytes.substr(0, bytes.size() - 1)), Error);
  EXPECT_THROW(deserialize_model(bytes + "x"), Error);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_model(bad), Error);

  const auto dir = std::filesystem::temp_directory_path() / "emsaudit_ckpt_test";
  save_model(model, dir / "m.bin");
  EXPECT_EQ(io::read_file(dir / "m.bin"), bytes);
  EXPECT_TRUE(same_params(load_model(dir / "m.bin").params, model.params));
  std::filesystem::remove_all(dir);
}

TEST(TrainingLog, CsvLayout) {
  TrainingLog log;
  log.epochs.push_back({1, 2.5, 3.5, 10});
  EXPECT_EQ(log.to_csv(), "epoch,train_loss,dev_loss,elapsed_ms\n1,2.5,3.5,10\n");
  EXPECT_EQ(log.to_csv(false), "epoch,train_loss,dev_loss\n1,2.5,3.5\n");
}
