#include <benchmark/benchmark.h>

#include "emsaudit/crf.hpp"
#include "emsaudit/gazetteer.hpp"
#include "emsaudit/preprocess.hpp"
#include "emsaudit/random.hpp"
#include "emsaudit/synth.hpp"
#include "emsaudit/tagger.hpp"

using namespace emsaudit;

namespace {

void BM_EditDistance(benchmark::State& state) {
  const std::string a = "cincinnati prehospital stroke scale";
  const std::string b = "cincinati prehospital stroke scael";
  for (auto _ : state) benchmark::DoNotOptimize(edit_distance(a, b));
}
BENCHMARK(BM_EditDistance);

void random_crf(int T, crf::Emissions& em, crf::Transitions& tr) {
  Rng rng(1);
  em.resize(T, kNumTags);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < kNumTags; ++k) em(t, k) = rng.uniform(-2, 2);
  }
  tr = crf::make_transitions(kNumTags);
  for (int i = 0; i < kNumTags + 2; ++i) {
    for (int j = 0; j < kNumTags + 2; ++j) {
      if (std::isfinite(tr(i, j))) tr(i, j) = rng.uniform(-1, 1);
    }
  }
}

void BM_Viterbi(benchmark::State& state) {
  crf::Emissions em;
  crf::Transitions tr;
  random_crf(static_cast<int>(state.range(0)), em, tr);
  for (auto _ : state) benchmark::DoNotOptimize(crf::viterbi(em, tr));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Viterbi)->Arg(40)->Arg(160);

void BM_LogPartition(benchmark::State& state) {
  crf::Emissions em;
  crf::Transitions tr;
  random_crf(static_cast<int>(state.range(0)), em, tr);
  for (auto _ : state) benchmark::DoNotOptimize(crf::log_partition(em, tr));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogPartition)->Arg(40)->Arg(160);

void BM_NllGradient(benchmark::State& state) {
  crf::Emissions em;
  crf::Transitions tr;
  const int T = static_cast<int>(state.range(0));
  random_crf(T, em, tr);
  std::vector<int> gold(T, 0);
  for (auto _ : state) benchmark::DoNotOptimize(crf::nll_with_gradient(em, tr, gold));
}
BENCHMARK(BM_NllGradient)->Arg(40);

void BM_Encode(benchmark::State& state) {
  const auto params = TaggerParams::initialized(5000, 100, 64, 3);
  std::vector<int> ids(static_cast<std::size_t>(state.range(0)));
  Rng rng(2);
  for (int& id : ids) id = 2 + static_cast<int>(rng.below(4998));
  for (auto _ : state) benchmark::DoNotOptimize(encode(params, ids));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Encode)->Arg(40);

void BM_LossBackward(benchmark::State& state) {
  const auto params = TaggerParams::initialized(5000, 100, 64, 3);
  auto grad = params;
  std::vector<int> ids(40), gold(40, 0);
  Rng rng(2);
  for (int& id : ids) id = 2 + static_cast<int>(rng.below(4998));
  for (auto _ : state) {
    grad.set_zero();
    benchmark::DoNotOptimize(nll_loss_backward(params, ids, gold, grad));
  }
}
BENCHMARK(BM_LossBackward);

void BM_WeakLabel(benchmark::State& state) {
  const auto gaz = Gazetteer::builtin();
  SynthConfig cfg;
  cfg.n_documents = 50;
  cfg.misspelling_rate = 0.05;
  std::vector<TokenizedSentence> sentences;
  std::size_t tokens = 0;
  for (const auto& d : generate_corpus(cfg, gaz)) {
    sentences.push_back({d.tokens, d.record.incident_id});
    tokens += d.tokens.size();
  }
  for (auto _ : state) {
    for (const auto& s : sentences) benchmark::DoNotOptimize(weak_label(s, gaz));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(tokens));
}
BENCHMARK(BM_WeakLabel);

void BM_Normalize(benchmark::State& state) {
  const std::string text =
      "HX FROM PT C/O CHEST PAIN X 2/7 CRUSHING IN NATURE, NON-RADIATING. GIVEN 300MG ASPIRIN STAT DOSE & 1 GTN "
      "SPRAY 0.4MG WITH TOTAL RELIEVED. 12 LEAD ECG DONE: SINUS RHYTHM.";
  for (auto _ : state) benchmark::DoNotOptimize(normalize(text));
  state.SetBytesProcessed(state.iterations() * static_cast<long>(text.size()));
}
BENCHMARK(BM_Normalize);

}  // namespace

BENCHMARK_MAIN();
