#include <gtest/gtest.h>

#include <set>

#include "emsaudit/audit.hpp"
#include "emsaudit/error.hpp"
#include "emsaudit/gazetteer.hpp"
#include "emsaudit/synth.hpp"
#include "oracles.hpp"

using namespace emsaudit;

namespace {

const Gazetteer& gaz() {
  static const Gazetteer g = Gazetteer::builtin();
  return g;
}

SynthConfig small(std::size_t n, std::uint64_t seed = 11) {
  SynthConfig cfg;
  cfg.n_documents = n;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(Synth, Deterministic) {
  auto cfg = small(60);
  cfg.misspelling_rate = 0.3;
  const auto a = generate_corpus(cfg, gaz());
  const auto b = generate_corpus(cfg, gaz());
  ASSERT_EQ(a.size(), 60u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].record, b[i].record);
    EXPECT_EQ(a[i].gold, b[i].gold);
  }
  cfg.seed = 12;
  const auto c = generate_corpus(cfg, gaz());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].record.report_text != c[i].record.report_text;
  EXPECT_TRUE(differs);
}

TEST(Synth, CleanCorpusIsRecoveredByWeakLabels) {
  const auto docs = generate_corpus(small(300), gaz());
  for (const auto& d : docs) {
    EXPECT_EQ(d.misspelled_mentions, 0u);
    const auto sentence = tokenize(normalize(d.record.report_text));
    ASSERT_EQ(sentence.tokens, d.tokens);
    EXPECT_EQ(weak_spans(sentence, gaz()), d.gold) << d.record.report_text;
  }
}

TEST(Synth, GoldSpansInBoundsAndOrdered) {
  auto cfg = small(300);
  cfg.misspelling_rate = 0.5;
  std::size_t misspelled = 0;
  for (const auto& d : generate_corpus(cfg, gaz())) {
    misspelled += d.misspelled_mentions;
    int last_end = -1;
    ASSERT_FALSE(d.gold.empty());
    for (const auto& s : d.gold) {
      EXPECT_GE(s.start, 0);
      EXPECT_LE(s.start, s.end);
      EXPECT_LT(s.end, static_cast<int>(d.tokens.size()));
      EXPECT_GT(s.start, last_end);
      last_end = s.end;
    }
  }
  EXPECT_GT(misspelled, 0u);
}

TEST(Synth, EntityFrequencyIsHonoured) {
  auto cfg = small(1000, 3);
  cfg.min_mentions = cfg.max_mentions = 1;
  cfg.scenario_evidence = false;
  cfg.entity_frequency = {{EntityType::kEcg, 0.5}};
  std::size_t ecg = 0;
  for (const auto& d : generate_corpus(cfg, gaz())) {
    ASSERT_EQ(d.gold.size(), 1u);
    ecg += d.gold[0].entity == EntityType::kEcg;
  }
  // 0.5 expected; the leftover mass adds 0.5/17 more ECG.
  const double expected = 1000 * (0.5 + 0.5 / 17.0);
  EXPECT_NEAR(static_cast<double>(ecg), expected, 45.0);
}

TEST(Synth, AllEntitiesAppear) {
  std::set<EntityType> seen;
  for (const auto& d : generate_corpus(small(1000), gaz())) {
    for (const auto& s : d.gold) seen.insert(s.entity);
  }
  EXPECT_EQ(seen.size(), kNumEntityTypes);
}

TEST(Synth, CoversAuditBranches) {
  const auto rules = ProtocolTable::builtin();
  std::set<std::pair<std::string, VerdictStatus>> seen;
  std::set<ScenarioType> scenarios;
  bool missing_sbp = false;
  for (const auto& d : generate_corpus(small(100), gaz())) {
    missing_sbp |= !d.record.systolic_bp.has_value();
    for (const auto& r : evaluate_case(d.record, d.gold, rules)) {
      scenarios.insert(r.scenario);
      for (const auto& v : r.verdicts) seen.insert({v.action_id, v.status});
    }
  }
  EXPECT_TRUE(missing_sbp);
  EXPECT_EQ(scenarios.size(), 3u);
  for (const char* action : {"gtn", "iv_access", "normal_saline"}) {
    for (auto st : {VerdictStatus::kNotRequired, VerdictStatus::kIndeterminate}) {
      EXPECT_TRUE(seen.count({action, st})) << action << " " << status_name(st);
    }
    EXPECT_TRUE(seen.count({action, VerdictStatus::kPass}) || seen.count({action, VerdictStatus::kFail})) << action;
  }
}

TEST(Synth, RecordsAreWellFormed) {
  std::set<std::string> ids;
  for (const auto& d : generate_corpus(small(50), gaz())) {
    EXPECT_TRUE(ids.insert(d.record.incident_id).second);
    EXPECT_FALSE(d.record.provider_id.empty());
    EXPECT_FALSE(d.record.report_text.empty());
    EXPECT_TRUE(d.record.patient_encounter);
    EXPECT_EQ(d.record.timestamp.size(), 20u) << d.record.timestamp;
    if (d.record.systolic_bp) {
      EXPECT_GE(*d.record.systolic_bp, 0);
      EXPECT_LE(*d.record.systolic_bp, kMaxSystolicBp);
    }
  }
}

TEST(Misspell, SingleEditSameTokenCount) {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string phrase = trial % 2 ? "normal saline" : "aspirin";
    const std::string m = misspell(phrase, rng);
    EXPECT_EQ(oracle::levenshtein(phrase, m), 1u) << m;
    EXPECT_EQ(tokenize(m).size(), tokenize(phrase).size()) << m;
  }
}

TEST(SynthConfig, Validation) {
  auto bad = [](auto mutate) {
    SynthConfig c;
    mutate(c);
    return c;
  };
  EXPECT_NO_THROW(SynthConfig{}.validate());
  EXPECT_THROW(bad([](SynthConfig& c) { c.entity_frequency = {{EntityType::kEcg, -0.1}}; }).validate(), Error);
  EXPECT_THROW(bad([](SynthConfig& c) {
                 c.entity_frequency = {{EntityType::kEcg, 0.7}, {EntityType::kGtn, 0.7}};
               }).validate(),
               Error);
  EXPECT_THROW(bad([](SynthConfig& c) { c.misspelling_rate = 1.5; }).validate(), Error);
  EXPECT_THROW(bad([](SynthConfig& c) { c.templates.clear(); }).validate(), Error);
  EXPECT_THROW(bad([](SynthConfig& c) { c.templates = {{std::nullopt, "NO SLOT."}}; }).validate(), Error);
  EXPECT_THROW(bad([](SynthConfig& c) { c.min_mentions = 4; }).validate(), Error);
  EXPECT_THROW(bad([](SynthConfig& c) { c.providers = 0; }).validate(), Error);
  EXPECT_THROW(generate_corpus(bad([](SynthConfig& c) { c.misspelling_rate = -1; }), gaz()), Error);
}
