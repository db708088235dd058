#include <gtest/gtest.h>

#include <set>

#include "emsaudit/audit.hpp"
#include "emsaudit/crf.hpp"
#include "emsaudit/eval.hpp"
#include "emsaudit/gazetteer.hpp"
#include "emsaudit/preprocess.hpp"
#include "emsaudit/records.hpp"
#include "oracles.hpp"

using namespace emsaudit;

namespace {

constexpr int kTrials = 1000;

EntityType random_entity(Rng& rng) { return all_entity_types()[rng.below(kNumEntityTypes)]; }

// Non-overlapping spans sorted by start inside [0, length).
std::vector<EntitySpan> random_spans(Rng& rng, int length, double density = 0.3) {
  std::vector<EntitySpan> spans;
  int pos = 0;
  while (pos < length) {
    if (rng.bernoulli(density)) {
      const int len = std::min(length - pos, rng.between(1, 3));
      spans.push_back({random_entity(rng), pos, pos + len - 1});
      pos += len;
    } else {
      ++pos;
    }
  }
  return spans;
}

std::string random_text(Rng& rng) {
  static const std::vector<std::string> pieces = {"a",  "Z",  "7",   " ",  "  ", "\t", "%",  "&",  "-",  "/",
                                                  ".",  ",",  "(",   ")",  "\n", "é",  "Ü",  "°",  "mg", "BP",
                                                  "O/E", "12", "#",  "@",  ":",  "'",  "\"", "ß",  "x"};
  std::string s;
  const int n = rng.between(0, 25);
  for (int i = 0; i < n; ++i) s += rng.pick(pieces);
  return s;
}

CaseRecord random_record(Rng& rng, int id) {
  static const std::vector<std::optional<std::string>> complaints = {"Chest Pain", "chest pain", "Suspected Stroke",
                                                                     "Fall", std::nullopt};
  CaseRecord r;
  r.incident_id = "R" + std::to_string(id);
  r.provider_id = "P" + std::to_string(rng.below(4));
  r.chief_complaint = rng.pick(complaints);
  if (rng.bernoulli(0.2)) r.physical_findings.push_back("Active Bleeding");
  if (rng.bernoulli(0.8)) r.systolic_bp = rng.between(50, 200);
  r.capillary_glucose_recorded = rng.bernoulli(0.5);
  r.bleeding_control_applied = rng.bernoulli(0.5);
  r.report_text = "x";
  return r;
}

std::vector<EntitySpan> random_mentions(Rng& rng) {
  std::vector<EntitySpan> out;
  const int n = rng.between(0, 5);
  for (int i = 0; i < n; ++i) out.push_back({random_entity(rng), 2 * i, 2 * i});
  return out;
}

}  // namespace

TEST(Property, IobRoundTrip) {
  Rng rng(101);
  for (int trial = 0; trial < kTrials; ++trial) {
    const int length = rng.between(0, 30);
    const auto spans = random_spans(rng, length);
    const auto tags = tags_from_spans(spans, static_cast<std::size_t>(length));
    ASSERT_EQ(tags.size(), static_cast<std::size_t>(length));
    ASSERT_EQ(spans_from_tags(tags), spans);
    for (Tag t : tags) ASSERT_EQ(Tag::from_id(t.id()), t);
  }
}

TEST(Property, SpansFromArbitraryTags) {
  Rng rng(102);
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<Tag> tags;
    const int length = rng.between(0, 20);
    for (int i = 0; i < length; ++i) tags.push_back(Tag::from_id(static_cast<int>(rng.below(kNumTags))));
    const auto spans = spans_from_tags(tags);
    // Re-encoding the decoded spans only changes orphan I- tags into B- tags.
    const auto again = tags_from_spans(spans, tags.size());
    for (std::size_t i = 0; i < tags.size(); ++i) {
      ASSERT_EQ(tags[i].is_outside(), again[i].is_outside());
      if (!tags[i].is_outside()) ASSERT_EQ(tags[i].entity(), again[i].entity());
    }
    ASSERT_EQ(spans_from_tags(again), spans);
  }
}

TEST(Property, NormalizeIdempotentAndAlphabet) {
  Rng rng(103);
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::string text = random_text(rng);
    const std::string n = normalize(text);
    ASSERT_EQ(normalize(n), n) << text;
    ASSERT_EQ(n.find("  "), std::string::npos);
    if (!n.empty()) {
      ASSERT_NE(n.front(), ' ');
      ASSERT_NE(n.back(), ' ');
    }
    for (unsigned char c : n) {
      if (c >= 0x80) continue;
      ASSERT_TRUE(std::islower(c) || std::isdigit(c) || c == '%' || c == ' ') << "'" << c << "' from " << text;
    }
    const std::string other = random_text(rng);
    const std::string joined = normalize(text + " " + other);
    const std::string a = normalize(text), b = normalize(other);
    ASSERT_EQ(joined, a.empty() ? b : b.empty() ? a : a + " " + b);
  }
}

TEST(Property, TokenizeRejoins) {
  Rng rng(104);
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::string n = normalize(random_text(rng));
    ASSERT_EQ(oracle::join(tokenize(n).tokens, 0, tokenize(n).size()), n);
  }
}

TEST(Property, WeakLabelShape) {
  Rng rng(105);
  const auto gaz = Gazetteer::builtin();
  const std::vector<std::string> filler = {"pt", "given", "stat", "noted", "on", "scene", "bp", "90", "ok"};
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<std::string> words;
    const int n = rng.between(0, 12);
    for (int i = 0; i < n; ++i) {
      if (rng.bernoulli(0.3)) {
        for (const auto& t : tokenize(rng.pick(gaz.synonyms()).phrase).tokens) words.push_back(t);
      } else {
        words.push_back(rng.pick(filler));
      }
    }
    const TokenizedSentence sentence{words, "S"};
    const auto tags = weak_label(sentence, gaz);
    ASSERT_EQ(tags.size(), words.size());
    const auto spans = weak_spans(sentence, gaz);
    for (std::size_t i = 1; i < spans.size(); ++i) ASSERT_GT(spans[i].start, spans[i - 1].end);
    ASSERT_EQ(spans_from_tags(tags), spans);
  }
}

TEST(Property, EditDistanceMatchesOracle) {
  Rng rng(106);
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::string a = normalize(random_text(rng)), b = normalize(random_text(rng));
    ASSERT_EQ(edit_distance(a, b), oracle::levenshtein(a, b)) << a << " / " << b;
    ASSERT_EQ(edit_distance(a, b), edit_distance(b, a));
  }
}

TEST(Property, MucModesAgree) {
  Rng rng(107);
  for (int trial = 0; trial < kTrials; ++trial) {
    const int length = rng.between(1, 25);
    const auto gold = random_spans(rng, length);
    const auto pred = random_spans(rng, length);
    const auto s = muc5_categorize(gold, pred, MatchMode::kStrict);
    const auto t = muc5_categorize(gold, pred, MatchMode::kEntityType);
    ASSERT_LE(s.cor, t.cor);
    ASSERT_EQ(s.mis, t.mis);
    ASSERT_EQ(s.spu, t.spu);
    ASSERT_EQ(s.cor + s.inc, t.cor + t.inc);
    ASSERT_EQ(s.par, 0);
    const auto self = muc5_categorize(gold, gold, MatchMode::kStrict);
    ASSERT_EQ(self.cor, static_cast<long>(gold.size()));
    ASSERT_EQ(self.inc + self.mis + self.spu, 0);
    const auto sc = muc5_scores(t);
    ASSERT_GE(sc.f1, 0.0);
    ASSERT_LE(sc.f1, 1.0);
  }
}

TEST(Property, AggregationPartitions) {
  Rng rng(108);
  const auto rules = ProtocolTable::builtin();
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<AuditResult> results;
    const int n = rng.between(1, 12);
    for (int i = 0; i < n; ++i) {
      const auto r = evaluate_case(random_record(rng, i), random_mentions(rng), rules);
      results.insert(results.end(), r.begin(), r.end());
    }
    if (results.empty()) continue;
    long verdicts = 0;
    for (const auto& r : results) verdicts += static_cast<long>(r.verdicts.size());
    const auto prov = aggregate(results, AuditLevel::kProvider);
    const auto sys = aggregate(results, AuditLevel::kSystem);
    std::map<std::pair<ScenarioType, std::string>, std::array<long, 4>> sum;
    long total = 0;
    for (const auto& [key, t] : prov.tallies) {
      ASSERT_LE(t.passes, t.required);
      auto& s = sum[{std::get<1>(key), std::get<2>(key)}];
      s[0] += t.passes;
      s[1] += t.required;
      s[2] += t.indeterminate;
      s[3] += t.not_required;
      total += t.required + t.indeterminate + t.not_required;
    }
    ASSERT_EQ(total, verdicts);
    ASSERT_EQ(sum.size(), sys.tallies.size());
    for (const auto& [key, t] : sys.tallies) {
      const auto& s = sum.at({std::get<1>(key), std::get<2>(key)});
      ASSERT_EQ((std::array<long, 4>{t.passes, t.required, t.indeterminate, t.not_required}), s);
    }
  }
}

TEST(Property, EvidenceMonotone) {
  Rng rng(109);
  const auto rules = ProtocolTable::builtin();
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto record = random_record(rng, trial);
    auto fewer = random_mentions(rng);
    auto more = fewer;
    const int extra = rng.between(1, 3);
    for (int i = 0; i < extra; ++i) more.push_back({random_entity(rng), 100 + 2 * i, 100 + 2 * i});
    const auto a = evaluate_case(record, fewer, rules);
    const auto b = evaluate_case(record, more, rules);
    ASSERT_LE(a.size(), b.size());
    for (const auto& ra : a) {
      const auto it = std::find_if(b.begin(), b.end(), [&](const AuditResult& rb) { return rb.scenario == ra.scenario; });
      ASSERT_NE(it, b.end());
      for (std::size_t v = 0; v < ra.verdicts.size(); ++v) {
        ASSERT_EQ(ra.verdicts[v].required(), it->verdicts[v].required());
        if (ra.verdicts[v].status == VerdictStatus::kPass) ASSERT_EQ(it->verdicts[v].status, VerdictStatus::kPass);
      }
    }
  }
}

TEST(Property, ViterbiBoundedByPartition) {
  Rng rng(110);
  for (int trial = 0; trial < kTrials; ++trial) {
    const int T = rng.between(1, 12);
    const int K = rng.between(1, 8);
    crf::Emissions em;
    crf::Transitions tr;
    oracle::random_instance(rng, T, K, em, tr, 3.0);
    const auto best = crf::viterbi(em, tr);
    const double logz = crf::log_partition(em, tr);
    ASSERT_EQ(best.tags.size(), static_cast<std::size_t>(T));
    ASSERT_LE(best.score, logz + 1e-9);
    ASSERT_NEAR(crf::path_score(em, tr, best.tags), best.score, 1e-9);
    std::vector<int> path(T);
    for (auto& y : path) y = static_cast<int>(rng.below(K));
    ASSERT_LE(crf::path_score(em, tr, path), best.score + 1e-9);
  }
}

TEST(Property, SplitPartitions) {
  Rng rng(111);
  for (int trial = 0; trial < kTrials; ++trial) {
    const int n = rng.between(1, 60);
    std::vector<CaseRecord> records;
    for (int i = 0; i < n; ++i) records.push_back(random_record(rng, i));
    const double dev = rng.uniform(0.0, 0.3), test = rng.uniform(0.0, 0.3);
    const SplitFractions f{1.0 - dev - test, dev, test};
    const auto split = split_dataset(records, f, rng.next());
    const auto sizes = split_sizes(records.size(), f);
    ASSERT_EQ(split.train.size(), sizes[0]);
    ASSERT_EQ(split.dev.size(), sizes[1]);
    ASSERT_EQ(split.test.size(), sizes[2]);
    std::set<std::string> ids;
    for (const auto* part : {&split.train, &split.dev, &split.test}) {
      for (const auto& r : *part) ASSERT_TRUE(ids.insert(r.incident_id).second);
    }
    ASSERT_EQ(ids.size(), records.size());
  }
}
