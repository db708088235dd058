#include "emsaudit/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "emsaudit/error.hpp"
#include "json.hpp"

namespace emsaudit {
namespace {

double ratio(double num, double den) { return den == 0 ? 0.0 : num / den; }

double harmonic(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string_view mode_name(MatchMode mode) {
  return mode == MatchMode::kStrict ? "strict" : "entity_type";
}

MucCounts muc5_categorize(const std::vector<EntitySpan>& gold, const std::vector<EntitySpan>& pred,
                          MatchMode mode) {
  for (std::size_t a = 0; a < gold.size(); ++a) {
    for (std::size_t b = a + 1; b < gold.size(); ++b) {
      if (gold[a].overlaps(gold[b])) throw Error("gold spans overlap");
    }
  }
  MucCounts counts;
  std::vector<bool> touched(gold.size(), false);
  for (const auto& p : pred) {
    bool any = false;
    for (std::size_t g = 0; g < gold.size(); ++g) {
      if (!p.overlaps(gold[g])) continue;
      any = true;
      touched[g] = true;
      if (p == gold[g]) {
        ++counts.cor;
      } else if (p.entity == gold[g].entity) {
        ++(mode == MatchMode::kEntityType ? counts.cor : counts.inc);
      } else {
        ++counts.inc;
      }
    }
    if (!any) ++counts.spu;
  }
  counts.mis = std::count(touched.begin(), touched.end(), false);
  return counts;
}

MucScores muc5_scores(const MucCounts& c) {
  MucScores s;
  s.pos = c.cor + c.inc + c.par + c.mis;
  s.act = c.cor + c.inc + c.par + c.spu;
  s.precision = ratio(static_cast<double>(c.cor), static_cast<double>(s.act));
  s.recall = ratio(static_cast<double>(c.cor), static_cast<double>(s.pos));
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

TokenClassReport token_metrics(const std::vector<Tag>& gold, const std::vector<Tag>& pred) {
  if (gold.size() != pred.size()) throw Error("gold and predicted tag sequences differ in length");
  struct Tally {
    long tp = 0, gold = 0, pred = 0;
  };
  std::map<int, Tally> tallies;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!gold[i].is_outside()) ++tallies[gold[i].id()].gold;
    if (!pred[i].is_outside()) ++tallies[pred[i].id()].pred;
    if (!gold[i].is_outside() && gold[i] == pred[i]) ++tallies[gold[i].id()].tp;
  }
  TokenClassReport report;
  double wp = 0, wr = 0, wf = 0;
  for (const auto& [id, t] : tallies) {
    ClassMetrics m;
    m.precision = ratio(static_cast<double>(t.tp), static_cast<double>(t.pred));
    m.recall = ratio(static_cast<double>(t.tp), static_cast<double>(t.gold));
    m.f1 = harmonic(m.precision, m.recall);
    m.support = t.gold;
    m.predicted = t.pred;
    report.per_class[Tag::from_id(id).str()] = m;
    report.total_support += t.gold;
    wp += m.precision * static_cast<double>(t.gold);
    wr += m.recall * static_cast<double>(t.gold);
    wf += m.f1 * static_cast<double>(t.gold);
  }
  const double n = static_cast<double>(report.total_support);
  report.weighted_precision = ratio(wp, n);
  report.weighted_recall = ratio(wr, n);
  report.weighted_f1 = ratio(wf, n);
  return report;
}

EvaluationReport evaluate(const std::vector<TaggedDocument>& gold, const std::vector<TaggedDocument>& pred) {
  std::map<std::string, const TaggedDocument*> pred_by_id;
  for (const auto& d : pred) {
    if (!pred_by_id.emplace(d.incident_id, &d).second) throw Error("duplicate prediction for " + d.incident_id);
  }
  if (pred_by_id.size() != gold.size()) {
    throw Error("gold and prediction files cover different documents (" + std::to_string(gold.size()) + " vs " +
                std::to_string(pred_by_id.size()) + ")");
  }
  EvaluationReport report;
  std::vector<Tag> all_gold, all_pred;
  std::set<std::string> seen;
  for (const auto& g : gold) {
    if (!seen.insert(g.incident_id).second) throw Error("duplicate gold document " + g.incident_id);
    const auto it = pred_by_id.find(g.incident_id);
    if (it == pred_by_id.end()) throw Error("no prediction for " + g.incident_id);
    const TaggedDocument& p = *it->second;
    if (p.tags.size() != g.tags.size()) throw Error("tag count mismatch for " + g.incident_id);
    const auto gold_spans = spans_from_tags(g.tags);
    const auto pred_spans = spans_from_tags(p.tags);
    report.strict += muc5_categorize(gold_spans, pred_spans, MatchMode::kStrict);
    report.entity_type += muc5_categorize(gold_spans, pred_spans, MatchMode::kEntityType);
    report.gold_entities += gold_spans.size();
    report.predicted_entities += pred_spans.size();
    all_gold.insert(all_gold.end(), g.tags.begin(), g.tags.end());
    all_pred.insert(all_pred.end(), p.tags.begin(), p.tags.end());
  }
  report.documents = gold.size();
  report.tokens = token_metrics(all_gold, all_pred);
  return report;
}

std::string EvaluationReport::to_json() const {
  using nlohmann::json;
  const auto mode_json = [](const MucCounts& c) {
    const MucScores s = muc5_scores(c);
    return json{{"COR", c.cor}, {"INC", c.inc},   {"PAR", c.par},         {"MIS", c.mis},
                {"SPU", c.spu}, {"POS", s.pos},   {"ACT", s.act},         {"precision", s.precision},
                {"recall", s.recall}, {"f1", s.f1}};
  };
  json classes = json::object();
  for (const auto& [name, m] : tokens.per_class) {
    classes[name] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  }
  json out = {
      {"documents", documents},
      {"gold_entities", gold_entities},
      {"predicted_entities", predicted_entities},
      {"strict", mode_json(strict)},
      {"entity_type", mode_json(entity_type)},
      {"token_level",
       {{"classes", classes},
        {"weighted_precision", tokens.weighted_precision},
        {"weighted_recall", tokens.weighted_recall},
        {"weighted_f1", tokens.weighted_f1},
        {"support", tokens.total_support}}},
  };
  return out.dump(2) + "\n";
}

std::string EvaluationReport::to_text(bool show_strict, bool show_type) const {
  std::ostringstream out;
  char line[160];
  out << "Entity level (MUC-5), " << documents << " documents, " << gold_entities << " gold entities\n";
  std::snprintf(line, sizeof line, "%-22s %6s %6s %6s %6s %6s %6s %9s %9s %9s\n", "mode", "COR", "INC", "MIS",
                "SPU", "POS", "ACT", "precision", "recall", "f1");
  out << line;
  const auto row = [&](const char* name, const MucCounts& c) {
    const MucScores s = muc5_scores(c);
    std::snprintf(line, sizeof line, "%-22s %6ld %6ld %6ld %6ld %6ld %6ld %9s %9s %9s\n", name, c.cor, c.inc,
                  c.mis, c.spu, s.pos, s.act, fixed3(s.precision).c_str(), fixed3(s.recall).c_str(),
                  fixed3(s.f1).c_str());
    out << line;
  };
  if (show_type) row("entity type matching", entity_type);
  if (show_strict) row("strict", strict);

  out << "\nToken level (O excluded)\n";
  std::snprintf(line, sizeof line, "%-26s %9s %9s %9s %8s\n", "tag", "precision", "recall", "f1", "support");
  out << line;
  for (const auto& [name, m] : tokens.per_class) {
    std::snprintf(line, sizeof line, "%-26s %9s %9s %9s %8ld\n", name.c_str(), fixed3(m.precision).c_str(),
                  fixed3(m.recall).c_str(), fixed3(m.f1).c_str(), m.support);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-26s %9s %9s %9s %8ld\n", "weighted average",
                fixed3(tokens.weighted_precision).c_str(), fixed3(tokens.weighted_recall).c_str(),
                fixed3(tokens.weighted_f1).c_str(), tokens.total_support);
  out << line;
  return out.str();
}

}  // namespace emsaudit
