#pragma once

#include <map>
#include <string>
#include <vector>

#include "emsaudit/entity.hpp"

namespace emsaudit {

enum class MatchMode { kStrict, kEntityType };

std::string_view mode_name(MatchMode mode);

struct MucCounts {
  long cor = 0;
  long inc = 0;
  long par = 0;
  long mis = 0;
  long spu = 0;

  MucCounts& operator+=(const MucCounts& o) {
    cor += o.cor;
    inc += o.inc;
    par += o.par;
    mis += o.mis;
    spu += o.spu;
    return *this;
  }
  friend bool operator==(const MucCounts&, const MucCounts&) = default;
};

struct MucScores {
  long pos = 0;
  long act = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Classifies every prediction against the gold spans of one document.
// Throws when gold spans overlap each other.
MucCounts muc5_categorize(const std::vector<EntitySpan>& gold, const std::vector<EntitySpan>& pred,
                          MatchMode mode);

// POS = COR+INC+PAR+MIS, ACT = COR+INC+PAR+SPU, P = COR/ACT, R = COR/POS,
// F1 = 2PR/(P+R); every ratio with a zero denominator is 0.
MucScores muc5_scores(const MucCounts& counts);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;  // gold tokens of this class
  long predicted = 0;
};

struct TokenClassReport {
  std::map<std::string, ClassMetrics> per_class;  // non-O tags seen in gold or predictions
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  long total_support = 0;
};

// One-vs-rest metrics per non-O tag over aligned token sequences, averaged
// with gold support as weights.
TokenClassReport token_metrics(const std::vector<Tag>& gold, const std::vector<Tag>& pred);

struct TaggedDocument {
  std::string incident_id;
  std::vector<std::string> tokens;
  std::vector<Tag> tags;
};

struct EvaluationReport {
  std::size_t documents = 0;
  std::size_t gold_entities = 0;
  std::size_t predicted_entities = 0;
  MucCounts strict;
  MucCounts entity_type;
  TokenClassReport tokens;

  std::string to_json() const;
  // Fixed-width tables, metrics to three decimals.
  std::string to_text(bool show_strict = true, bool show_type = true) const;
};

// Documents are paired by incident_id; both sides must cover the same ids
// with equal tag counts.
EvaluationReport evaluate(const std::vector<TaggedDocument>& gold, const std::vector<TaggedDocument>& pred);

}  // namespace emsaudit
