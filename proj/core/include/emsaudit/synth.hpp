#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emsaudit/entity.hpp"
#include "emsaudit/gazetteer.hpp"
#include "emsaudit/random.hpp"
#include "emsaudit/records.hpp"

namespace emsaudit {

// Clause with one "{}" slot for an entity mention, e.g. "GIVEN {} STAT."
// Restricted to one category when set.
struct MentionTemplate {
  std::optional<EntityCategory> category;
  std::string text;
};

std::vector<MentionTemplate> default_mention_templates();

// Training-set mention counts per entity, normalized to sum to 1.
std::map<EntityType, double> default_entity_profile();

struct SynthConfig {
  std::size_t n_documents = 1000;
  // Probability that a mention has the given type. Mass missing from a sum
  // below 1 is spread uniformly over all types.
  std::map<EntityType, double> entity_frequency = default_entity_profile();
  // Probability that a mention of a fuzzy-matchable synonym receives one
  // character edit.
  double misspelling_rate = 0.0;
  std::vector<MentionTemplate> templates = default_mention_templates();
  std::uint64_t seed = 7;
  int min_mentions = 1;
  int max_mentions = 3;
  int providers = 20;
  // Adds a bleeding mention to documents whose bleeding scenario comes from
  // the free text only. Disable to sample mentions strictly from the profile.
  bool scenario_evidence = true;

  void validate() const;
};

struct SyntheticDocument {
  CaseRecord record;
  std::vector<std::string> tokens;  // tokenize(normalize(record.report_text))
  std::vector<EntitySpan> gold;     // from construction, sorted by start
  std::size_t misspelled_mentions = 0;
};

std::vector<SyntheticDocument> generate_corpus(const SynthConfig& config, const Gazetteer& gazetteer);

// Applies one insertion, deletion or substitution of a letter inside a token
// of the phrase. Token count is preserved.
std::string misspell(const std::string& phrase, Rng& rng);

}  // namespace emsaudit
