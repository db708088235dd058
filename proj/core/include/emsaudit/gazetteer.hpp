#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "emsaudit/entity.hpp"
#include "emsaudit/preprocess.hpp"

namespace emsaudit {

// Phrases shorter than this (in code points, spaces included) are matched
// exactly regardless of their policy.
inline constexpr std::size_t kMinFuzzyPhraseLength = 5;

struct Synonym {
  std::string phrase;  // normalized; spaces separate tokens
  EntityType entity = EntityType::kEcg;
  bool force_exact = false;

  std::size_t token_count() const;
  bool fuzzy_eligible() const;
};

class Gazetteer {
 public:
  Gazetteer() = default;
  explicit Gazetteer(std::vector<Synonym> synonyms, int max_edit_distance = 1);

  // Tab-separated "ENTITY<TAB>phrase<TAB>fuzzy|exact" lines, '#' comments.
  // Phrases are normalized; duplicates and unknown entities are rejected.
  // With require_all_entities, every entity type needs at least one synonym.
  static Gazetteer parse(std::istream& in, std::string_view source_name = "<gazetteer>",
                         bool require_all_entities = true);
  static Gazetteer load(const std::filesystem::path& path, bool require_all_entities = true);
  // The non-canonical default list shipped in data/gazetteer.tsv.
  static Gazetteer builtin();
  static std::string_view builtin_text();

  const std::vector<Synonym>& synonyms() const { return synonyms_; }
  int max_edit_distance() const { return max_edit_distance_; }
  std::vector<const Synonym*> synonyms_for(EntityType entity) const;

 private:
  std::vector<Synonym> synonyms_;
  int max_edit_distance_ = 1;
};

// Unit-cost Levenshtein distance over Unicode code points.
std::size_t edit_distance(std::string_view a, std::string_view b);

// All windows of the synonym's token count whose space-joined text matches the
// phrase: within max_dist edits when the synonym is fuzzy-eligible, exactly
// otherwise.
std::vector<EntitySpan> match_synonym(const TokenizedSentence& sentence, const Synonym& synonym,
                                      int max_dist);

struct CandidateSpan {
  EntitySpan span;
  std::size_t synonym_index = 0;
};

// Keeps a non-overlapping subset: longer spans first, then leftmost start,
// then gazetteer order. Result sorted by start.
std::vector<EntitySpan> resolve_overlaps(std::vector<CandidateSpan> candidates);

std::vector<EntitySpan> weak_spans(const TokenizedSentence& sentence, const Gazetteer& gazetteer);
std::vector<Tag> weak_label(const TokenizedSentence& sentence, const Gazetteer& gazetteer);

// Clinician corrections applied after weak labelling.
struct TagOverride {
  std::string incident_id;
  std::size_t index = 0;
  Tag tag;
};

// JSONL of {"incident_id": ..., "index": ..., "tag": ...}.
std::vector<TagOverride> load_overrides(const std::filesystem::path& path);

// Returns the number of patches applied. Throws when a patch indexes past the
// end of its sentence.
std::size_t apply_overrides(std::map<std::string, std::vector<Tag>>& tags_by_incident,
                            const std::vector<TagOverride>& overrides);

}  // namespace emsaudit
