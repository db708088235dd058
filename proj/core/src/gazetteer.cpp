#include "emsaudit/gazetteer.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "emsaudit/error.hpp"
#include "emsaudit/io.hpp"
#include "json.hpp"

namespace emsaudit {
namespace {

#include "builtin_gazetteer.inc"

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    cols.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return cols;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::size_t Synonym::token_count() const { return tokenize(phrase).size(); }

bool Synonym::fuzzy_eligible() const {
  return !force_exact && decode_utf8(phrase).size() >= kMinFuzzyPhraseLength;
}

Gazetteer::Gazetteer(std::vector<Synonym> synonyms, int max_edit_distance)
    : synonyms_(std::move(synonyms)), max_edit_distance_(max_edit_distance) {
  if (max_edit_distance_ < 0) throw Error("max_edit_distance must be non-negative");
}

Gazetteer Gazetteer::parse(std::istream& in, std::string_view source_name, bool require_all_entities) {
  std::vector<Synonym> synonyms;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& msg) {
    throw Error(std::string(source_name) + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto cols = split_tabs(body);
    if (cols.size() != 3) fail("expected 3 tab-separated columns");
    const std::string_view name = trim(cols[0]);
    const auto entity = parse_entity(name);
    if (!entity) fail("unknown entity " + std::string(name));
    Synonym syn;
    syn.entity = *entity;
    syn.phrase = normalize(cols[1]);
    if (syn.phrase.empty()) fail("empty phrase");
    const std::string_view policy = trim(cols[2]);
    if (policy == "exact") {
      syn.force_exact = true;
    } else if (policy != "fuzzy") {
      fail("match policy must be fuzzy or exact, got " + std::string(policy));
    }
    if (!seen.insert(syn.phrase).second) fail("duplicate phrase \"" + syn.phrase + "\"");
    synonyms.push_back(std::move(syn));
  }
  if (require_all_entities) {
    for (EntityType e : all_entity_types()) {
      const bool covered = std::any_of(synonyms.begin(), synonyms.end(),
                                       [e](const Synonym& s) { return s.entity == e; });
      if (!covered) {
        throw Error(std::string(source_name) + ": no synonym for entity " + std::string(entity_name(e)));
      }
    }
  }
  return Gazetteer(std::move(synonyms));
}

Gazetteer Gazetteer::load(const std::filesystem::path& path, bool require_all_entities) {
  std::istringstream in(io::read_file(path));
  return parse(in, path.string(), require_all_entities);
}

std::string_view Gazetteer::builtin_text() { return kBuiltinGazetteer; }

Gazetteer Gazetteer::builtin() {
  std::istringstream in{std::string(kBuiltinGazetteer)};
  return parse(in, "<builtin gazetteer>");
}

std::vector<const Synonym*> Gazetteer::synonyms_for(EntityType entity) const {
  std::vector<const Synonym*> out;
  for (const auto& s : synonyms_) {
    if (s.entity == entity) out.push_back(&s);
  }
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  const std::u32string x = decode_utf8(a);
  const std::u32string y = decode_utf8(b);
  // Single rolling row over y.
  std::vector<std::size_t> row(y.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= x.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (x[i - 1] == y[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[y.size()];
}

std::vector<EntitySpan> match_synonym(const TokenizedSentence& sentence, const Synonym& synonym,
                                      int max_dist) {
  std::vector<EntitySpan> spans;
  const std::size_t width = synonym.token_count();
  if (width == 0 || sentence.size() < width) return spans;

  const bool fuzzy = synonym.fuzzy_eligible() && max_dist > 0;
  const std::size_t phrase_len = fuzzy ? decode_utf8(synonym.phrase).size() : 0;
  std::string window;
  for (std::size_t start = 0; start + width <= sentence.size(); ++start) {
    window.clear();
    for (std::size_t k = 0; k < width; ++k) {
      if (k) window += ' ';
      window += sentence.tokens[start + k];
    }
    bool hit = false;
    if (!fuzzy) {
      hit = window == synonym.phrase;
    } else {
      const std::size_t window_len = decode_utf8(window).size();
      const std::size_t gap = window_len > phrase_len ? window_len - phrase_len : phrase_len - window_len;
      hit = gap <= static_cast<std::size_t>(max_dist) &&
            edit_distance(window, synonym.phrase) <= static_cast<std::size_t>(max_dist);
    }
    if (hit) {
      spans.push_back({synonym.entity, static_cast<int>(start), static_cast<int>(start + width - 1)});
    }
  }
  return spans;
}

std::vector<EntitySpan> resolve_overlaps(std::vector<CandidateSpan> candidates) {
  std::stable_sort(candidates.begin(), candidates.end(), [](const CandidateSpan& a, const CandidateSpan& b) {
    if (a.span.length() != b.span.length()) return a.span.length() > b.span.length();
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    return a.synonym_index < b.synonym_index;
  });
  std::vector<EntitySpan> kept;
  for (const auto& c : candidates) {
    const bool clashes = std::any_of(kept.begin(), kept.end(),
                                     [&](const EntitySpan& k) { return k.overlaps(c.span); });
    if (!clashes) kept.push_back(c.span);
  }
  std::sort(kept.begin(), kept.end(),
            [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
  return kept;
}

std::vector<EntitySpan> weak_spans(const TokenizedSentence& sentence, const Gazetteer& gazetteer) {
  std::vector<CandidateSpan> candidates;
  const auto& synonyms = gazetteer.synonyms();
  for (std::size_t i = 0; i < synonyms.size(); ++i) {
    for (const auto& span : match_synonym(sentence, synonyms[i], gazetteer.max_edit_distance())) {
      candidates.push_back({span, i});
    }
  }
  return resolve_overlaps(std::move(candidates));
}

std::vector<Tag> weak_label(const TokenizedSentence& sentence, const Gazetteer& gazetteer) {
  return tags_from_spans(weak_spans(sentence, gazetteer), sentence.size());
}

std::vector<TagOverride> load_overrides(const std::filesystem::path& path) {
  std::vector<TagOverride> overrides;
  const auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1) + ": ";
    try {
      const auto obj = nlohmann::json::parse(lines[i]);
      TagOverride o;
      o.incident_id = obj.at("incident_id").get<std::string>();
      o.index = obj.at("index").get<std::size_t>();
      const auto tag = parse_tag(obj.at("tag").get<std::string>());
      if (!tag) throw Error("unknown tag " + obj.at("tag").get<std::string>());
      o.tag = *tag;
      overrides.push_back(std::move(o));
    } catch (const nlohmann::json::exception& e) {
      throw Error(where + e.what());
    } catch (const Error& e) {
      throw Error(where + e.what());
    }
  }
  return overrides;
}

std::size_t apply_overrides(std::map<std::string, std::vector<Tag>>& tags_by_incident,
                            const std::vector<TagOverride>& overrides) {
  std::size_t applied = 0;
  for (const auto& o : overrides) {
    const auto it = tags_by_incident.find(o.incident_id);
    if (it == tags_by_incident.end()) continue;
    if (o.index >= it->second.size()) {
      throw Error("override index " + std::to_string(o.index) + " out of range for " + o.incident_id);
    }
    it->second[o.index] = o.tag;
    ++applied;
  }
  return applied;
}

}  // namespace emsaudit
