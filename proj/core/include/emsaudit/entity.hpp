#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emsaudit {

enum class EntityCategory : std::uint8_t { kClinicalProcedure, kClinicalFinding, kMedication };

// The 17 clinical entities. Declaration order fixes the tag-id layout.
enum class EntityType : std::uint8_t {
  kEcg,
  kStrokeAssessment,
  kIvCannula,
  kBurnsCooling,
  kValsalva,
  kBleeding,
  kObviousDeath,
  kGtn,
  kAspirin,
  kNormalSaline,
  kPenthrox,
  kDextrose,
  kAdrenaline,
  kDiazepam,
  kSalbutamol,
  kTramadol,
  kSyntometrine,
};

inline constexpr std::size_t kNumEntityTypes = 17;

const std::array<EntityType, kNumEntityTypes>& all_entity_types();

// Token abbreviation, e.g. "ECG".
std::string_view entity_name(EntityType type);
// Category-qualified name, e.g. "PROCEDURE_ECG", "MEDICATION_ASPIRIN".
std::string qualified_entity_name(EntityType type);
EntityCategory entity_category(EntityType type);
std::string_view category_name(EntityCategory category);

// Accepts both the abbreviation and the category-qualified form.
std::optional<EntityType> parse_entity(std::string_view name);

constexpr std::size_t index_of(EntityType type) { return static_cast<std::size_t>(type); }

// IOB2 tag. Ids: O = 0, B-<e> = 1 + 2*index(e), I-<e> = 2 + 2*index(e).
class Tag {
 public:
  enum class Prefix : std::uint8_t { kOutside, kBegin, kInside };

  constexpr Tag() = default;
  static constexpr Tag outside() { return Tag(); }
  static constexpr Tag begin(EntityType e) { return Tag(Prefix::kBegin, e); }
  static constexpr Tag inside(EntityType e) { return Tag(Prefix::kInside, e); }
  static Tag from_id(int id);

  constexpr Prefix prefix() const { return prefix_; }
  constexpr bool is_outside() const { return prefix_ == Prefix::kOutside; }
  // Meaningless for O.
  constexpr EntityType entity() const { return entity_; }

  constexpr int id() const {
    if (prefix_ == Prefix::kOutside) return 0;
    return static_cast<int>(1 + 2 * index_of(entity_) + (prefix_ == Prefix::kInside ? 1 : 0));
  }

  // "O", "B-ECG", "I-NORMALSALINE".
  std::string str() const;

  friend constexpr bool operator==(Tag a, Tag b) { return a.id() == b.id(); }

 private:
  constexpr Tag(Prefix p, EntityType e) : prefix_(p), entity_(e) {}

  Prefix prefix_ = Prefix::kOutside;
  EntityType entity_ = EntityType::kEcg;
};

inline constexpr int kNumTags = 2 * static_cast<int>(kNumEntityTypes) + 1;

// Accepts "O", "B-ECG" and "B-PROCEDURE_ECG" forms.
std::optional<Tag> parse_tag(std::string_view text);

// Inclusive token range [start, end] carrying one entity mention.
struct EntitySpan {
  EntityType entity = EntityType::kEcg;
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  bool overlaps(const EntitySpan& other) const {
    return start <= other.end && other.start <= end;
  }

  friend auto operator<=>(const EntitySpan&, const EntitySpan&) = default;
};

std::vector<Tag> tags_from_spans(const std::vector<EntitySpan>& spans, std::size_t length);

// Decodes maximal B-/I- runs. An I- without a compatible predecessor opens a
// new span; a type change splits spans.
std::vector<EntitySpan> spans_from_tags(const std::vector<Tag>& tags);

}  // namespace emsaudit
