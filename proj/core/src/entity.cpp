#include "emsaudit/entity.hpp"

#include "emsaudit/error.hpp"

namespace emsaudit {
namespace {

struct EntityInfo {
  EntityType type;
  std::string_view name;
  EntityCategory category;
};

constexpr std::array<EntityInfo, kNumEntityTypes> kEntities = {{
    {EntityType::kEcg, "ECG", EntityCategory::kClinicalProcedure},
    {EntityType::kStrokeAssessment, "STROKEASSESSMENT", EntityCategory::kClinicalProcedure},
    {EntityType::kIvCannula, "IVCANNULA", EntityCategory::kClinicalProcedure},
    {EntityType::kBurnsCooling, "BURNSCOOLING", EntityCategory::kClinicalProcedure},
    {EntityType::kValsalva, "VALSALVA", EntityCategory::kClinicalProcedure},
    {EntityType::kBleeding, "BLEEDING", EntityCategory::kClinicalFinding},
    {EntityType::kObviousDeath, "OBVIOUSDEATH", EntityCategory::kClinicalFinding},
    {EntityType::kGtn, "GTN", EntityCategory::kMedication},
    {EntityType::kAspirin, "ASPIRIN", EntityCategory::kMedication},
    {EntityType::kNormalSaline, "NORMALSALINE", EntityCategory::kMedication},
    {EntityType::kPenthrox, "PENTHROX", EntityCategory::kMedication},
    {EntityType::kDextrose, "DEXTROSE", EntityCategory::kMedication},
    {EntityType::kAdrenaline, "ADRENALINE", EntityCategory::kMedication},
    {EntityType::kDiazepam, "DIAZEPAM", EntityCategory::kMedication},
    {EntityType::kSalbutamol, "SALBUTAMOL", EntityCategory::kMedication},
    {EntityType::kTramadol, "TRAMADOL", EntityCategory::kMedication},
    {EntityType::kSyntometrine, "SYNTOMETRINE", EntityCategory::kMedication},
}};

constexpr std::array<EntityType, kNumEntityTypes> make_all() {
  std::array<EntityType, kNumEntityTypes> all{};
  for (std::size_t i = 0; i < kNumEntityTypes; ++i) all[i] = kEntities[i].type;
  return all;
}

constexpr auto kAllTypes = make_all();

std::string_view qualifier(EntityCategory c) {
  switch (c) {
    case EntityCategory::kClinicalProcedure: return "PROCEDURE";
    case EntityCategory::kClinicalFinding: return "FINDING";
    case EntityCategory::kMedication: return "MEDICATION";
  }
  return "";
}

}  // namespace

const std::array<EntityType, kNumEntityTypes>& all_entity_types() { return kAllTypes; }

std::string_view entity_name(EntityType type) { return kEntities[index_of(type)].name; }

EntityCategory entity_category(EntityType type) { return kEntities[index_of(type)].category; }

std::string qualified_entity_name(EntityType type) {
  return std::string(qualifier(entity_category(type))) + "_" + std::string(entity_name(type));
}

std::string_view category_name(EntityCategory category) {
  switch (category) {
    case EntityCategory::kClinicalProcedure: return "ClinicalProcedure";
    case EntityCategory::kClinicalFinding: return "ClinicalFinding";
    case EntityCategory::kMedication: return "Medication";
  }
  return "";
}

std::optional<EntityType> parse_entity(std::string_view name) {
  for (const auto& info : kEntities) {
    if (name == info.name) return info.type;
    const std::string_view q = qualifier(info.category);
    if (name.size() == q.size() + 1 + info.name.size() && name.starts_with(q) &&
        name[q.size()] == '_' && name.ends_with(info.name)) {
      return info.type;
    }
  }
  return std::nullopt;
}

Tag Tag::from_id(int id) {
  if (id < 0 || id >= kNumTags) throw Error("tag id out of range: " + std::to_string(id));
  if (id == 0) return outside();
  const auto entity = static_cast<EntityType>((id - 1) / 2);
  return (id - 1) % 2 == 0 ? begin(entity) : inside(entity);
}

std::string Tag::str() const {
  switch (prefix_) {
    case Prefix::kOutside: return "O";
    case Prefix::kBegin: return "B-" + std::string(entity_name(entity_));
    case Prefix::kInside: return "I-" + std::string(entity_name(entity_));
  }
  return "O";
}

std::optional<Tag> parse_tag(std::string_view text) {
  if (text == "O") return Tag::outside();
  if (text.size() < 3 || text[1] != '-') return std::nullopt;
  const auto entity = parse_entity(text.substr(2));
  if (!entity) return std::nullopt;
  if (text[0] == 'B') return Tag::begin(*entity);
  if (text[0] == 'I') return Tag::inside(*entity);
  return std::nullopt;
}

std::vector<Tag> tags_from_spans(const std::vector<EntitySpan>& spans, std::size_t length) {
  std::vector<Tag> tags(length, Tag::outside());
  for (const auto& span : spans) {
    if (span.start < 0 || span.end < span.start || static_cast<std::size_t>(span.end) >= length) {
      throw Error("span out of range");
    }
    tags[span.start] = Tag::begin(span.entity);
    for (int i = span.start + 1; i <= span.end; ++i) tags[i] = Tag::inside(span.entity);
  }
  return tags;
}

std::vector<EntitySpan> spans_from_tags(const std::vector<Tag>& tags) {
  std::vector<EntitySpan> spans;
  std::optional<EntitySpan> open;
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    const Tag tag = tags[i];
    const bool continues = tag.prefix() == Tag::Prefix::kInside && open &&
                           open->entity == tag.entity();
    if (continues) {
      open->end = i;
      continue;
    }
    if (open) spans.push_back(*open);
    open.reset();
    if (!tag.is_outside()) open = EntitySpan{tag.entity(), i, i};
  }
  if (open) spans.push_back(*open);
  return spans;
}

}  // namespace emsaudit
