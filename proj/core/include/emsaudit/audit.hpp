#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "emsaudit/entity.hpp"
#include "emsaudit/records.hpp"

namespace emsaudit {

enum class ScenarioType { kAcuteCoronarySyndrome, kStroke, kBleedingPatient };

std::string_view scenario_name(ScenarioType scenario);
std::optional<ScenarioType> parse_scenario(std::string_view name);

// Free-text evidence: any of the listed entity types was extracted.
struct EntityEvidence {
  std::vector<EntityType> any_of;
};
// Structured evidence: a boolean CaseRecord field is true.
struct FlagEvidence {
  std::string field;
};
using EvidenceSpec = std::variant<EntityEvidence, FlagEvidence>;

struct SbpCondition {
  enum class Op { kAtLeast, kBelow };
  Op op = Op::kAtLeast;
  int threshold_mmhg = 90;

  bool holds(int sbp) const { return op == Op::kAtLeast ? sbp >= threshold_mmhg : sbp < threshold_mmhg; }
  std::string str() const;
};

struct ActionRule {
  std::string action_id;
  std::string description;
  EvidenceSpec evidence;
  std::optional<SbpCondition> condition;  // absent for default actions
};

struct Eligibility {
  std::vector<std::string> chief_complaints;   // case-insensitive equality
  std::vector<std::string> physical_findings;  // case-insensitive equality
  std::vector<EntityType> entities;            // any extracted mention
};

struct ScenarioProtocol {
  ScenarioType scenario;
  Eligibility eligibility;
  std::vector<ActionRule> actions;
};

class ProtocolTable {
 public:
  ProtocolTable() = default;
  explicit ProtocolTable(std::vector<ScenarioProtocol> scenarios);

  static ProtocolTable parse(std::string_view text, std::string_view source_name = "<protocols>");
  static ProtocolTable load(const std::filesystem::path& path);
  // The shipped table in data/protocols.txt.
  static ProtocolTable builtin();
  static std::string_view builtin_text();

  const std::vector<ScenarioProtocol>& scenarios() const { return scenarios_; }
  const ScenarioProtocol* find(ScenarioType scenario) const;

 private:
  std::vector<ScenarioProtocol> scenarios_;
};

// Structured boolean fields usable as FlagEvidence.
std::optional<bool> record_flag(const CaseRecord& record, std::string_view field);
bool is_known_flag(std::string_view field);

enum class VerdictStatus { kPass, kFail, kNotRequired, kIndeterminate };

std::string_view status_name(VerdictStatus status);

struct ActionVerdict {
  std::string action_id;
  VerdictStatus status = VerdictStatus::kNotRequired;

  bool required() const { return status == VerdictStatus::kPass || status == VerdictStatus::kFail; }
  // Only meaningful when required().
  bool pass() const { return status == VerdictStatus::kPass; }
  friend bool operator==(const ActionVerdict&, const ActionVerdict&) = default;
};

struct AuditResult {
  std::string incident_id;
  std::string provider_id;
  ScenarioType scenario;
  std::vector<ActionVerdict> verdicts;

  friend bool operator==(const AuditResult&, const AuditResult&) = default;
};

std::vector<ScenarioType> determine_scenarios(const CaseRecord& record, const std::vector<EntitySpan>& entities,
                                              const ProtocolTable& rules);
std::vector<ScenarioType> determine_scenarios(const CaseRecord& record, const std::vector<EntitySpan>& entities);

// One result per matched scenario. Default actions are always required;
// conditional actions are required when the SBP predicate holds and are
// indeterminate (not required) when SBP is missing. Evidence depends only on
// which entity types are present, never on their positions.
std::vector<AuditResult> evaluate_case(const CaseRecord& record, const std::vector<EntitySpan>& entities,
                                       const ProtocolTable& rules);

enum class AuditLevel { kCase, kProvider, kSystem };

std::string_view level_name(AuditLevel level);
std::optional<AuditLevel> parse_level(std::string_view name);

struct ActionTally {
  long passes = 0;
  long required = 0;
  long indeterminate = 0;
  long not_required = 0;

  // passes / required; nullopt when nothing was required.
  std::optional<double> frequency() const;
};

struct AuditReport {
  AuditLevel level = AuditLevel::kCase;
  std::vector<AuditResult> cases;  // populated at case level
  // (group, scenario, action_id) -> tally. group is the provider id at
  // provider level and "system" at system level.
  std::map<std::tuple<std::string, ScenarioType, std::string>, ActionTally> tallies;

  std::string to_json() const;
  std::string to_text() const;
};

AuditReport aggregate(const std::vector<AuditResult>& results, AuditLevel level);

}  // namespace emsaudit
