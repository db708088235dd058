#pragma once

// Twelve hand-built cases touching every branch of the shipped protocol
// table: both SBP thresholds on both sides, missing SBP, and bleeding found
// through the structured field or through an extracted entity.

#include <string>
#include <vector>

#include "emsaudit/audit.hpp"

namespace fixture {

using emsaudit::EntitySpan;
using emsaudit::EntityType;
using emsaudit::ScenarioType;
using emsaudit::VerdictStatus;

struct Expected {
  ScenarioType scenario;
  std::vector<std::pair<std::string, VerdictStatus>> verdicts;
};

struct AuditCase {
  emsaudit::CaseRecord record;
  std::vector<EntitySpan> entities;
  std::vector<Expected> expected;
};

inline std::vector<EntitySpan> mentions(std::initializer_list<EntityType> types) {
  std::vector<EntitySpan> out;
  int pos = 0;
  for (EntityType t : types) {
    out.push_back({t, pos, pos});
    pos += 2;
  }
  return out;
}

inline emsaudit::CaseRecord record(std::string id, std::string provider, std::optional<std::string> complaint,
                                   std::optional<int> sbp, bool glucose = false, bool bleeding_control = false,
                                   std::vector<std::string> findings = {}) {
  emsaudit::CaseRecord r;
  r.incident_id = std::move(id);
  r.provider_id = std::move(provider);
  r.chief_complaint = std::move(complaint);
  r.systolic_bp = sbp;
  r.capillary_glucose_recorded = glucose;
  r.bleeding_control_applied = bleeding_control;
  r.physical_findings = std::move(findings);
  r.report_text = "fixture";
  return r;
}

inline std::vector<AuditCase> audit_cases() {
  using E = EntityType;
  using S = ScenarioType;
  constexpr auto P = VerdictStatus::kPass;
  constexpr auto F = VerdictStatus::kFail;
  constexpr auto N = VerdictStatus::kNotRequired;
  constexpr auto I = VerdictStatus::kIndeterminate;
  const std::vector<std::string> bleeding{"Active Bleeding"};
  return {
      {record("C01", "P1", "Chest Pain", 100), mentions({E::kAspirin, E::kEcg, E::kGtn}),
       {{S::kAcuteCoronarySyndrome, {{"aspirin", P}, {"ecg", P}, {"gtn", P}}}}},
      {record("C02", "P1", "Chest Pain", 90), mentions({E::kAspirin}),
       {{S::kAcuteCoronarySyndrome, {{"aspirin", P}, {"ecg", F}, {"gtn", F}}}}},
      {record("C03", "P1", "Chest Pain", 89), mentions({E::kAspirin, E::kEcg, E::kGtn}),
       {{S::kAcuteCoronarySyndrome, {{"aspirin", P}, {"ecg", P}, {"gtn", N}}}}},
      {record("C04", "P1", "Chest Pain", std::nullopt), mentions({E::kEcg}),
       {{S::kAcuteCoronarySyndrome, {{"aspirin", F}, {"ecg", P}, {"gtn", I}}}}},
      {record("C05", "P2", "Suspected Stroke", 140, true), mentions({E::kStrokeAssessment}),
       {{S::kStroke, {{"stroke_scale", P}, {"glucose", P}}}}},
      {record("C06", "P2", "SUSPECTED STROKE", std::nullopt, false), mentions({E::kEcg}),
       {{S::kStroke, {{"stroke_scale", F}, {"glucose", F}}}}},
      {record("C07", "P2", "Fall", 75, false, true, bleeding), mentions({E::kIvCannula, E::kNormalSaline}),
       {{S::kBleedingPatient, {{"bleeding_control", P}, {"iv_access", P}, {"normal_saline", P}}}}},
      {record("C08", "P2", std::nullopt, 75, false, false), mentions({E::kBleeding, E::kIvCannula}),
       {{S::kBleedingPatient, {{"bleeding_control", F}, {"iv_access", P}, {"normal_saline", F}}}}},
      {record("C09", "P3", "Fall", 80, false, true, bleeding), {},
       {{S::kBleedingPatient, {{"bleeding_control", P}, {"iv_access", N}, {"normal_saline", N}}}}},
      {record("C10", "P3", "Assault", 79, false, true), mentions({E::kBleeding}),
       {{S::kBleedingPatient, {{"bleeding_control", P}, {"iv_access", F}, {"normal_saline", F}}}}},
      {record("C11", "P3", "Fall", std::nullopt, false, false, {"active bleeding"}), {},
       {{S::kBleedingPatient, {{"bleeding_control", F}, {"iv_access", I}, {"normal_saline", I}}}}},
      {record("C12", "P3", "chest pain", 70), mentions({E::kBleeding, E::kAspirin, E::kEcg, E::kNormalSaline}),
       {{S::kAcuteCoronarySyndrome, {{"aspirin", P}, {"ecg", P}, {"gtn", N}}},
        {S::kBleedingPatient, {{"bleeding_control", F}, {"iv_access", F}, {"normal_saline", P}}}}},
  };
}

// Compares evaluate_case output with the expectation; returns a description
// of the first mismatch or an empty string.
inline std::string check_case(const AuditCase& c, const std::vector<emsaudit::AuditResult>& got) {
  if (got.size() != c.expected.size()) {
    return c.record.incident_id + ": expected " + std::to_string(c.expected.size()) + " scenarios, got " +
           std::to_string(got.size());
  }
  for (std::size_t s = 0; s < got.size(); ++s) {
    const auto& want = c.expected[s];
    if (got[s].scenario != want.scenario) return c.record.incident_id + ": scenario order";
    if (got[s].verdicts.size() != want.verdicts.size()) return c.record.incident_id + ": verdict count";
    for (std::size_t v = 0; v < want.verdicts.size(); ++v) {
      if (got[s].verdicts[v].action_id != want.verdicts[v].first ||
          got[s].verdicts[v].status != want.verdicts[v].second) {
        return c.record.incident_id + ": " + want.verdicts[v].first + " expected " +
               std::string(emsaudit::status_name(want.verdicts[v].second)) + ", got " +
               std::string(emsaudit::status_name(got[s].verdicts[v].status));
      }
    }
  }
  return {};
}

}  // namespace fixture
