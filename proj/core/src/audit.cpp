#include "emsaudit/audit.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>

#include "emsaudit/error.hpp"
#include "emsaudit/io.hpp"
#include "json.hpp"

namespace emsaudit {
namespace {

#include "builtin_protocols.inc"

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

// Splits on whitespace; double-quoted runs form one word.
std::vector<std::string> words(std::string_view line, const std::string& where) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    if (line[i] == '#') break;
    std::string word;
    if (line[i] == '"') {
      const std::size_t close = line.find('"', i + 1);
      if (close == std::string_view::npos) throw Error(where + "unterminated quote");
      word = std::string(line.substr(i + 1, close - i - 1));
      i = close + 1;
    } else {
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) word += line[i++];
    }
    out.push_back(std::move(word));
  }
  return out;
}

std::vector<EntityType> entity_list(const std::string& csv, const std::string& where) {
  std::vector<EntityType> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    const std::string name = csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const auto e = parse_entity(name);
    if (!e) throw Error(where + "unknown entity " + name);
    out.push_back(*e);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

bool has_entity(const std::vector<EntitySpan>& entities, const std::vector<EntityType>& any_of) {
  return std::any_of(entities.begin(), entities.end(), [&](const EntitySpan& s) {
    return std::find(any_of.begin(), any_of.end(), s.entity) != any_of.end();
  });
}

bool eligible(const CaseRecord& rec, const std::vector<EntitySpan>& entities, const Eligibility& el) {
  if (rec.chief_complaint) {
    for (const auto& cc : el.chief_complaints) {
      if (iequals(*rec.chief_complaint, cc)) return true;
    }
  }
  for (const auto& finding : rec.physical_findings) {
    for (const auto& wanted : el.physical_findings) {
      if (iequals(finding, wanted)) return true;
    }
  }
  return has_entity(entities, el.entities);
}

}  // namespace

std::string_view scenario_name(ScenarioType s) {
  switch (s) {
    case ScenarioType::kAcuteCoronarySyndrome: return "AcuteCoronarySyndrome";
    case ScenarioType::kStroke: return "Stroke";
    case ScenarioType::kBleedingPatient: return "BleedingPatient";
  }
  return "";
}

std::optional<ScenarioType> parse_scenario(std::string_view name) {
  for (auto s : {ScenarioType::kAcuteCoronarySyndrome, ScenarioType::kStroke, ScenarioType::kBleedingPatient}) {
    if (name == scenario_name(s)) return s;
  }
  return std::nullopt;
}

std::string SbpCondition::str() const {
  return std::string("sbp ") + (op == Op::kAtLeast ? ">= " : "< ") + std::to_string(threshold_mmhg);
}

ProtocolTable::ProtocolTable(std::vector<ScenarioProtocol> scenarios) : scenarios_(std::move(scenarios)) {}

ProtocolTable ProtocolTable::parse(std::string_view text, std::string_view source_name) {
  std::vector<ScenarioProtocol> scenarios;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::set<ScenarioType> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = std::string(source_name) + ":" + std::to_string(line_no) + ": ";
    const auto w = words(line, where);
    if (w.empty()) continue;
    if (w[0] == "scenario") {
      if (w.size() != 2) throw Error(where + "expected: scenario <name>");
      const auto s = parse_scenario(w[1]);
      if (!s) throw Error(where + "unknown scenario " + w[1]);
      if (!seen.insert(*s).second) throw Error(where + "scenario " + w[1] + " defined twice");
      scenarios.push_back({*s, {}, {}});
      continue;
    }
    if (scenarios.empty()) throw Error(where + "rule outside of a scenario block");
    ScenarioProtocol& current = scenarios.back();
    if (w[0] == "eligible") {
      if (w.size() != 3) throw Error(where + "expected: eligible <kind> <value>");
      if (w[1] == "chief_complaint") {
        current.eligibility.chief_complaints.push_back(w[2]);
      } else if (w[1] == "physical_finding") {
        current.eligibility.physical_findings.push_back(w[2]);
      } else if (w[1] == "entity") {
        const auto es = entity_list(w[2], where);
        current.eligibility.entities.insert(current.eligibility.entities.end(), es.begin(), es.end());
      } else {
        throw Error(where + "unknown eligibility kind " + w[1]);
      }
    } else if (w[0] == "action") {
      if (w.size() != 5 && w.size() != 9) {
        throw Error(where + "expected: action <id> \"<description>\" entity|flag <value> [when sbp <op> <mmHg>]");
      }
      ActionRule rule;
      rule.action_id = w[1];
      rule.description = w[2];
      if (w[3] == "entity") {
        rule.evidence = EntityEvidence{entity_list(w[4], where)};
      } else if (w[3] == "flag") {
        if (!is_known_flag(w[4])) throw Error(where + "unknown structured flag " + w[4]);
        rule.evidence = FlagEvidence{w[4]};
      } else {
        throw Error(where + "evidence must be entity or flag");
      }
      if (w.size() == 9) {
        if (w[5] != "when" || w[6] != "sbp") throw Error(where + "expected: when sbp <op> <mmHg>");
        SbpCondition cond;
        if (w[7] == ">=") {
          cond.op = SbpCondition::Op::kAtLeast;
        } else if (w[7] == "<") {
          cond.op = SbpCondition::Op::kBelow;
        } else {
          throw Error(where + "SBP operator must be >= or <");
        }
        try {
          cond.threshold_mmhg = std::stoi(w[8]);
        } catch (const std::exception&) {
          throw Error(where + "invalid threshold " + w[8]);
        }
        if (cond.threshold_mmhg != 90 && cond.threshold_mmhg != 80) {
          throw Error(where + "SBP threshold must be 90 or 80 mmHg");
        }
        rule.condition = cond;
      }
      for (const auto& existing : current.actions) {
        if (existing.action_id == rule.action_id) throw Error(where + "duplicate action " + rule.action_id);
      }
      current.actions.push_back(std::move(rule));
    } else {
      throw Error(where + "unknown directive " + w[0]);
    }
  }
  return ProtocolTable(std::move(scenarios));
}

ProtocolTable ProtocolTable::load(const std::filesystem::path& path) {
  return parse(io::read_file(path), path.string());
}

std::string_view ProtocolTable::builtin_text() { return kBuiltinProtocols; }

ProtocolTable ProtocolTable::builtin() { return parse(kBuiltinProtocols, "<builtin protocols>"); }

const ScenarioProtocol* ProtocolTable::find(ScenarioType scenario) const {
  for (const auto& s : scenarios_) {
    if (s.scenario == scenario) return &s;
  }
  return nullptr;
}

std::optional<bool> record_flag(const CaseRecord& record, std::string_view field) {
  if (field == "capillary_glucose_recorded") return record.capillary_glucose_recorded;
  if (field == "bleeding_control_applied") return record.bleeding_control_applied;
  if (field == "patient_encounter") return record.patient_encounter;
  return std::nullopt;
}

bool is_known_flag(std::string_view field) { return record_flag(CaseRecord{}, field).has_value(); }

std::string_view status_name(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::kPass: return "pass";
    case VerdictStatus::kFail: return "fail";
    case VerdictStatus::kNotRequired: return "not_required";
    case VerdictStatus::kIndeterminate: return "indeterminate";
  }
  return "";
}

std::vector<ScenarioType> determine_scenarios(const CaseRecord& record, const std::vector<EntitySpan>& entities,
                                              const ProtocolTable& rules) {
  std::vector<ScenarioType> out;
  for (const auto& s : rules.scenarios()) {
    if (eligible(record, entities, s.eligibility)) out.push_back(s.scenario);
  }
  return out;
}

std::vector<ScenarioType> determine_scenarios(const CaseRecord& record, const std::vector<EntitySpan>& entities) {
  static const ProtocolTable table = ProtocolTable::builtin();
  return determine_scenarios(record, entities, table);
}

std::vector<AuditResult> evaluate_case(const CaseRecord& record, const std::vector<EntitySpan>& entities,
                                       const ProtocolTable& rules) {
  std::vector<AuditResult> results;
  for (ScenarioType scenario : determine_scenarios(record, entities, rules)) {
    const ScenarioProtocol* protocol = rules.find(scenario);
    AuditResult result{record.incident_id, record.provider_id, scenario, {}};
    for (const auto& action : protocol->actions) {
      ActionVerdict verdict{action.action_id, VerdictStatus::kNotRequired};
      bool required = true;
      if (action.condition) {
        if (!record.systolic_bp) {
          verdict.status = VerdictStatus::kIndeterminate;
          required = false;
        } else {
          required = action.condition->holds(*record.systolic_bp);
        }
      }
      if (required) {
        const bool present = std::visit(
            [&](const auto& ev) {
              using T = std::decay_t<decltype(ev)>;
              if constexpr (std::is_same_v<T, EntityEvidence>) {
                return has_entity(entities, ev.any_of);
              } else {
                return record_flag(record, ev.field).value_or(false);
              }
            },
            action.evidence);
        verdict.status = present ? VerdictStatus::kPass : VerdictStatus::kFail;
      }
      result.verdicts.push_back(std::move(verdict));
    }
    results.push_back(std::move(result));
  }
  return results;
}

std::string_view level_name(AuditLevel level) {
  switch (level) {
    case AuditLevel::kCase: return "case";
    case AuditLevel::kProvider: return "provider";
    case AuditLevel::kSystem: return "system";
  }
  return "";
}

std::optional<AuditLevel> parse_level(std::string_view name) {
  for (auto l : {AuditLevel::kCase, AuditLevel::kProvider, AuditLevel::kSystem}) {
    if (name == level_name(l)) return l;
  }
  return std::nullopt;
}

std::optional<double> ActionTally::frequency() const {
  if (required == 0) return std::nullopt;
  return static_cast<double>(passes) / static_cast<double>(required);
}

AuditReport aggregate(const std::vector<AuditResult>& results, AuditLevel level) {
  if (results.empty()) throw Error("no audit results to aggregate");
  AuditReport report;
  report.level = level;
  if (level == AuditLevel::kCase) {
    report.cases = results;
    return report;
  }
  for (const auto& r : results) {
    const std::string group = level == AuditLevel::kProvider ? r.provider_id : "system";
    for (const auto& v : r.verdicts) {
      ActionTally& t = report.tallies[{group, r.scenario, v.action_id}];
      switch (v.status) {
        case VerdictStatus::kPass:
          ++t.passes;
          ++t.required;
          break;
        case VerdictStatus::kFail: ++t.required; break;
        case VerdictStatus::kIndeterminate: ++t.indeterminate; break;
        case VerdictStatus::kNotRequired: ++t.not_required; break;
      }
    }
  }
  return report;
}

std::string AuditReport::to_json() const {
  using nlohmann::json;
  json out = {{"level", level_name(level)}};
  if (level == AuditLevel::kCase) {
    json cases_json = json::array();
    for (const auto& r : cases) {
      json verdicts = json::array();
      for (const auto& v : r.verdicts) {
        verdicts.push_back({{"action_id", v.action_id}, {"required", v.required()}, {"status", status_name(v.status)}});
      }
      cases_json.push_back({{"incident_id", r.incident_id},
                            {"provider_id", r.provider_id},
                            {"scenario", scenario_name(r.scenario)},
                            {"verdicts", verdicts}});
    }
    out["cases"] = cases_json;
  } else {
    json rows = json::array();
    for (const auto& [key, t] : tallies) {
      const auto& [group, scenario, action] = key;
      const auto freq = t.frequency();
      rows.push_back({{level == AuditLevel::kProvider ? "provider_id" : "group", group},
                      {"scenario", scenario_name(scenario)},
                      {"action_id", action},
                      {"passes", t.passes},
                      {"required", t.required},
                      {"indeterminate", t.indeterminate},
                      {"not_required", t.not_required},
                      {"frequency", freq ? json(*freq) : json(nullptr)}});
    }
    out["actions"] = rows;
  }
  return out.dump(2) + "\n";
}

std::string AuditReport::to_text() const {
  std::ostringstream out;
  char line[200];
  if (level == AuditLevel::kCase) {
    std::snprintf(line, sizeof line, "%-14s %-10s %-22s %-18s %s\n", "incident", "provider", "scenario", "action",
                  "verdict");
    out << line;
    for (const auto& r : cases) {
      for (const auto& v : r.verdicts) {
        std::snprintf(line, sizeof line, "%-14s %-10s %-22s %-18s %s\n", r.incident_id.c_str(),
                      r.provider_id.c_str(), std::string(scenario_name(r.scenario)).c_str(), v.action_id.c_str(),
                      std::string(status_name(v.status)).c_str());
        out << line;
      }
    }
    return out.str();
  }
  std::snprintf(line, sizeof line, "%-12s %-22s %-18s %7s %9s %14s %10s\n",
                level == AuditLevel::kProvider ? "provider" : "group", "scenario", "action", "passes", "required",
                "indeterminate", "frequency");
  out << line;
  for (const auto& [key, t] : tallies) {
    const auto& [group, scenario, action] = key;
    const auto freq = t.frequency();
    char f[16];
    if (freq) {
      std::snprintf(f, sizeof f, "%.3f", *freq);
    } else {
      std::snprintf(f, sizeof f, "N/A");
    }
    std::snprintf(line, sizeof line, "%-12s %-22s %-18s %7ld %9ld %14ld %10s\n", group.c_str(),
                  std::string(scenario_name(scenario)).c_str(), action.c_str(), t.passes, t.required,
                  t.indeterminate, f);
    out << line;
  }
  return out.str();
}

}  // namespace emsaudit
