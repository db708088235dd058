#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace emsaudit {

// One ambulance incident: structured fields plus the free-text report.
struct CaseRecord {
  std::string incident_id;
  std::string provider_id;
  bool patient_encounter = true;
  std::optional<std::string> chief_complaint;
  std::vector<std::string> physical_findings;
  std::optional<int> systolic_bp;  // mmHg, [0, 400]
  bool capillary_glucose_recorded = false;
  bool bleeding_control_applied = false;
  std::string report_text;
  std::string timestamp;  // ISO-8601

  // Unknown keys from the source line as a compact JSON object ("{}" when
  // none). Re-emitted verbatim so downstream stages can add columns.
  std::string extra_json = "{}";

  friend bool operator==(const CaseRecord&, const CaseRecord&) = default;
};

inline constexpr int kMaxSystolicBp = 400;

struct RecordError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct LoadResult {
  std::vector<CaseRecord> records;
  std::vector<RecordError> errors;
};

// Parses one JSON line. Throws emsaudit::Error naming the offending field.
CaseRecord parse_record(const std::string& json_line);
std::string record_to_json(const CaseRecord& record);

// Per-line failures (bad JSON, missing incident_id/report_text, SBP out of
// range, duplicate incident_id) are collected; an unreadable file throws.
LoadResult load_records(const std::filesystem::path& path);
LoadResult parse_records(const std::vector<std::string>& lines);

void write_records(const std::filesystem::path& path, const std::vector<CaseRecord>& records);

struct FilterResult {
  std::vector<CaseRecord> kept;
  std::size_t no_encounter = 0;
  std::size_t missing_text = 0;
};

FilterResult filter_encounters_counted(const std::vector<CaseRecord>& records);
std::vector<CaseRecord> filter_encounters(const std::vector<CaseRecord>& records);

struct SplitFractions {
  double train = 0.95;
  double dev = 0.025;
  double test = 0.025;
};

struct DatasetSplit {
  std::vector<CaseRecord> train;
  std::vector<CaseRecord> dev;
  std::vector<CaseRecord> test;
  std::uint64_t seed = 0;
};

// Sizes for n records: dev = floor(n*f_dev), test = floor(n*f_test), the
// remainder goes to train.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitFractions& fractions);

// Seeded random partition; each split keeps the input's relative order.
DatasetSplit split_dataset(const std::vector<CaseRecord>& records, const SplitFractions& fractions,
                           std::uint64_t seed);

}  // namespace emsaudit
