#include "emsaudit/records.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "emsaudit/error.hpp"
#include "emsaudit/io.hpp"
#include "emsaudit/random.hpp"
#include "json.hpp"

namespace emsaudit {
namespace {

using nlohmann::json;

const std::unordered_set<std::string>& known_keys() {
  static const std::unordered_set<std::string> keys = {
      "incident_id",       "provider_id",  "patient_encounter",          "chief_complaint",
      "physical_findings", "systolic_bp",  "capillary_glucose_recorded", "bleeding_control_applied",
      "report_text",       "timestamp"};
  return keys;
}

std::string require_string(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw Error(std::string("missing required field \"") + key + "\"");
  if (!it->is_string()) throw Error(std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

template <typename T>
std::optional<T> optional_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(std::string("field \"") + key + "\" has the wrong type");
  }
}

}  // namespace

CaseRecord parse_record(const std::string& json_line) {
  json obj;
  try {
    obj = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw Error(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw Error("record must be a JSON object");

  CaseRecord rec;
  rec.incident_id = require_string(obj, "incident_id");
  if (rec.incident_id.empty()) throw Error("field \"incident_id\" is empty");
  rec.report_text = require_string(obj, "report_text");
  rec.provider_id = optional_field<std::string>(obj, "provider_id").value_or("");
  rec.patient_encounter = optional_field<bool>(obj, "patient_encounter").value_or(true);
  rec.chief_complaint = optional_field<std::string>(obj, "chief_complaint");
  rec.physical_findings =
      optional_field<std::vector<std::string>>(obj, "physical_findings").value_or(std::vector<std::string>{});
  if (obj.contains("systolic_bp") && !obj["systolic_bp"].is_null() &&
      !obj["systolic_bp"].is_number_integer()) {
    throw Error("field \"systolic_bp\" must be an integer");
  }
  rec.systolic_bp = optional_field<int>(obj, "systolic_bp");
  if (rec.systolic_bp && (*rec.systolic_bp < 0 || *rec.systolic_bp > kMaxSystolicBp)) {
    throw Error("field \"systolic_bp\" out of range [0, 400]: " + std::to_string(*rec.systolic_bp));
  }
  rec.capillary_glucose_recorded = optional_field<bool>(obj, "capillary_glucose_recorded").value_or(false);
  rec.bleeding_control_applied = optional_field<bool>(obj, "bleeding_control_applied").value_or(false);
  rec.timestamp = optional_field<std::string>(obj, "timestamp").value_or("");

  json extra = json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known_keys().contains(it.key())) extra[it.key()] = it.value();
  }
  rec.extra_json = extra.dump();
  return rec;
}

std::string record_to_json(const CaseRecord& rec) {
  json obj = json::object();
  obj["incident_id"] = rec.incident_id;
  obj["provider_id"] = rec.provider_id;
  obj["patient_encounter"] = rec.patient_encounter;
  if (rec.chief_complaint) obj["chief_complaint"] = *rec.chief_complaint;
  if (!rec.physical_findings.empty()) obj["physical_findings"] = rec.physical_findings;
  if (rec.systolic_bp) obj["systolic_bp"] = *rec.systolic_bp;
  obj["capillary_glucose_recorded"] = rec.capillary_glucose_recorded;
  obj["bleeding_control_applied"] = rec.bleeding_control_applied;
  obj["report_text"] = rec.report_text;
  obj["timestamp"] = rec.timestamp;
  if (!rec.extra_json.empty() && rec.extra_json != "{}") {
    const json extra = json::parse(rec.extra_json);
    for (auto it = extra.begin(); it != extra.end(); ++it) obj[it.key()] = it.value();
  }
  return obj.dump();
}

LoadResult parse_records(const std::vector<std::string>& lines) {
  LoadResult result;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      CaseRecord rec = parse_record(line);
      if (!seen.insert(rec.incident_id).second) {
        throw Error("duplicate incident_id \"" + rec.incident_id + "\"");
      }
      result.records.push_back(std::move(rec));
    } catch (const Error& e) {
      result.errors.push_back({i + 1, e.what()});
    }
  }
  return result;
}

LoadResult load_records(const std::filesystem::path& path) {
  return parse_records(io::read_lines(path));
}

void write_records(const std::filesystem::path& path, const std::vector<CaseRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    out += record_to_json(rec);
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

FilterResult filter_encounters_counted(const std::vector<CaseRecord>& records) {
  FilterResult result;
  for (const auto& rec : records) {
    if (!rec.patient_encounter) {
      ++result.no_encounter;
    } else if (rec.report_text.empty()) {
      ++result.missing_text;
    } else {
      result.kept.push_back(rec);
    }
  }
  return result;
}

std::vector<CaseRecord> filter_encounters(const std::vector<CaseRecord>& records) {
  return filter_encounters_counted(records).kept;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitFractions& f) {
  const double sum = f.train + f.dev + f.test;
  if (f.train < 0 || f.dev < 0 || f.test < 0 || std::abs(sum - 1.0) > 1e-9) {
    throw Error("split fractions must be non-negative and sum to 1");
  }
  const auto floor_of = [n](double frac) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
  };
  const std::size_t dev = floor_of(f.dev);
  const std::size_t test = floor_of(f.test);
  return {n - dev - test, dev, test};
}

DatasetSplit split_dataset(const std::vector<CaseRecord>& records, const SplitFractions& fractions,
                           std::uint64_t seed) {
  if (records.empty()) throw Error("cannot split an empty record set");
  const auto [n_train, n_dev, n_test] = split_sizes(records.size(), fractions);

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  const auto take = [&](std::size_t begin, std::size_t count) {
    std::vector<std::size_t> picked(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                    order.begin() + static_cast<std::ptrdiff_t>(begin + count));
    std::sort(picked.begin(), picked.end());
    std::vector<CaseRecord> out;
    out.reserve(count);
    for (std::size_t idx : picked) out.push_back(records[idx]);
    return out;
  };

  DatasetSplit split;
  split.seed = seed;
  split.train = take(0, n_train);
  split.dev = take(n_train, n_dev);
  split.test = take(n_train + n_dev, n_test);
  return split;
}

}  // namespace emsaudit
