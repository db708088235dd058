#include "emsaudit/synth.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>

#include "emsaudit/error.hpp"
#include "emsaudit/preprocess.hpp"
#include "emsaudit/random.hpp"

namespace emsaudit {
namespace {

enum class CaseKind { kAcs, kStroke, kBleedingStructured, kBleedingText, kOther };
enum class SbpBand { kMissing, kBelow80, kFrom80To89, kAtLeast90 };

constexpr CaseKind kKinds[] = {CaseKind::kAcs, CaseKind::kStroke, CaseKind::kBleedingStructured,
                               CaseKind::kBleedingText, CaseKind::kOther};
constexpr SbpBand kBands[] = {SbpBand::kMissing, SbpBand::kBelow80, SbpBand::kFrom80To89, SbpBand::kAtLeast90};

const std::vector<std::string> kAcsHistory = {
    "HX FROM PT C/O CHEST PAIN X 2/7 CRUSHING IN NATURE, NON-RADIATING.",
    "PT C/O CHEST TIGHTNESS SINCE 0600HRS, RADIATING TO LT SHOULDER.",
    "HX FR WIFE- PT C/O CENTRAL CHEST PAIN WHILE CLIMBING STAIRS.",
};
const std::vector<std::string> kStrokeHistory = {
    "HX FROM HELPER- SUDDEN ONSET OF LT LIMBS NUMBNESS @ 1200HRS.",
    "NOK NOTED PT UNABLE TO WALK STEADILY SINCE THIS MORNING.",
    "HX FROM PT C/O RT SIDED WEAKNESS, LAST SEEN WELL @ 0900HRS.",
};
const std::vector<std::string> kTraumaHistory = {
    "HX FR PT- PT FELL DUE TO SLIPPERY FLOOR, HIT HEAD ON TABLE.",
    "PT ALLEGEDLY ASSAULTED WITH KNIFE, CUT ON LT FOREARM.",
    "PT HAD A SELF INFLICTED WOUND ON RT WRIST WITH A PENKNIFE.",
};
const std::vector<std::string> kOtherHistory = {
    "PT C/O ABDOMINAL PAIN SINCE YESTERDAY, NO DIARRHOEA.",
    "PT C/O SOB SINCE MORNING, KNOWN HX OF ASTHMA.",
    "PT C/O GIDDINESS WHILE WALKING, NO LOC.",
    "NOK CALLED AS PT WAS FOUND UNRESPONSIVE ON THE COUCH.",
};
const std::vector<std::string> kOtherComplaints = {"Abdominal Pain", "Breathlessness", "Giddiness", "Fever"};
const std::vector<std::string> kTraumaComplaints = {"Fall", "Assault", "Laceration"};
const std::vector<std::string> kArrival = {
    "O/A PT WAS SITTING, ALERT, CONSCIOUS.",
    "O/A- PT LYING ON FLOOR, CONSCIOUS.",
    "O/A PT SITTED ON CHAIR, GCS 15.",
};
const std::vector<std::string> kFillers = {
    "NO TRAUMA.", "NO FALL.", "AFEBRILE.", "PT DENY GIDDINESS/NAUSEA.", "PUPILS EQUAL AND REACTIVE.",
    "LUNGS CLEAR BILATERALLY.", "PT NOT PALLOR OR DIAPHORETIC.", "NO KNOWN DRUG ALLERGY.",
};
const std::vector<std::string> kClosings = {
    "NO OTHER MEDICAL COMPLAINTS.", "CONVEYED TO A&E.", "PT STABLE THROUGHOUT JOURNEY.",
    "PT CONVEYED TO HOSPITAL FOR FURTHER MX.",
};

struct Segment {
  std::string raw;
  std::optional<EntityType> entity;
};

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(' ') - b + 1);
}

bool is_digit_token(const std::string& t) {
  return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '%'; });
}

// Raw-text rendering of a normalized phrase in paramedic style: "0 9%" becomes
// "0.9%", runs of single letters are joined with '/', and most mentions are
// upper case. normalize() maps the rendering back to the phrase.
std::string render_mention(const std::string& phrase, Rng& rng) {
  const auto tokens = tokenize(phrase).tokens;
  std::string raw;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) {
      const auto& a = tokens[i - 1];
      const auto& b = tokens[i];
      if (is_digit_token(a) && is_digit_token(b) && std::isdigit(static_cast<unsigned char>(a.back()))) {
        raw += '.';
      } else if (a.size() == 1 && b.size() == 1) {
        raw += '/';
      } else {
        raw += ' ';
      }
    }
    raw += tokens[i];
  }
  return rng.bernoulli(0.75) ? upper(raw) : raw;
}

std::string format_timestamp(std::size_t index) {
  using namespace std::chrono;
  const sys_seconds base = sys_days{year{2019} / April / 1};
  const sys_seconds at = base + minutes{static_cast<long>(index) * 47};
  const sys_days day = floor<days>(at);
  const year_month_day ymd{day};
  const hh_mm_ss hms{at - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

EntityType draw_entity(const SynthConfig& cfg, Rng& rng) {
  double total = 0.0;
  for (const auto& [e, p] : cfg.entity_frequency) total += p;
  const double spread = std::max(0.0, 1.0 - total) / static_cast<double>(kNumEntityTypes);
  double u = rng.uniform();
  for (EntityType e : all_entity_types()) {
    const auto it = cfg.entity_frequency.find(e);
    u -= (it == cfg.entity_frequency.end() ? 0.0 : it->second) + spread;
    if (u < 0) return e;
  }
  return all_entity_types().back();
}

}  // namespace

std::vector<MentionTemplate> default_mention_templates() {
  using C = EntityCategory;
  return {
      {C::kMedication, "GIVEN {} STAT."},
      {C::kMedication, "{} ADMINISTERED."},
      {C::kMedication, "PT WAS GIVEN {} BY PARAMEDIC."},
      {C::kMedication, "OFFERED {}, PT ACCEPTED."},
      {C::kClinicalProcedure, "{} DONE."},
      {C::kClinicalProcedure, "{} PERFORMED ON SCENE."},
      {C::kClinicalProcedure, "ATTEMPTED {}."},
      {C::kClinicalFinding, "NOTED {}."},
      {C::kClinicalFinding, "O/E- {} OVER WOUND SITE."},
      {std::nullopt, "NOTED {} @ SCENE."},
  };
}

std::map<EntityType, double> default_entity_profile() {
  // Mention counts per entity in the training split of the source corpus.
  const std::pair<EntityType, double> counts[] = {
      {EntityType::kEcg, 26688},        {EntityType::kStrokeAssessment, 6571}, {EntityType::kIvCannula, 2054},
      {EntityType::kBurnsCooling, 57},  {EntityType::kValsalva, 30},           {EntityType::kBleeding, 7422},
      {EntityType::kObviousDeath, 323}, {EntityType::kGtn, 2648},              {EntityType::kAspirin, 1644},
      {EntityType::kNormalSaline, 1371}, {EntityType::kPenthrox, 568},         {EntityType::kDextrose, 447},
      {EntityType::kAdrenaline, 412},   {EntityType::kDiazepam, 394},          {EntityType::kSalbutamol, 1794},
      {EntityType::kTramadol, 310},     {EntityType::kSyntometrine, 45},
  };
  double total = 0;
  for (const auto& [e, n] : counts) total += n;
  std::map<EntityType, double> profile;
  for (const auto& [e, n] : counts) profile[e] = n / total;
  return profile;
}

void SynthConfig::validate() const {
  double total = 0;
  for (const auto& [e, p] : entity_frequency) {
    if (p < 0) throw Error("entity frequencies must be non-negative");
    total += p;
  }
  if (total > 1.0 + 1e-9) throw Error("entity frequencies sum to more than 1");
  if (misspelling_rate < 0 || misspelling_rate > 1) throw Error("misspelling_rate must be in [0, 1]");
  if (templates.empty()) throw Error("template pool is empty");
  for (const auto& t : templates) {
    if (t.text.find("{}") == std::string::npos) throw Error("template without {} slot: " + t.text);
  }
  if (min_mentions < 0 || max_mentions < min_mentions) throw Error("invalid mention count range");
  if (providers <= 0) throw Error("providers must be positive");
}

std::string misspell(const std::string& phrase, Rng& rng) {
  // Candidate positions: letters inside tokens; deletions need a token of
  // length >= 2 so no token disappears.
  std::vector<std::size_t> letters;
  std::vector<std::size_t> deletable;
  std::size_t token_start = 0;
  for (std::size_t i = 0; i <= phrase.size(); ++i) {
    if (i == phrase.size() || phrase[i] == ' ') {
      for (std::size_t k = token_start; k < i; ++k) {
        if (std::isalpha(static_cast<unsigned char>(phrase[k]))) {
          letters.push_back(k);
          if (i - token_start >= 2) deletable.push_back(k);
        }
      }
      token_start = i + 1;
    }
  }
  if (letters.empty()) return phrase;
  const auto letter = [&rng] { return static_cast<char>('a' + rng.below(26)); };
  std::string out = phrase;
  switch (rng.below(deletable.empty() ? 2 : 3)) {
    case 0: {  // substitute
      const std::size_t at = letters[rng.below(letters.size())];
      char c;
      do {
        c = letter();
      } while (c == out[at]);
      out[at] = c;
      break;
    }
    case 1: {  // insert before or after a letter
      const std::size_t at = letters[rng.below(letters.size())] + rng.below(2);
      out.insert(out.begin() + static_cast<std::ptrdiff_t>(at), letter());
      break;
    }
    default:  // delete
      out.erase(deletable[rng.below(deletable.size())], 1);
      break;
  }
  return out;
}

std::vector<SyntheticDocument> generate_corpus(const SynthConfig& cfg, const Gazetteer& gazetteer) {
  cfg.validate();
  Rng rng(cfg.seed);

  std::map<EntityType, std::vector<const Synonym*>> by_entity;
  for (EntityType e : all_entity_types()) {
    by_entity[e] = gazetteer.synonyms_for(e);
  }

  // Every (case kind, SBP band) cell appears once per block, in shuffled order.
  std::vector<std::pair<CaseKind, SbpBand>> cells;
  for (CaseKind k : kKinds) {
    for (SbpBand b : kBands) cells.emplace_back(k, b);
  }
  std::vector<std::pair<CaseKind, SbpBand>> block;

  std::vector<SyntheticDocument> docs;
  docs.reserve(cfg.n_documents);
  for (std::size_t n = 0; n < cfg.n_documents; ++n) {
    if (block.empty()) {
      block = cells;
      rng.shuffle(std::span<std::pair<CaseKind, SbpBand>>(block));
    }
    const auto [kind, band] = block.back();
    block.pop_back();

    SyntheticDocument doc;
    CaseRecord& rec = doc.record;
    char id[32];
    std::snprintf(id, sizeof id, "SYN%06zu", n + 1);
    rec.incident_id = id;
    char provider[16];
    std::snprintf(provider, sizeof provider, "P%02d", static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.providers))) + 1);
    rec.provider_id = provider;
    rec.timestamp = format_timestamp(n);
    rec.capillary_glucose_recorded = rng.bernoulli(0.7);
    rec.bleeding_control_applied = rng.bernoulli(0.7);
    switch (band) {
      case SbpBand::kMissing: break;
      case SbpBand::kBelow80: rec.systolic_bp = rng.between(60, 79); break;
      case SbpBand::kFrom80To89: rec.systolic_bp = rng.between(80, 89); break;
      case SbpBand::kAtLeast90: rec.systolic_bp = rng.between(90, 180); break;
    }

    std::vector<Segment> segments;
    std::vector<EntityType> mentions;
    switch (kind) {
      case CaseKind::kAcs:
        rec.chief_complaint = "Chest Pain";
        segments.push_back({rng.pick(kAcsHistory), {}});
        break;
      case CaseKind::kStroke:
        rec.chief_complaint = "Suspected Stroke";
        segments.push_back({rng.pick(kStrokeHistory), {}});
        break;
      case CaseKind::kBleedingStructured:
        rec.chief_complaint = rng.pick(kTraumaComplaints);
        rec.physical_findings = {"Active Bleeding"};
        segments.push_back({rng.pick(kTraumaHistory), {}});
        break;
      case CaseKind::kBleedingText:
        rec.chief_complaint = rng.pick(kTraumaComplaints);
        segments.push_back({rng.pick(kTraumaHistory), {}});
        if (cfg.scenario_evidence) mentions.push_back(EntityType::kBleeding);
        break;
      case CaseKind::kOther:
        rec.chief_complaint = rng.pick(kOtherComplaints);
        segments.push_back({rng.pick(kOtherHistory), {}});
        break;
    }
    segments.push_back({rng.pick(kArrival), {}});
    if (rec.systolic_bp) {
      char vitals[96];
      std::snprintf(vitals, sizeof vitals, "BP %d/%d HR %d RA SPO2 %d%%.", *rec.systolic_bp,
                    *rec.systolic_bp * 3 / 5, rng.between(55, 130), rng.between(90, 100));
      segments.push_back({vitals, {}});
    } else {
      segments.push_back({"BP NOT OBTAINED, PT UNCOOPERATIVE.", {}});
    }

    const int count = rng.between(cfg.min_mentions, cfg.max_mentions);
    for (int m = 0; m < count; ++m) mentions.push_back(draw_entity(cfg, rng));
    for (EntityType e : mentions) {
      if (rng.bernoulli(0.3)) segments.push_back({rng.pick(kFillers), {}});
      std::vector<const MentionTemplate*> usable;
      for (const auto& t : cfg.templates) {
        if (!t.category || *t.category == entity_category(e)) usable.push_back(&t);
      }
      if (usable.empty()) throw Error("no mention template for entity " + std::string(entity_name(e)));
      const auto& synonyms = by_entity.at(e);
      if (synonyms.empty()) throw Error("gazetteer has no synonym for " + std::string(entity_name(e)));
      const MentionTemplate& tmpl = *rng.pick(usable);
      const Synonym& syn = *rng.pick(synonyms);
      std::string phrase = syn.phrase;
      if (syn.fuzzy_eligible() && rng.bernoulli(cfg.misspelling_rate)) {
        phrase = misspell(phrase, rng);
        ++doc.misspelled_mentions;
      }
      const std::size_t slot = tmpl.text.find("{}");
      segments.push_back({trim(tmpl.text.substr(0, slot)), {}});
      segments.push_back({render_mention(phrase, rng), e});
      segments.push_back({trim(tmpl.text.substr(slot + 2)), {}});
    }
    segments.push_back({rng.pick(kClosings), {}});

    int position = 0;
    for (const auto& seg : segments) {
      const bool attach = !seg.raw.empty() && std::ispunct(static_cast<unsigned char>(seg.raw.front())) &&
                          seg.raw.front() != '@';
      if (!rec.report_text.empty() && !seg.raw.empty() && !attach) rec.report_text += ' ';
      rec.report_text += seg.raw;
      const auto toks = tokenize(normalize(seg.raw)).tokens;
      if (seg.entity) {
        doc.gold.push_back({*seg.entity, position, position + static_cast<int>(toks.size()) - 1});
      }
      position += static_cast<int>(toks.size());
    }
    doc.tokens = tokenize(normalize(rec.report_text)).tokens;
    if (static_cast<int>(doc.tokens.size()) != position) {
      throw Error("internal: segment tokenization drifted for " + rec.incident_id);
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace emsaudit
