#pragma once

// The three published before/after report pairs. The printed "after" strings
// contain two edits that normalization cannot produce; each is listed as an
// exact (ours, published) substitution.

#include <string>
#include <vector>

namespace fixture {

struct KnownDifference {
  std::string ours;
  std::string published;
};

struct PreprocessExample {
  std::string category;
  std::string original;
  std::string published;
  std::vector<KnownDifference> differences;
};

inline std::vector<PreprocessExample> published_examples() {
  return {
      {"acs",
       "HX FROM PT C/O CHEST PAIN X 2/7 CRUSHING IN NATURE, NON-RADIATING. NO TRAUMA. NO FALL. O/A PT WAS SITTING, "
       "ALERT, CONSCIOUS. PT WAS GTN 1 TAB BY SN. O/E PT NOT PALLOR OR DIAPHORETIC. NO SOB/ GIDDINESS/ NAUSEA/ "
       "VOMITTING. AFEBRILE. GIVEN 300MG ASPIRIN STAT DOSE & 1 GTN SPRAY 0.4MG WITH TOTAL RELIEVED. 12 LEAD ECG "
       "DONE: SINUS RHYTHM. NO OTHER MEDICAL COMPLAINTS",
       "hx from pt c o chest pain x 2 7 crushing in nature non radiating no trauma no fall o a pt was sitting alert "
       "conscious pt was gtn 1 tab by sn o e pt not pallor or diaphoretic no sob giddiness nausea vomiting afebrile "
       "given 300mg aspirin stat dose & 1 gtn spray 0 4mg with total relieved 12 lead ecg done sinus rhythm no other "
       "medical complaints",
       {{"nausea vomitting afebrile", "nausea vomiting afebrile"}}},
      {"stroke",
       "hx from helper, @9m noted pt turns lethargic, but able to enunciate words clearly, @ 12pm, noted pt slurred "
       "speech w slight rt facial droop. @2pm, tried to feed pt water, and noted dysphagia, drooling. went to see gp "
       "@ 310pm, noted to send to a&e. o/a, pt sitting, gcs 15, slight dementia. no c/o unwell. o/e, noted slight rt "
       "facial droop+ slurred speech. no bilateral weakness. pt is off hypertension med for a long time. usual bp @ "
       "115/57",
       "hx from helper 9m noted pt turns lethargic but able to enunciate words clearly 12pm noted pt slurred speech w "
       "slight rt facial droop 2pm tried to feed pt water and noted dysphagia drooling went to see gp 310pm noted to "
       "send to a&e o a pt sitting gcs 15 slight dementia no c o unwell o e noted slight rt facial droop slurred "
       "speech no bilateral weakness pt is off hypertension med for a long time usual bp 115 57",
       {}},
      {"bleeding",
       "O/A- PT SITTING CONSCIOUS ALERT. HX FR PT- PT FELL DUE TO SLIPPERY FLOOR, UNSURE HIT WHAT OBJECT NOTED "
       "BLEEDING, NO LOC. O/E- NOTED 3CM LACERATION ACTIVE BLEEDING. NOTED DISLOCATED RT SHOULDER, PT CLAIMED "
       "NUMBNESS BUT IS DUE TO FALL 2/12 AGO, DID NOT SEE DR. PT UNABLE TO GIVE FURTHER HX AS HE DOES NOT WISH TO "
       "TALK MUCH.",
       "o a pt sitting conscious alert hx fr pt fell due to slippery floor unsure hit what object noted bleeding no "
       "loc o e noted 3cm laceration active bleeding noted dislocated rt shoulder pt claimed numbness but is due to "
       "fall 2 12 ago did not see dr pt unable to give further hx as he does not wish to talk much",
       {{"hx fr pt pt fell", "hx fr pt fell"}}},
  };
}

// Applies the listed substitutions to our output. Returns an error string
// when a substitution does not occur exactly once.
inline std::string apply_known_differences(std::string& ours, const std::vector<KnownDifference>& diffs) {
  for (const auto& d : diffs) {
    const auto pos = ours.find(d.ours);
    if (pos == std::string::npos || ours.find(d.ours, pos + 1) != std::string::npos) {
      return "known difference '" + d.ours + "' not found exactly once";
    }
    ours.replace(pos, d.ours.size(), d.published);
  }
  return {};
}

}  // namespace fixture
