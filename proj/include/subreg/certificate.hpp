#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subreg/linalg.hpp"

namespace subreg {

enum class Verdict { Pass, Fail, Inconclusive };

std::string verdict_str(Verdict v);

// One verified condition inside a certificate: an inequality or scan that
// either held everywhere probed or failed with a witness.
struct ConditionRecord {
  std::string id;
  bool pass = true;
  // Worst signed margin observed; >= 0 means the condition held with room,
  // < 0 quantifies the worst violation.
  double margin = 0;
  std::optional<Vec> witness;
  std::string note;
};

// A sampled verdict: parameters, per-condition records, and the overall
// outcome at the probing resolution. Never a proof; every number that
// influenced the verdict is recorded.
struct Certificate {
  std::string clause;
  Verdict verdict = Verdict::Inconclusive;
  // True when a structural hypothesis the conclusion leans on was not
  // established, so the verdict is advisory rather than a refutation.
  bool advisory = false;
  std::vector<std::pair<std::string, double>> params;
  std::vector<ConditionRecord> conditions;
  std::vector<std::string> hypotheses;
  std::string summary;

  bool passed() const { return verdict == Verdict::Pass; }
};

// CSV export: one row per condition record.
std::string certificate_to_csv(const Certificate& cert);

}  // namespace subreg
