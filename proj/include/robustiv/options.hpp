#pragma once

#include <cstddef>
#include <optional>

#include "robustiv/empirics.hpp"
#include "robustiv/error.hpp"
#include "robustiv/sample.hpp"
#include "robustiv/types.hpp"

namespace robustiv {

/// Logical outcome bounds [inf Y, sup Y] used for unrestricted means.
struct OutcomeRange {
  double lo = 0.0;
  double hi = 0.0;
};

inline OutcomeRange resolve_range(const Sample& s, const std::optional<OutcomeRange>& user) {
  if (!user) return {s.min_y(), s.max_y()};
  if (!(user->lo <= user->hi) || (s.size() > 0 && (user->lo > s.min_y() || user->hi < s.max_y())))
    throw Error(ErrorKind::BadOutcomeRange, "outcome range must contain every observed outcome");
  return *user;
}

enum class FirstStageSign { Positive, Negative, Zero };

inline const char* to_string(FirstStageSign s) {
  switch (s) {
    case FirstStageSign::Positive: return "positive";
    case FirstStageSign::Negative: return "negative";
    case FirstStageSign::Zero: return "zero";
  }
  return "?";
}

inline FirstStageSign classify_first_stage(double fs, double tau = kTauFirstStage) {
  if (fs > tau) return FirstStageSign::Positive;
  if (fs < -tau) return FirstStageSign::Negative;
  return FirstStageSign::Zero;
}

/// Class of sets A in the sup of the LATE-inequality slack.
/// Borel: positive part of the density difference on the outcome grid.
/// Intervals: exact supremum over intervals, computed from the raw data.
enum class SetClass { Borel, Intervals };

inline const char* to_string(SetClass c) { return c == SetClass::Borel ? "borel" : "intervals"; }

struct ValidityOptions {
  std::optional<std::size_t> bins;  // continuous outcomes only; Freedman-Diaconis when unset
  SetClass set_class = SetClass::Borel;
  double tau = kTauTest;
};

enum class MeanMethod { SharpEnvelope, OuterClosedForm };

struct AnalysisOptions {
  ValidityOptions validity;
  std::optional<OutcomeRange> range;
  std::size_t grid_points = 101;
  MeanMethod mean_method = MeanMethod::SharpEnvelope;
  TrimRule trim_rule = TrimRule::Fractional;
  unsigned threads = 0;  // 0: default_threads()
};

}  // namespace robustiv
