#pragma once

#include <stdexcept>
#include <string>

namespace robustiv {

enum class ErrorKind {
  BadInput,
  MissingColumn,
  NonBinaryTreatment,
  NonBinaryInstrument,
  NonFiniteOutcome,
  EmptyInstrumentArm,
  EmptyCell,
  QuantileOutOfRange,
  NotAFullCdf,
  BadCdf,
  BadBinEdges,
  BadOutcomeRange,
  DegenerateFirstStage,
  NonPositiveFirstStage,
  PdfNotInterior,
  EmptyIdentifiedSet,
  NotBinaryOutcome,
  Inapplicable,
  EmptyTrimmedCell,
  BadLevel,
  NegativeSe,
  NonPsdCovariance,
  NotAnalytic,
  EmptyType,
  MissingData,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::BadInput: return "BadInput";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::NonBinaryTreatment: return "NonBinaryTreatment";
    case ErrorKind::NonBinaryInstrument: return "NonBinaryInstrument";
    case ErrorKind::NonFiniteOutcome: return "NonFiniteOutcome";
    case ErrorKind::EmptyInstrumentArm: return "EmptyInstrumentArm";
    case ErrorKind::EmptyCell: return "EmptyCell";
    case ErrorKind::QuantileOutOfRange: return "QuantileOutOfRange";
    case ErrorKind::NotAFullCdf: return "NotAFullCdf";
    case ErrorKind::BadCdf: return "BadCdf";
    case ErrorKind::BadBinEdges: return "BadBinEdges";
    case ErrorKind::BadOutcomeRange: return "BadOutcomeRange";
    case ErrorKind::DegenerateFirstStage: return "DegenerateFirstStage";
    case ErrorKind::NonPositiveFirstStage: return "NonPositiveFirstStage";
    case ErrorKind::PdfNotInterior: return "PdfNotInterior";
    case ErrorKind::EmptyIdentifiedSet: return "EmptyIdentifiedSet";
    case ErrorKind::NotBinaryOutcome: return "NotBinaryOutcome";
    case ErrorKind::Inapplicable: return "Inapplicable";
    case ErrorKind::EmptyTrimmedCell: return "EmptyTrimmedCell";
    case ErrorKind::BadLevel: return "BadLevel";
    case ErrorKind::NegativeSe: return "NegativeSe";
    case ErrorKind::NonPsdCovariance: return "NonPsdCovariance";
    case ErrorKind::NotAnalytic: return "NotAnalytic";
    case ErrorKind::EmptyType: return "EmptyType";
    case ErrorKind::MissingData: return "MissingData";
  }
  return "Unknown";
}

/// Every failure raised by the library; kind() is stable, what() is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace robustiv
