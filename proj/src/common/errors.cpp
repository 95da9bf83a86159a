#include "qflow/errors.hpp"

namespace qflow {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::OddDimension: return "OddDimension";
    case Errc::InvalidMode: return "InvalidMode";
    case Errc::BandLimitTooSmall: return "BandLimitTooSmall";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonpositiveFMass: return "NonpositiveFMass";
    case Errc::ConformalFactorOverflow: return "ConformalFactorOverflow";
    case Errc::NonpositiveAlpha: return "NonpositiveAlpha";
    case Errc::NumericFailure: return "NumericFailure";
    case Errc::InitialDataRejected: return "InitialDataRejected";
    case Errc::PreconditionViolated: return "PreconditionViolated";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::EmptyRadii: return "EmptyRadii";
    case Errc::FitDiverged: return "FitDiverged";
    case Errc::NoAnalyticDerivatives: return "NoAnalyticDerivatives";
    case Errc::NonpositiveMeanF: return "NonpositiveMeanF";
    case Errc::NotAxisymmetric: return "NotAxisymmetric";
    case Errc::UnknownKey: return "UnknownKey";
    case Errc::MissingKey: return "MissingKey";
    case Errc::TypeError: return "TypeError";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::CorruptPayload: return "CorruptPayload";
    case Errc::ConfigMismatch: return "ConfigMismatch";
  }
  return "UnknownError";
}

} // namespace qflow
