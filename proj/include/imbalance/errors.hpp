#pragma once

#include <stdexcept>
#include <string>

namespace imbalance {

/// Base of every error raised by the toolkit. `kind()` is the stable name
/// written into error rows of experiment results.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define IMBALANCE_DEFINE_ERROR(Name)                                \
  class Name : public Error {                                       \
   public:                                                          \
    using Error::Error;                                             \
    const char* kind() const noexcept override { return #Name; }    \
  }

// data
IMBALANCE_DEFINE_ERROR(MissingFile);
IMBALANCE_DEFINE_ERROR(MissingColumn);
IMBALANCE_DEFINE_ERROR(NotBinary);
IMBALANCE_DEFINE_ERROR(UnknownMinorityLabel);
IMBALANCE_DEFINE_ERROR(EmptyDataset);
IMBALANCE_DEFINE_ERROR(MalformedCsv);
IMBALANCE_DEFINE_ERROR(InsufficientClassSamples);
IMBALANCE_DEFINE_ERROR(InvalidContext);

// sampling
IMBALANCE_DEFINE_ERROR(TargetExceedsAvailable);
IMBALANCE_DEFINE_ERROR(TooFewMinoritySamples);

// classifier
IMBALANCE_DEFINE_ERROR(DimensionMismatch);
IMBALANCE_DEFINE_ERROR(BackendFailure);
IMBALANCE_DEFINE_ERROR(InvalidClassifierSpec);
IMBALANCE_DEFINE_ERROR(ScoreOutOfRange);

// decision
IMBALANCE_DEFINE_ERROR(PriorOutOfRange);
IMBALANCE_DEFINE_ERROR(DegenerateCosts);
IMBALANCE_DEFINE_ERROR(ThresholdOutOfRange);

// metrics
IMBALANCE_DEFINE_ERROR(LengthMismatch);
IMBALANCE_DEFINE_ERROR(MissingClass);
IMBALANCE_DEFINE_ERROR(EmptyInput);
IMBALANCE_DEFINE_ERROR(BinMismatch);

// experiment
IMBALANCE_DEFINE_ERROR(ConfigInvalid);

#undef IMBALANCE_DEFINE_ERROR

}  // namespace imbalance
