#pragma once

#include <stdexcept>
#include <string>

namespace rankmanova {

inline constexpr const char* version = "0.1.0";

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RANKMANOVA_ERROR_TYPE(Name) \
  class Name : public Error {       \
   public:                          \
    using Error::Error;             \
  }

// data / shape
RANKMANOVA_ERROR_TYPE(MismatchedDimension);
RANKMANOVA_ERROR_TYPE(EmptyGroup);
RANKMANOVA_ERROR_TYPE(NonFiniteValue);
RANKMANOVA_ERROR_TYPE(OutOfRange);
RANKMANOVA_ERROR_TYPE(EmptySample);
RANKMANOVA_ERROR_TYPE(DimensionMismatch);
RANKMANOVA_ERROR_TYPE(LayoutMismatch);
// inference / post-hoc
RANKMANOVA_ERROR_TYPE(InvalidAlpha);
RANKMANOVA_ERROR_TYPE(SameComponent);
RANKMANOVA_ERROR_TYPE(DegenerateGroup);
RANKMANOVA_ERROR_TYPE(FamilyTooLarge);
// simulation
RANKMANOVA_ERROR_TYPE(InvalidCorrelation);
RANKMANOVA_ERROR_TYPE(NotPsd);
// ingestion
RANKMANOVA_ERROR_TYPE(FileNotFound);
RANKMANOVA_ERROR_TYPE(MissingColumn);
RANKMANOVA_ERROR_TYPE(NoCompleteRows);
RANKMANOVA_ERROR_TYPE(SingleGroup);

#undef RANKMANOVA_ERROR_TYPE

}  // namespace rankmanova
