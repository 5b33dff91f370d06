#pragma once

#include <stdexcept>
#include <string>

namespace riccati {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define RICCATI_ERROR_TYPE(Name) \
  struct Name : Error {          \
    explicit Name(const std::string& what) : Error(what) {} \
  }

RICCATI_ERROR_TYPE(NonPositivePhi);
RICCATI_ERROR_TYPE(SingularModel);
RICCATI_ERROR_TYPE(InvalidParams);
RICCATI_ERROR_TYPE(EmptyRange);
RICCATI_ERROR_TYPE(OutOfDomain);
RICCATI_ERROR_TYPE(OutOfRange);
RICCATI_ERROR_TYPE(ZeroPivot);
RICCATI_ERROR_TYPE(NoConvergence);
RICCATI_ERROR_TYPE(InvalidLimits);
RICCATI_ERROR_TYPE(StiffnessFailure);
RICCATI_ERROR_TYPE(ShapeMismatch);
RICCATI_ERROR_TYPE(InsufficientData);
RICCATI_ERROR_TYPE(NonPositivePrice);
RICCATI_ERROR_TYPE(InvalidRiskAversion);
RICCATI_ERROR_TYPE(ConfigError);

#undef RICCATI_ERROR_TYPE

}  // namespace riccati
