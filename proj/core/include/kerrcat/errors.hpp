#pragma once

#include <stdexcept>
#include <string>

namespace kerrcat {

// Base class for every error thrown by the library. The harness maps these
// to process exit code 3 (numerical failure); config validation problems use
// ConfigError and map to exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

class TruncationTooSmall : public Error {
 public:
  explicit TruncationTooSmall(const std::string& what) : Error(what) {}
};

class DegenerateBasis : public Error {
 public:
  explicit DegenerateBasis(const std::string& what) : Error(what) {}
};

class PumpTooStrong : public Error {
 public:
  explicit PumpTooStrong(const std::string& what) : Error(what) {}
};

class NoMinimumFound : public Error {
 public:
  explicit NoMinimumFound(const std::string& what) : Error(what) {}
};

class NegativeCurvature : public Error {
 public:
  explicit NegativeCurvature(const std::string& what) : Error(what) {}
};

class InvalidRegime : public Error {
 public:
  explicit InvalidRegime(const std::string& what) : Error(what) {}
};

class NoConvergence : public Error {
 public:
  explicit NoConvergence(const std::string& what) : Error(what) {}
};

class SingularMatrix : public Error {
 public:
  explicit SingularMatrix(const std::string& what) : Error(what) {}
};

class SingularInputSet : public Error {
 public:
  explicit SingularInputSet(const std::string& what) : Error(what) {}
};

class ContinuationAmbiguous : public Error {
 public:
  explicit ContinuationAmbiguous(const std::string& what) : Error(what) {}
};

class StepSizeUnderflow : public Error {
 public:
  explicit StepSizeUnderflow(const std::string& what) : Error(what) {}
};

class ToleranceNotMet : public Error {
 public:
  explicit ToleranceNotMet(const std::string& what) : Error(what) {}
};

class UnphysicalModel : public Error {
 public:
  explicit UnphysicalModel(const std::string& what) : Error(what) {}
};

class NoMinimumInWindow : public Error {
 public:
  explicit NoMinimumInWindow(const std::string& what) : Error(what) {}
};

class FitFailed : public Error {
 public:
  explicit FitFailed(const std::string& what) : Error(what) {}
};

}  // namespace kerrcat
