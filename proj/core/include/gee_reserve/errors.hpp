#pragma once

#include <stdexcept>
#include <string>

namespace geeres {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- parsing / data shape ---

class RaggedShapeError final : public Error {
 public:
  using Error::Error;
};

class DuplicateCellError final : public Error {
 public:
  using Error::Error;
};

class NonNumericValueError final : public Error {
 public:
  using Error::Error;
};

class WrongKindError final : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRangeError final : public Error {
 public:
  using Error::Error;
};

// --- estimation ---

class NotPositiveDefiniteError final : public Error {
 public:
  using Error::Error;
};

class NonPositiveMeanError final : public Error {
 public:
  using Error::Error;
};

class DegenerateFitError final : public Error {
 public:
  using Error::Error;
};

class InsufficientPairsError final : public Error {
 public:
  using Error::Error;
};

class SingularWorkingCovarianceError final : public Error {
 public:
  using Error::Error;
};

class SingularBError final : public Error {
 public:
  using Error::Error;
};

class DivergedFitError final : public Error {
 public:
  using Error::Error;
};

// --- prediction / reporting ---

class NotConvergedError final : public Error {
 public:
  using Error::Error;
};

class UnsupportedStructureForPredictionError final : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError final : public Error {
 public:
  using Error::Error;
};

class MismatchedModelsError final : public Error {
 public:
  using Error::Error;
};

}  // namespace geeres
