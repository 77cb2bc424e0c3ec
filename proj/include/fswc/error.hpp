#ifndef FSWC_ERROR_HPP
#define FSWC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace fswc {

// Common base so callers can catch anything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape violations: bad extents, element-count mismatches,
// incompatible operand shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Out-of-bounds or rank-mismatched element addressing.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Invalid scalar arguments: non-finite angles, zero scale factors,
// singular transforms.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated image bytes.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// Structurally recognizable but unsupported or inconsistent file contents
// (wrong magic, unsupported depth, payload/header mismatch).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Model file written by an incompatible serializer version.
class VersionError : public Error {
 public:
  using Error::Error;
};

// Dataset directory does not follow the expected two-class layout.
class LayoutError : public Error {
 public:
  using Error::Error;
};

// Dataset-level problems: empty set, class too small to split,
// evaluation on nothing.
class DatasetError : public Error {
 public:
  using Error::Error;
};

// Training cannot proceed (single-class data) or produced a non-finite loss.
class TrainingError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public TrainingError {
 public:
  DivergenceError(int epoch, const std::string& what)
      : TrainingError(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// Filesystem write failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fswc

#endif
