#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace ctstack {

/// Base class for every error the toolkit raises deliberately.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected parameter or input value.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

/// Paired volumes or slices whose dimensions do not line up.
class GeometryMismatchError : public Error {
 public:
  using Error::Error;
};

/// Native volume directory fails validation (meta.json or voxels.raw).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Input is not a DICOM file at all (preamble or magic missing).
class NotDicomError : public Error {
 public:
  using Error::Error;
};

/// DICOM encoding outside the supported subset.
class UnsupportedEncodingError : public Error {
 public:
  using Error::Error;
};

/// DICOM element stream truncated or inconsistent; carries the byte offset.
class MalformedStreamError : public Error {
 public:
  MalformedStreamError(const std::string& what, std::size_t offset)
      : Error(what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Duplicate slice-ordering keys make the scan order ambiguous.
class AmbiguousOrderError : public Error {
 public:
  using Error::Error;
};

/// Slab list inconsistent with the stack plan it claims to follow.
class PlanMismatchError : public Error {
 public:
  using Error::Error;
};

/// External segmentation backend failed; carries the program's diagnostics.
class BackendFailureError : public Error {
 public:
  BackendFailureError(const std::string& what, std::string diagnostics)
      : Error(what), diagnostics_(std::move(diagnostics)) {}

  const std::string& diagnostics() const { return diagnostics_; }

 private:
  std::string diagnostics_;
};

}  // namespace ctstack
