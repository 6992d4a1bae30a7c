#pragma once

#include <stdexcept>
#include <string>

namespace mltb {

// Invalid parameters or preconditions supplied by the caller.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A scale is too small to be resolved on the sampling grid.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data (supports, tents, cubes) falls outside the region where it is defined.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A cube is not a union of grid cells.
class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An enumeration would exceed its configured cap.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mltb
