#pragma once

#include <stdexcept>
#include <string>

namespace pnpmri {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Two arrays (or an array and an operator) disagree on shape.
class DimensionMismatch : public Error {
public:
  using Error::Error;
};

/// Parameters that describe an impossible geometry (mask, kernel, architecture).
class InvalidGeometry : public Error {
public:
  using Error::Error;
};

/// The autocalibration region cannot support the requested calibration.
class InsufficientAcs : public Error {
public:
  using Error::Error;
};

class EmptyDataset : public Error {
public:
  using Error::Error;
};

/// Malformed or unreadable file.
class FormatError : public Error {
public:
  using Error::Error;
};

} // namespace pnpmri
