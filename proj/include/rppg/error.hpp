#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace rppg {

enum class Errc {
  MissingFile,
  ParseError,
  GeometryMismatch,
  BadMagic,
  BadMaxval,
  NonMonotoneTime,
  NonNumeric,
  TooFewRows,
  NonPositiveHr,
  IndexOutOfRange,
  DuplicateIndex,
  MissingIndex,
  BoxOutsideFrame,
  NoSkinPixels,
  EmptyBackground,
  TooShort,
  WindowTooSmall,
  LengthMismatch,
  FsMismatch,
  NonFinite,
  InvalidParameter,
  SingularCovariance,
  BandInvalid,
  EmptyBand,
  ZeroPower,
  TraceTooShort,
  NoOverlap,
  TooFewPairs,
  InvalidSpec,
};

constexpr std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::MissingFile: return "MissingFile";
    case Errc::ParseError: return "ParseError";
    case Errc::GeometryMismatch: return "GeometryMismatch";
    case Errc::BadMagic: return "BadMagic";
    case Errc::BadMaxval: return "BadMaxval";
    case Errc::NonMonotoneTime: return "NonMonotoneTime";
    case Errc::NonNumeric: return "NonNumeric";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::NonPositiveHr: return "NonPositiveHr";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::DuplicateIndex: return "DuplicateIndex";
    case Errc::MissingIndex: return "MissingIndex";
    case Errc::BoxOutsideFrame: return "BoxOutsideFrame";
    case Errc::NoSkinPixels: return "NoSkinPixels";
    case Errc::EmptyBackground: return "EmptyBackground";
    case Errc::TooShort: return "TooShort";
    case Errc::WindowTooSmall: return "WindowTooSmall";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::FsMismatch: return "FsMismatch";
    case Errc::NonFinite: return "NonFinite";
    case Errc::InvalidParameter: return "InvalidParameter";
    case Errc::SingularCovariance: return "SingularCovariance";
    case Errc::BandInvalid: return "BandInvalid";
    case Errc::EmptyBand: return "EmptyBand";
    case Errc::ZeroPower: return "ZeroPower";
    case Errc::TraceTooShort: return "TraceTooShort";
    case Errc::NoOverlap: return "NoOverlap";
    case Errc::TooFewPairs: return "TooFewPairs";
    case Errc::InvalidSpec: return "InvalidSpec";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a
/// machine-checkable code plus a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  Errc code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

/// Wraps a lower-level error with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& inner)
      : Error(inner.code(), "stage '" + stage + "': " + inner.message()), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace rppg
