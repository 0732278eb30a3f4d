#ifndef STEREOFORGE_ERROR_HPP
#define STEREOFORGE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace stereoforge {

enum class Errc {
  MissingManifest,
  FrameCountMismatch,
  DimensionMismatch,
  DecodeError,
  IoError,
  NonPositiveDepth,
  InvalidConfig,
  InvalidRange,
  InvalidRecipe,
  NoOverlap,
  FullyMaskedFrame,
  BackendFailed,
  OutputMismatch,
  Timeout,
  EmptyMask,
  TooSmall,
  SingleFrame,
};

inline std::string_view errc_name(Errc code)
{
  switch (code) {
  case Errc::MissingManifest: return "MissingManifest";
  case Errc::FrameCountMismatch: return "FrameCountMismatch";
  case Errc::DimensionMismatch: return "DimensionMismatch";
  case Errc::DecodeError: return "DecodeError";
  case Errc::IoError: return "IoError";
  case Errc::NonPositiveDepth: return "NonPositiveDepth";
  case Errc::InvalidConfig: return "InvalidConfig";
  case Errc::InvalidRange: return "InvalidRange";
  case Errc::InvalidRecipe: return "InvalidRecipe";
  case Errc::NoOverlap: return "NoOverlap";
  case Errc::FullyMaskedFrame: return "FullyMaskedFrame";
  case Errc::BackendFailed: return "BackendFailed";
  case Errc::OutputMismatch: return "OutputMismatch";
  case Errc::Timeout: return "Timeout";
  case Errc::EmptyMask: return "EmptyMask";
  case Errc::TooSmall: return "TooSmall";
  case Errc::SingleFrame: return "SingleFrame";
  }
  return "Unknown";
}

/// Domain error carrying a machine-readable code plus free-form context
/// (usually a path or the offending dimensions).
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message, std::string context = {})
    : std::runtime_error(std::string(errc_name(code)) + ": " + message),
      code_(code), message_(message), context_(std::move(context))
  {}

  Errc code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& context() const noexcept { return context_; }

private:
  Errc code_;
  std::string message_;
  std::string context_;
};

} // namespace stereoforge

#endif // STEREOFORGE_ERROR_HPP
