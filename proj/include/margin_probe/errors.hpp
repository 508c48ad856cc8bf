#pragma once

#include <stdexcept>
#include <string>

namespace margin_probe {

/// Base of every error raised by the toolkit. `kind()` is a stable token used
/// in structured CLI error messages and in the dataset error ledger.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define MARGIN_PROBE_ERROR(Name)                                          \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(#Name, what) {}        \
  }

MARGIN_PROBE_ERROR(InvalidArgument);
MARGIN_PROBE_ERROR(ConfigError);
MARGIN_PROBE_ERROR(QuadratureNotConverged);
MARGIN_PROBE_ERROR(OverlappingChannels);
MARGIN_PROBE_ERROR(CutOutOfBand);
MARGIN_PROBE_ERROR(DegenerateFeature);
MARGIN_PROBE_ERROR(SingularDesign);
MARGIN_PROBE_ERROR(DegeneratePoints);
MARGIN_PROBE_ERROR(FormatError);

#undef MARGIN_PROBE_ERROR

}  // namespace margin_probe
