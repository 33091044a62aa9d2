#pragma once

#include <stdexcept>
#include <string>

namespace dial {

// Base of every error the library raises. `kind()` is a stable short tag used
// by the CLI and the HTTP service when mapping failures to exit codes / bodies.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define DIAL_DEFINE_ERROR(Name, tag)                                        \
  class Name : public Error {                                               \
  public:                                                                   \
    explicit Name(const std::string& what) : Error(tag, what) {}            \
  };

// Input data problems (exit code 3 on the CLI).
DIAL_DEFINE_ERROR(DatasetFormatError, "dataset_format")
DIAL_DEFINE_ERROR(IntegrityError, "integrity")
DIAL_DEFINE_ERROR(ParseError, "parse")
DIAL_DEFINE_ERROR(ShapeError, "shape")
DIAL_DEFINE_ERROR(DataError, "data")
DIAL_DEFINE_ERROR(FormatError, "format")

// Training / evaluation problems.
DIAL_DEFINE_ERROR(NumericError, "numeric")
DIAL_DEFINE_ERROR(InsufficientLabelsError, "insufficient_labels")
DIAL_DEFINE_ERROR(UndefinedMetricError, "undefined_metric")

// Configuration problems (exit code 2 on the CLI).
DIAL_DEFINE_ERROR(ConfigError, "config")

#undef DIAL_DEFINE_ERROR

inline bool is_data_error(const Error& e) {
  const auto& k = e.kind();
  return k == "dataset_format" || k == "integrity" || k == "parse" || k == "shape" ||
         k == "data" || k == "format";
}

}  // namespace dial
