#pragma once

#include <stdexcept>
#include <string>

namespace orchard {

enum class Errc {
  file_not_found,
  io_error,
  unsupported_format,
  corrupt_image,
  bad_format,
  wrong_colorspace,
  dimension_mismatch,
  out_of_bounds,
  too_few_pixels,
  empty_cluster,
  empty_mask,
  no_valid_pixels,
  empty_class,
  missing_class,
  length_mismatch,
  empty_input,
  insufficient_examples,
  empty_class_dir,
  no_classes,
  invalid_argument,
};

constexpr const char* to_string(Errc c) {
  switch (c) {
    case Errc::file_not_found: return "file_not_found";
    case Errc::io_error: return "io_error";
    case Errc::unsupported_format: return "unsupported_format";
    case Errc::corrupt_image: return "corrupt_image";
    case Errc::bad_format: return "bad_format";
    case Errc::wrong_colorspace: return "wrong_colorspace";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::out_of_bounds: return "out_of_bounds";
    case Errc::too_few_pixels: return "too_few_pixels";
    case Errc::empty_cluster: return "empty_cluster";
    case Errc::empty_mask: return "empty_mask";
    case Errc::no_valid_pixels: return "no_valid_pixels";
    case Errc::empty_class: return "empty_class";
    case Errc::missing_class: return "missing_class";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::empty_input: return "empty_input";
    case Errc::insufficient_examples: return "insufficient_examples";
    case Errc::empty_class_dir: return "empty_class_dir";
    case Errc::no_classes: return "no_classes";
    case Errc::invalid_argument: return "invalid_argument";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  Errc code() const { return code_; }
  // The description alone, without the code prefix what() carries.
  const std::string& message() const { return message_; }

 private:
  Errc code_;
  std::string message_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace orchard
