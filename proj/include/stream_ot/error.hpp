#pragma once

#include <stdexcept>
#include <string>

namespace stream_ot {

enum class Errc {
  invalid_argument,
  empty_representation,
  alignment,
  not_spd,
  schedule,
  scaling,
  representation_corruption,
  insufficient_data,
  io,
};

const char* to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace stream_ot
