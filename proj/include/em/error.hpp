#pragma once

#include <stdexcept>
#include <string>

namespace em {

enum class Errc {
  parse_error,
  dangling_reference,
  disconnected_graph,
  degree_exceeded,
  geometry_mismatch,
  invalid_spec,
  out_of_range,
  nonpositive_temperature,
  out_of_table,
  order_out_of_range,
  zero_total_width,
  degree_mismatch,
  out_of_domain,
  invalid_architecture,
  dimension_mismatch,
  non_finite_loss,
  line_search_failed,
  singular_system,
  step_too_large,
  key_mismatch,
  architecture_mismatch,
  io_error,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace em
