#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crcgram {

enum class ErrorCode {
  // geometry
  zero_row,
  dimension_mismatch,
  index_out_of_range,
  not_symmetric,
  rank_too_large,
  too_few_eigenvalues,
  // gpso
  empty_class,
  rank_mismatch,
  too_few_prototypes,
  no_evaluable_groups,
  // risk / calibration
  score_out_of_range,
  empty_input,
  alpha_out_of_range,
  indivisible_batching,
  invalid_weight_law,
  invalid_eta,
  // monte carlo
  invalid_spec,
  constant_losses,
  // io
  missing_column,
  value_out_of_range,
  parse_error,
  inconsistent_dimension,
  io_error,
  missing_threshold,
  // cli / config
  config_error,
};

std::string_view to_string(ErrorCode code);

/// Process exit status a CLI run reports for an error of this kind:
/// 2 for configuration problems, 3 for bad input data, 4 for numeric failures.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace crcgram
