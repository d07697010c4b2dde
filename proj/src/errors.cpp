#include "crcgram/errors.hpp"

namespace crcgram {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::zero_row: return "ZeroRow";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::index_out_of_range: return "IndexOutOfRange";
    case ErrorCode::not_symmetric: return "NotSymmetric";
    case ErrorCode::rank_too_large: return "RankTooLarge";
    case ErrorCode::too_few_eigenvalues: return "TooFewEigenvalues";
    case ErrorCode::empty_class: return "EmptyClass";
    case ErrorCode::rank_mismatch: return "RankMismatch";
    case ErrorCode::too_few_prototypes: return "TooFewPrototypes";
    case ErrorCode::no_evaluable_groups: return "NoEvaluableGroups";
    case ErrorCode::score_out_of_range: return "ScoreOutOfRange";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::alpha_out_of_range: return "AlphaOutOfRange";
    case ErrorCode::indivisible_batching: return "IndivisibleBatching";
    case ErrorCode::invalid_weight_law: return "InvalidWeightLaw";
    case ErrorCode::invalid_eta: return "InvalidEta";
    case ErrorCode::invalid_spec: return "InvalidSpec";
    case ErrorCode::constant_losses: return "ConstantLosses";
    case ErrorCode::missing_column: return "MissingColumn";
    case ErrorCode::value_out_of_range: return "ValueOutOfRange";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::inconsistent_dimension: return "InconsistentDimension";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::missing_threshold: return "MissingThreshold";
    case ErrorCode::config_error: return "ConfigError";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config_error:
      return 2;
    case ErrorCode::missing_column:
    case ErrorCode::value_out_of_range:
    case ErrorCode::parse_error:
    case ErrorCode::inconsistent_dimension:
    case ErrorCode::io_error:
    case ErrorCode::missing_threshold:
    case ErrorCode::empty_input:
      return 3;
    default:
      return 4;
  }
}

}  // namespace crcgram
