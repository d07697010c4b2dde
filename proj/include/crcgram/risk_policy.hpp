#pragma once

// Policy-first actionable loss L(y, lambda) = a_lambda(Q(y)) * m(y): a monotone
// gate on a label-free score, multiplied by a calibration-only severity.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crcgram/errors.hpp"

namespace crcgram {

enum class ScoreKind { gram_energy, judge_norm, other };

std::string_view to_string(ScoreKind kind);

struct CalibrationItem {
  std::string id;
  std::string group_id;
  double score = 0;     // policy score Q in [0,1]
  double severity = 0;  // m in [0,1]
  ScoreKind kind = ScoreKind::other;
};

/// Values outside [0,1] by at most this much are clipped; anything further is rejected.
inline constexpr double kUnitClipTolerance = 1e-6;

/// Clips `value` into [0,1] under the tolerance above, or throws ValueOutOfRange.
double clip_unit(double value, std::string_view what);

/// Builds an item with both score and severity clipped/validated.
CalibrationItem make_item(double score, double severity, std::string id = {}, std::string group_id = {},
                          ScoreKind kind = ScoreKind::other);

/// Gate level: a threshold in [0,1], or REJECT_ALL (the lambda_max end, where the
/// gate accepts nothing and the loss is identically zero).
class Lambda {
 public:
  static Lambda at(double value);
  static Lambda reject_all() { return Lambda(); }

  bool is_reject_all() const { return !value_.has_value(); }
  double value() const;  // throws when REJECT_ALL
  std::optional<double> maybe_value() const { return value_; }

  friend bool operator==(const Lambda&, const Lambda&) = default;
  /// REJECT_ALL compares above every real threshold.
  friend bool operator<(const Lambda& a, const Lambda& b);
  friend bool operator<=(const Lambda& a, const Lambda& b) { return !(b < a); }

 private:
  Lambda() = default;
  explicit Lambda(double v) : value_(v) {}
  std::optional<double> value_;
};

std::string format_lambda(const Lambda& lambda);  // "REJECT_ALL" or %.6g

enum class CalibratorKind { crc, bb_crc, rbwa_crc };

std::string_view to_string(CalibratorKind kind);
std::optional<CalibratorKind> parse_calibrator(std::string_view text);

struct Threshold {
  Lambda lambda = Lambda::reject_all();
  double alpha = 0;
  CalibratorKind calibrator = CalibratorKind::crc;
  std::uint64_t seed = 0;
};

enum class Decision { accept, reject };

/// Indicator gate 1{u >= lambda}. Other monotone gates (quantile, smooth) would
/// provide the same call shape: non-increasing in lambda, values in [0,1].
struct IndicatorGate {
  double operator()(double u, const Lambda& lambda) const {
    return !lambda.is_reject_all() && u >= lambda.value() ? 1.0 : 0.0;
  }
};

/// Accept iff u >= lambda (closed threshold). Throws ScoreOutOfRange for u outside [0,1].
Decision gate(double u, const Lambda& lambda);
inline Decision gate(double u, const Threshold& t) { return gate(u, t.lambda); }

double loss(const CalibrationItem& item, const Lambda& lambda);

/// Mean loss over the items; EmptyInput when there are none.
double empirical_risk(std::span<const CalibrationItem> items, const Lambda& lambda);

// Deployment modes crossing the online score (judge vs Gram energy) with how the
// threshold is set (fixed list vs calibrated).
enum class Mode { geval_naive, geval_crc, gram_crc };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

struct ModeSpec {
  ScoreKind score;
  std::optional<CalibratorKind> calibrator;  // empty: fixed thresholds, no guarantee
};

ModeSpec mode_spec(Mode mode);

/// Fixed judge thresholds used by the uncalibrated baseline.
inline const std::vector<double> kNaiveThresholds{0.99, 0.95, 0.90, 0.85, 0.80};

}  // namespace crcgram
