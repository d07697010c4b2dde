#include "crcgram/risk_policy.hpp"

#include <cmath>
#include <cstdio>

namespace crcgram {

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::gram_energy: return "gram_energy";
    case ScoreKind::judge_norm: return "judge_norm";
    case ScoreKind::other: return "other";
  }
  return "other";
}

double clip_unit(double value, std::string_view what) {
  require(std::isfinite(value), ErrorCode::value_out_of_range, std::string(what) + " is not finite");
  if (value >= 0.0 && value <= 1.0) return value;
  if (value < 0.0 && value >= -kUnitClipTolerance) return 0.0;
  if (value > 1.0 && value <= 1.0 + kUnitClipTolerance) return 1.0;
  fail(ErrorCode::value_out_of_range, std::string(what) + " = " + std::to_string(value) + " outside [0,1]");
}

CalibrationItem make_item(double score, double severity, std::string id, std::string group_id, ScoreKind kind) {
  CalibrationItem item;
  item.score = clip_unit(score, "score");
  item.severity = clip_unit(severity, "severity");
  item.id = std::move(id);
  item.group_id = std::move(group_id);
  item.kind = kind;
  return item;
}

Lambda Lambda::at(double value) {
  require(std::isfinite(value) && value >= 0.0 && value <= 1.0, ErrorCode::value_out_of_range,
          "threshold " + std::to_string(value) + " outside [0,1]");
  return Lambda(value);
}

double Lambda::value() const {
  require(value_.has_value(), ErrorCode::missing_threshold, "REJECT_ALL has no numeric value");
  return *value_;
}

bool operator<(const Lambda& a, const Lambda& b) {
  if (a.is_reject_all()) return false;
  if (b.is_reject_all()) return true;
  return *a.value_ < *b.value_;
}

std::string format_lambda(const Lambda& lambda) {
  if (lambda.is_reject_all()) return "REJECT_ALL";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", lambda.value());
  return buf;
}

std::string_view to_string(CalibratorKind kind) {
  switch (kind) {
    case CalibratorKind::crc: return "crc";
    case CalibratorKind::bb_crc: return "bb_crc";
    case CalibratorKind::rbwa_crc: return "rbwa_crc";
  }
  return "crc";
}

std::optional<CalibratorKind> parse_calibrator(std::string_view text) {
  if (text == "crc") return CalibratorKind::crc;
  if (text == "bb_crc" || text == "bb" || text == "bbcrc") return CalibratorKind::bb_crc;
  if (text == "rbwa_crc" || text == "rbwa") return CalibratorKind::rbwa_crc;
  return std::nullopt;
}

Decision gate(double u, const Lambda& lambda) {
  require(std::isfinite(u) && u >= 0.0 && u <= 1.0, ErrorCode::score_out_of_range,
          "score " + std::to_string(u) + " outside [0,1]");
  return IndicatorGate{}(u, lambda) > 0.0 ? Decision::accept : Decision::reject;
}

double loss(const CalibrationItem& item, const Lambda& lambda) {
  return IndicatorGate{}(item.score, lambda) * item.severity;
}

double empirical_risk(std::span<const CalibrationItem> items, const Lambda& lambda) {
  require(!items.empty(), ErrorCode::empty_input, "empirical risk of an empty item set");
  double sum = 0.0;
  for (const auto& item : items) sum += loss(item, lambda);
  return sum / double(items.size());
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::geval_naive: return "geval_naive";
    case Mode::geval_crc: return "geval_crc";
    case Mode::gram_crc: return "gram_crc";
  }
  return "gram_crc";
}

std::optional<Mode> parse_mode(std::string_view text) {
  if (text == "geval_naive" || text == "geval-naive") return Mode::geval_naive;
  if (text == "geval_crc" || text == "geval-crc") return Mode::geval_crc;
  if (text == "gram_crc" || text == "gram-crc") return Mode::gram_crc;
  return std::nullopt;
}

ModeSpec mode_spec(Mode mode) {
  switch (mode) {
    case Mode::geval_naive: return {ScoreKind::judge_norm, std::nullopt};
    case Mode::geval_crc: return {ScoreKind::judge_norm, CalibratorKind::bb_crc};
    case Mode::gram_crc: return {ScoreKind::gram_energy, CalibratorKind::rbwa_crc};
  }
  return {ScoreKind::gram_energy, CalibratorKind::rbwa_crc};
}

}  // namespace crcgram
