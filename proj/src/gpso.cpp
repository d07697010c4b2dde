#include "crcgram/gpso.hpp"

namespace crcgram::gpso {

AccuracySummary summarize_accuracy(std::span<const FoldRecord> records) {
  std::map<std::string, ClassAccuracy> by_class;
  for (const auto& rec : records) {
    auto& acc = by_class[rec.truth];
    acc.class_id = rec.truth;
    ++acc.total;
    if (rec.predicted == rec.truth) ++acc.correct;
  }
  AccuracySummary out;
  double sum = 0;
  for (auto& [id, acc] : by_class) {
    sum += acc.accuracy();
    out.per_class.push_back(acc);
  }
  if (!out.per_class.empty()) out.macro_accuracy = sum / double(out.per_class.size());
  return out;
}

CvSummary summarize(const std::vector<FoldRecord>& records, Index skipped) {
  CvSummary out;
  out.accuracy = summarize_accuracy(records);
  out.records = static_cast<Index>(records.size());
  out.skipped_groups = skipped;
  if (records.empty()) return out;
  Index passes = 0;
  for (const auto& rec : records) {
    out.mean_norm_margin += rec.norm_margin;
    out.mean_delta_P += rec.delta_P;
    out.mean_rank += double(rec.rank);
    if (rec.margin_pass) ++passes;
  }
  const double n = double(records.size());
  out.mean_norm_margin /= n;
  out.mean_delta_P /= n;
  out.mean_rank /= n;
  out.margin_pass_fraction = double(passes) / n;
  return out;
}

}  // namespace crcgram::gpso
