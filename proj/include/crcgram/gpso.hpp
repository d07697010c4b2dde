#pragma once

// Gram-projector spectral-overlap (GPSO) classification: class prototypes are
// bootstrap-averaged rank-r scatter projectors, a test batch goes to the class
// whose prototype has the largest Frobenius overlap with its own projector.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "crcgram/errors.hpp"
#include "crcgram/gram_geometry.hpp"
#include "crcgram/rng.hpp"

namespace crcgram::gpso {

struct PipelineConfig {
  bool l2 = true;
  bool center = false;
  Index r_max = 4;
  Index bootstrap_B = 8;
  double train_fraction = 0.6;
  Index n_splits = 5;
  std::uint64_t seed = 0;
  SpectralRoute route = SpectralRoute::automatic;

  void validate() const {
    require(r_max >= 1, ErrorCode::config_error, "r_max must be >= 1");
    require(bootstrap_B >= 1, ErrorCode::config_error, "bootstrap B must be >= 1");
    require(train_fraction > 0.0 && train_fraction < 1.0, ErrorCode::config_error, "train_fraction must be in (0,1)");
    require(n_splits >= 1, ErrorCode::config_error, "n_splits must be >= 1");
  }

  /// Ablation letter: A = L2+centered, B = L2/no-center, C = no-L2+center, D = neither.
  char pipeline() const { return l2 ? (center ? 'A' : 'B') : (center ? 'C' : 'D'); }
};

/// Scatter per item, (1/n) V^T H V or (1/n) V^T V, so batches of different size
/// share one scale.
template <typename Derived>
Matrix<typename Derived::Scalar> mean_scatter(const Eigen::MatrixBase<Derived>& v, bool center) {
  using Scalar = typename Derived::Scalar;
  return feature_scatter(v, center) / Scalar(v.rows());
}

template <typename Scalar = double>
struct Prototype {
  std::string class_id;
  RankRProjector<Scalar> projector;
  Scalar dispersion = 0;             // median_b ||Q_b - Q_bar||_F
  Matrix<Scalar> surrogate_scatter;  // class-average per-item scatter C_bar
  Scalar surrogate_gap = 0;          // eigengap of C_bar at the prototype rank
  Index replicate_count = 0;
};

template <typename Scalar = double>
struct GpsoDiagnostics {
  Scalar delta_P = 0;      // min pairwise prototype distance
  Scalar epsilon = 0;      // ||C_test - C_bar_k||_op
  Scalar gamma = 0;        // eigengap of C_bar_k at r
  Scalar delta_proto = 0;  // dispersion of prototype k
  Scalar margin = 0;
  Scalar normalized_margin = 0;
  Index rank = 0;
  bool margin_condition_pass = false;

  /// (2 sqrt(r) / gamma) eps + delta_proto; infinite when gamma is 0.
  Scalar condition_lhs() const {
    if (!(gamma > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
    return Scalar(2) * std::sqrt(Scalar(rank)) / gamma * epsilon + delta_proto;
  }
};

template <typename Scalar = double>
struct Classification {
  std::string class_id;
  std::vector<Scalar> scores;  // overlap with each prototype, in prototype order
  GpsoDiagnostics<Scalar> diagnostics;
};

namespace detail {

template <typename Scalar>
Scalar median(std::vector<Scalar> values) {
  if (values.empty()) return 0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  Scalar upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const Scalar lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / Scalar(2);
}

template <typename Scalar>
Matrix<Scalar> average_scatter(const std::vector<Matrix<Scalar>>& rows, std::span<const std::size_t> pick, bool center) {
  Matrix<Scalar> acc = mean_scatter(rows[pick[0]], center);
  for (std::size_t k = 1; k < pick.size(); ++k) acc += mean_scatter(rows[pick[k]], center);
  return acc / Scalar(pick.size());
}

}  // namespace detail

/// Bootstrap prototype for one class. With a single calibration batch the items
/// are resampled; with several, whole batches are. B = 1 uses the data as given.
template <typename Scalar>
Prototype<Scalar> build_prototype(std::string class_id, const std::vector<EmbeddingBatch<Scalar>>& class_batches,
                                  Index r, const PipelineConfig& cfg, Rng& rng) {
  cfg.validate();
  require(!class_batches.empty(), ErrorCode::empty_class, "class '" + class_id + "' has no calibration batches");
  std::vector<Matrix<Scalar>> rows;
  rows.reserve(class_batches.size());
  for (const auto& b : class_batches) {
    rows.push_back(preprocess_rows(b, cfg.l2));
    require(rows.back().cols() == rows.front().cols(), ErrorCode::dimension_mismatch,
            "calibration batches of class '" + class_id + "' differ in dimension");
  }
  const Index d = rows.front().cols();
  require(r >= 1 && r <= d, ErrorCode::rank_too_large, "rank " + std::to_string(r) + " exceeds dimension");

  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  Prototype<Scalar> proto;
  proto.class_id = std::move(class_id);
  proto.surrogate_scatter = detail::average_scatter<Scalar>(rows, all, cfg.center);
  proto.surrogate_gap = crcgram::detail::gap_at(descending_eigenvalues(proto.surrogate_scatter), r);
  proto.replicate_count = cfg.bootstrap_B;

  std::vector<Matrix<Scalar>> replicates;
  replicates.reserve(static_cast<std::size_t>(cfg.bootstrap_B));
  const bool resample = cfg.bootstrap_B > 1;
  for (Index b = 0; b < cfg.bootstrap_B; ++b) {
    if (rows.size() == 1) {
      const Matrix<Scalar>& v = rows.front();
      if (!resample) {
        replicates.push_back(scatter_projector(v, cfg.center, r, cfg.route).matrix);
        continue;
      }
      std::uniform_int_distribution<Index> pick(0, v.rows() - 1);
      Matrix<Scalar> draw(v.rows(), d);
      for (Index i = 0; i < v.rows(); ++i) draw.row(i) = v.row(pick(rng));
      replicates.push_back(scatter_projector(draw, cfg.center, r, cfg.route).matrix);
    } else {
      std::vector<std::size_t> pick_idx = all;
      if (resample) {
        std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
        for (auto& k : pick_idx) k = pick(rng);
      }
      replicates.push_back(top_r_projector(detail::average_scatter<Scalar>(rows, pick_idx, cfg.center), r).matrix);
    }
  }

  Matrix<Scalar> raw = Matrix<Scalar>::Zero(d, d);
  for (const auto& q : replicates) raw += q;
  raw /= Scalar(replicates.size());
  proto.projector = top_r_projector(raw, r);

  std::vector<Scalar> spread;
  spread.reserve(replicates.size());
  for (const auto& q : replicates) spread.push_back((q - proto.projector.matrix).norm());
  proto.dispersion = detail::median(std::move(spread));
  return proto;
}

template <typename Scalar>
Scalar prototype_separation(const std::vector<Prototype<Scalar>>& prototypes) {
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (std::size_t a = 0; a < prototypes.size(); ++a)
    for (std::size_t b = a + 1; b < prototypes.size(); ++b)
      best = std::min(best, projector_distance(prototypes[a].projector, prototypes[b].projector));
  return best;
}

/// s_k - max_{j != k} s_j.
template <typename Scalar>
Scalar overlap_margin(const std::vector<Scalar>& scores, std::size_t k) {
  Scalar rival = -std::numeric_limits<Scalar>::infinity();
  for (std::size_t j = 0; j < scores.size(); ++j)
    if (j != k) rival = std::max(rival, scores[j]);
  return scores[k] - rival;
}

namespace detail {

template <typename Scalar>
void check_prototypes(const std::vector<Prototype<Scalar>>& prototypes, Index d, Index r) {
  require(prototypes.size() >= 2, ErrorCode::too_few_prototypes, "classification needs at least two prototypes");
  for (const auto& p : prototypes) {
    require(p.projector.dim() == d, ErrorCode::dimension_mismatch,
            "prototype '" + p.class_id + "' has ambient dimension " + std::to_string(p.projector.dim()) +
                ", test batch has " + std::to_string(d));
    require(p.projector.rank == r, ErrorCode::rank_mismatch,
            "prototype '" + p.class_id + "' has rank " + std::to_string(p.projector.rank) + ", expected " +
                std::to_string(r));
  }
}

template <typename Scalar>
GpsoDiagnostics<Scalar> diagnostics_for(const Matrix<Scalar>& test_scatter, const std::vector<Scalar>& scores,
                                        const std::vector<Prototype<Scalar>>& prototypes, std::size_t k, Index r) {
  GpsoDiagnostics<Scalar> diag;
  diag.rank = r;
  diag.delta_P = prototype_separation(prototypes);
  diag.epsilon = operator_norm(Matrix<Scalar>(test_scatter - prototypes[k].surrogate_scatter));
  diag.gamma = prototypes[k].surrogate_gap;
  diag.delta_proto = prototypes[k].dispersion;
  diag.margin = overlap_margin(scores, k);
  diag.normalized_margin = diag.margin / Scalar(r);
  diag.margin_condition_pass = diag.condition_lhs() < diag.delta_P / Scalar(4);
  return diag;
}

}  // namespace detail

/// Overlap scores of a test batch against each prototype plus its per-item scatter.
template <typename Scalar>
std::pair<std::vector<Scalar>, Matrix<Scalar>> overlap_scores(const EmbeddingBatch<Scalar>& test,
                                                              const std::vector<Prototype<Scalar>>& prototypes,
                                                              Index r, const PipelineConfig& cfg) {
  const Matrix<Scalar> v = preprocess_rows(test, cfg.l2);
  detail::check_prototypes(prototypes, v.cols(), r);
  const auto projector = scatter_projector(v, cfg.center, r, cfg.route);
  std::vector<Scalar> scores;
  scores.reserve(prototypes.size());
  for (const auto& p : prototypes) scores.push_back(projector_overlap(projector, p.projector));
  return {std::move(scores), mean_scatter(v, cfg.center)};
}

/// argmax_k <P_test, P_k>_F; overlap ties go to the lexicographically smallest class id.
template <typename Scalar>
Classification<Scalar> classify(const EmbeddingBatch<Scalar>& test, const std::vector<Prototype<Scalar>>& prototypes,
                                Index r, const PipelineConfig& cfg) {
  auto [scores, scatter] = overlap_scores(test, prototypes, r, cfg);
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best] || (scores[k] == scores[best] && prototypes[k].class_id < prototypes[best].class_id))
      best = k;
  }
  Classification<Scalar> out;
  out.class_id = prototypes[best].class_id;
  out.diagnostics = detail::diagnostics_for(scatter, scores, prototypes, best, r);
  out.scores = std::move(scores);
  return out;
}

/// Diagnostics of the margin condition evaluated against a named class (e.g. the
/// known true class of a planted instance) rather than the predicted one.
template <typename Scalar>
GpsoDiagnostics<Scalar> margin_diagnostics(const EmbeddingBatch<Scalar>& test,
                                           const std::vector<Prototype<Scalar>>& prototypes,
                                           const std::string& class_id, Index r, const PipelineConfig& cfg) {
  auto [scores, scatter] = overlap_scores(test, prototypes, r, cfg);
  for (std::size_t k = 0; k < prototypes.size(); ++k)
    if (prototypes[k].class_id == class_id) return detail::diagnostics_for(scatter, scores, prototypes, k, r);
  fail(ErrorCode::empty_class, "no prototype for class '" + class_id + "'");
}

/// Common rank: the minimum over classes of the eigengap rank of each class's
/// average per-item scatter, with r_max clamped to d - 1.
template <typename Scalar>
Index common_rank(const std::vector<Matrix<Scalar>>& class_scatters, Index r_max) {
  Index r = std::numeric_limits<Index>::max();
  for (const auto& s : class_scatters) {
    if (s.rows() < 2) return 1;
    r = std::min(r, eigengap_rank(descending_eigenvalues(s), std::min<Index>(r_max, s.rows() - 1)));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Grouped cross-validation

struct FoldRecord {
  std::string group_id;
  Index split = 0;
  std::string predicted;
  std::string truth;
  double margin = 0;
  double norm_margin = 0;
  Index rank = 0;
  double delta_P = 0;
  double epsilon = 0;
  double gamma = 0;
  double delta_proto = 0;
  bool margin_pass = false;
};

struct ClassAccuracy {
  std::string class_id;
  Index correct = 0;
  Index total = 0;
  double accuracy() const { return total ? double(correct) / double(total) : std::nan(""); }
};

struct AccuracySummary {
  std::vector<ClassAccuracy> per_class;  // sorted by class id
  double macro_accuracy = std::nan("");
};

struct GroupSummary {
  std::string group_id;
  AccuracySummary accuracy;
};

struct CvSummary {
  AccuracySummary accuracy;
  double mean_norm_margin = 0;
  double mean_delta_P = 0;
  double mean_rank = 0;
  double margin_pass_fraction = 0;
  Index records = 0;
  Index skipped_groups = 0;
};

struct CvReport {
  std::vector<FoldRecord> folds;
  std::vector<GroupSummary> groups;
  std::vector<std::string> skipped_groups;
  CvSummary summary;
};

AccuracySummary summarize_accuracy(std::span<const FoldRecord> records);
CvSummary summarize(const std::vector<FoldRecord>& records, Index skipped);

/// Within-group stratified CV. Each group needs at least two labelled rows per
/// class; groups short of that are skipped and counted.
template <typename Scalar>
CvReport grouped_cv_evaluate(const std::vector<EmbeddingBatch<Scalar>>& dataset, const PipelineConfig& cfg) {
  cfg.validate();
  CvReport report;
  const std::array<ClassLabel, 2> labels{ClassLabel::good, ClassLabel::bad};

  for (std::size_t g = 0; g < dataset.size(); ++g) {
    const auto& group = dataset[g];
    validate(group);
    std::map<std::string, std::vector<Index>> members;
    for (ClassLabel label : labels) {
      std::vector<Index> idx;
      for (Index i = 0; i < group.size(); ++i) {
        const auto row_label = group.row_labels.empty() ? group.class_label
                                                        : group.row_labels[static_cast<std::size_t>(i)];
        if (row_label == label) idx.push_back(i);
      }
      members.emplace(std::string(to_string(label)), std::move(idx));
    }
    const bool evaluable =
        std::all_of(members.begin(), members.end(), [](const auto& kv) { return kv.second.size() >= 2; });
    if (!evaluable) {
      report.skipped_groups.push_back(group.group_id);
      continue;
    }

    std::vector<FoldRecord> group_records;
    for (Index split = 0; split < cfg.n_splits; ++split) {
      Rng rng = make_stream(cfg.seed, {static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(split)});
      std::vector<std::string> class_ids;
      std::vector<EmbeddingBatch<Scalar>> train, test;
      std::vector<Matrix<Scalar>> scatters;
      for (auto& [class_id, idx] : members) {
        std::vector<Index> order = idx;
        std::shuffle(order.begin(), order.end(), rng);
        const auto n = static_cast<Index>(order.size());
        const Index n_train =
            std::clamp<Index>(static_cast<Index>(std::llround(cfg.train_fraction * double(n))), 1, n - 1);
        const std::span<const Index> all(order);
        train.push_back(select_rows(group, all.subspan(0, static_cast<std::size_t>(n_train))));
        test.push_back(select_rows(group, all.subspan(static_cast<std::size_t>(n_train))));
        scatters.push_back(mean_scatter(preprocess_rows(train.back(), cfg.l2), cfg.center));
        class_ids.push_back(class_id);
      }
      const Index r = common_rank(scatters, cfg.r_max);
      std::vector<Prototype<Scalar>> prototypes;
      for (std::size_t k = 0; k < class_ids.size(); ++k)
        prototypes.push_back(build_prototype(class_ids[k], std::vector<EmbeddingBatch<Scalar>>{train[k]}, r, cfg, rng));

      for (std::size_t k = 0; k < class_ids.size(); ++k) {
        const auto result = classify(test[k], prototypes, r, cfg);
        const auto& dg = result.diagnostics;
        FoldRecord rec;
        rec.group_id = group.group_id;
        rec.split = split;
        rec.predicted = result.class_id;
        rec.truth = class_ids[k];
        rec.margin = double(dg.margin);
        rec.norm_margin = double(dg.normalized_margin);
        rec.rank = r;
        rec.delta_P = double(dg.delta_P);
        rec.epsilon = double(dg.epsilon);
        rec.gamma = double(dg.gamma);
        rec.delta_proto = double(dg.delta_proto);
        rec.margin_pass = dg.margin_condition_pass;
        group_records.push_back(std::move(rec));
      }
    }
    report.groups.push_back({group.group_id, summarize_accuracy(group_records)});
    report.folds.insert(report.folds.end(), group_records.begin(), group_records.end());
  }
  require(!report.folds.empty(), ErrorCode::no_evaluable_groups,
          "no group has at least two items of every class (" + std::to_string(report.skipped_groups.size()) +
              " skipped)");
  report.summary = summarize(report.folds, static_cast<Index>(report.skipped_groups.size()));
  return report;
}

}  // namespace crcgram::gpso
