#pragma once

// Threshold selection under conformal risk control: plain CRC, batched-bootstrap
// CRC and randomized batched weighted-average CRC. All three return the smallest
// grid lambda whose bias-corrected empirical risk is within budget, capped at
// REJECT_ALL.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crcgram/risk_policy.hpp"
#include "crcgram/rng.hpp"

namespace crcgram::calib {

/// Feasibility slack on the risk constraint. Rational constraint values that sit
/// exactly on alpha would otherwise flip on the last ulp of the summation order.
inline constexpr double kConstraintTolerance = 1e-12;

struct BatchPartition {
  std::vector<std::span<const CalibrationItem>> batches;
  std::size_t G = 0;
  std::size_t I = 0;
  std::size_t dropped = 0;  // trailing items left out when truncating
};

/// Equal batches in input order. IndivisibleBatching unless G divides n, or
/// `truncate` is set, in which case the last n mod G items are dropped.
BatchPartition partition_batches(std::span<const CalibrationItem> items, std::size_t G, bool truncate = false);

struct WeightLaw {
  enum class Kind { dirichlet, multinomial_count, uniform };
  Kind kind = Kind::uniform;
  double eta = 0;      // dirichlet concentration per coordinate
  std::size_t K = 0;   // multinomial draw count

  static WeightLaw dirichlet(double eta) { return {Kind::dirichlet, eta, 0}; }
  static WeightLaw multinomial_count(std::size_t K) { return {Kind::multinomial_count, 0, K}; }
  static WeightLaw uniform() { return {Kind::uniform, 0, 0}; }

  void validate() const;
  /// The value written in the K_or_eta report column.
  std::string parameter_text() const;
};

struct SimplexWeights {
  std::vector<double> weights;
  WeightLaw law;
  std::vector<std::size_t> indices;  // multinomial draws, kept for replay
};

SimplexWeights sample_dirichlet(double eta, std::size_t I, Rng& rng);
SimplexWeights multinomial_count_weights(std::size_t I, std::size_t K, Rng& rng);
SimplexWeights uniform_weights(std::size_t I);
SimplexWeights sample_weights(const WeightLaw& law, std::size_t I, Rng& rng);

/// K indices uniform on {0..I-1}; the single draw routine behind bootstrap
/// replicates and multinomial-count weights.
std::vector<std::size_t> draw_indices(std::size_t I, std::size_t K, Rng& rng);

/// Distinct item scores together with 0, ascending. REJECT_ALL sits implicitly past the end.
std::vector<double> lambda_grid(std::span<const CalibrationItem> items);

/// One additive term of a calibration objective: `value` counts toward the risk
/// at every lambda <= `score`.
struct Contribution {
  double score;
  double value;
};

/// Smallest lambda on `grid` with sum_{score >= lambda} value / normalizer + offset <= alpha,
/// REJECT_ALL when none qualifies.
Lambda smallest_feasible_lambda(std::vector<Contribution> terms, std::span<const double> grid, double normalizer,
                                double offset, double alpha);

void check_alpha(double alpha);

Threshold crc_calibrate(std::span<const CalibrationItem> items, double alpha);

struct BatchingOptions {
  bool truncate = false;
};

/// Optional record of the randomness a calibration consumed.
struct CalibrationTrace {
  std::vector<std::vector<std::size_t>> replicate_indices;  // BB-CRC: per batch, K within-batch indices
  std::vector<SimplexWeights> weights;                      // RBWA-CRC: per batch
  std::size_t dropped = 0;
};

Threshold bb_crc_calibrate(std::span<const CalibrationItem> items, std::size_t G, std::size_t K, double alpha,
                           Rng& rng, BatchingOptions options = {}, CalibrationTrace* trace = nullptr);

Threshold rbwa_crc_calibrate(std::span<const CalibrationItem> items, std::size_t G, const WeightLaw& law,
                             double alpha, Rng& rng, BatchingOptions options = {}, CalibrationTrace* trace = nullptr);

/// Calibrator choice plus its knobs, as used by the CLI and the Monte Carlo harness.
struct CalibratorConfig {
  CalibratorKind kind = CalibratorKind::crc;
  std::size_t G = 10;
  std::size_t K = 50;
  WeightLaw law = WeightLaw::dirichlet(1.0);
  BatchingOptions batching;

  std::string parameter_text() const;  // K_or_eta column
};

/// Runs the configured calibrator with a fresh stream seeded by `seed`.
Threshold calibrate(const CalibratorConfig& cfg, std::span<const CalibrationItem> items, double alpha,
                    std::uint64_t seed, CalibrationTrace* trace = nullptr);

}  // namespace crcgram::calib
