#pragma once

// Synthetic (Q, m) generators and the Monte Carlo experiments run on them:
// risk-vs-alpha tables, RBWA weight moments, anti-concentration, the batch-mean
// CLT, and FS-reduction summaries.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crcgram/calibrators.hpp"
#include "crcgram/risk_policy.hpp"
#include "crcgram/rng.hpp"

namespace crcgram::mc {

struct ScoreLaw {
  enum class Kind { uniform01, beta };
  Kind kind = Kind::uniform01;
  double a = 1, b = 1;

  static ScoreLaw uniform01() { return {}; }
  static ScoreLaw beta(double a, double b) { return {Kind::beta, a, b}; }
};

/// logistic: m | Q ~ Bernoulli(sigmoid(k (q0 - Q))); k = +inf gives 1{Q < q0}.
/// deterministic: m = 1{Q < tau}.
struct SeverityModel {
  enum class Kind { logistic, deterministic };
  Kind kind = Kind::logistic;
  double k = 10, q0 = 0.5, tau = 0.5;

  static SeverityModel logistic(double k, double q0) { return {Kind::logistic, k, q0, 0}; }
  static SeverityModel deterministic(double tau) { return {Kind::deterministic, 0, 0, tau}; }
};

struct SyntheticSpec {
  std::size_t n = 200;
  ScoreLaw score;
  SeverityModel severity;
  std::size_t trials = 500;
  std::size_t fresh_eval_size = 2000;
  std::uint64_t seed = 0;

  void validate() const;  // InvalidSpec

  /// n = 200, uniform scores, logistic severity with k = 10, q0 = 0.5, 500 trials, 2000 fresh items.
  static SyntheticSpec logistic_benchmark(std::uint64_t seed = 0);
};

double draw_score(const ScoreLaw& law, Rng& rng);
double draw_severity(const SeverityModel& model, double q, Rng& rng);
CalibrationItem draw_item(const SyntheticSpec& spec, Rng& rng);

struct Trial {
  std::vector<CalibrationItem> calibration;
  std::vector<CalibrationItem> fresh;
};

/// Both sets drawn i.i.d. from the score and severity laws on the stream (seed, trial_index).
Trial generate_trial(const SyntheticSpec& spec, std::size_t trial_index);

struct RiskReportRow {
  std::string calibrator;
  calib::CalibratorConfig config;
  double alpha = 0;
  double mean_empirical_risk = 0;
  double risk_se = 0;
  double mean_lambda = 0;       // over trials with a real threshold; 0 if there are none
  double lambda_se = 0;         // same trials; 0 when fewer than two
  double reject_all_frac = 0;
  std::size_t trials = 0;
};

/// Per-trial outcome of one (calibrator, alpha) cell.
struct TrialOutcome {
  Lambda lambda = Lambda::reject_all();
  double fresh_risk = 0;
};

/// Rows ordered calibrator-major, then alpha in the given order. Each trial
/// calibrates every config with a stream that does not depend on alpha, so
/// lambda-hat is monotone in alpha within a trial. Output is independent of `workers`.
std::vector<RiskReportRow> run_risk_experiment(const SyntheticSpec& spec,
                                               std::span<const calib::CalibratorConfig> configs,
                                               std::span<const double> alphas, std::size_t workers = 1,
                                               std::vector<std::vector<TrialOutcome>>* outcomes = nullptr);

/// The three calibrators of the logistic benchmark: CRC, BB-CRC(G=10, K=50), RBWA(G=10, eta=1).
std::vector<calib::CalibratorConfig> benchmark_calibrators();

struct MomentReport {
  std::size_t I = 0;
  double eta = 0;
  double kappa = 0;
  std::size_t samples = 0;
  double closed_mean = 0;
  double empirical_mean = 0;
  double var_emp = 0;  // population variance of the losses
  double closed_var = 0;
  double empirical_var = 0;
  double mean_rel_error = 0;
  double var_rel_error = 0;  // 0 when both variances vanish
  // Dirichlet coordinates
  double coord_closed_mean = 0;
  double coord_closed_var = 0;
  double coord_closed_cov = 0;
  std::vector<double> coord_means;
  std::vector<double> coord_vars;
  double coord_cov01 = 0;
  // one-sided Cantelli check P(L - mu >= t) <= Var / (Var + t^2)
  double cantelli_t = 0;
  double cantelli_frequency = 0;
  double cantelli_bound = 0;
};

MomentReport rbwa_moment_check(std::span<const double> losses, double eta, std::size_t num_samples, Rng& rng,
                               double cantelli_t = 0.1);

struct AntiConcentrationReport {
  bool pass = false;
  std::size_t samples = 0;
  std::size_t distinct = 0;
  double min_gap = 0;  // smallest gap between sorted neighbours
};

/// ConstantLosses if fewer than two distinct loss values.
AntiConcentrationReport anti_concentration_check(std::span<const double> losses, double eta, std::size_t num_samples,
                                                 Rng& rng);

struct CltConfig {
  double lambda = 0.9;
  std::vector<std::size_t> G_list{10, 100, 1000};
  std::optional<double> eta = 1.0;  // empty: uniform weights
  std::size_t batch_size = 20;
  std::size_t replications = 2000;
};

struct CltRow {
  std::size_t G = 0;
  double mu = 0;
  double variance = 0;  // plug-in E[Var_emp]/(kappa+1) + Var(mu_g)
  double ks_distance = 0;
  bool zero_variance = false;
  std::size_t replications = 0;
};

struct CltReport {
  std::vector<CltRow> rows;
  bool strictly_decreasing() const;
};

CltReport clt_check(const SyntheticSpec& spec, const CltConfig& cfg, Rng& rng);

/// sup_x |F_n(x) - Phi(x)|.
double ks_distance_to_normal(std::vector<double> z);

struct FsReductionRow {
  std::string policy;
  double alpha = 0;
  double fs_unshipped = 0;  // NaN when nothing is held back
  double fs_shipped = 0;    // NaN when nothing ships
  double fs_reduction_pct = 0;
  double acceptance_rate = 0;
};

FsReductionRow fs_reduction_report(std::span<const CalibrationItem> items, const Threshold& threshold,
                                   std::string policy = {});

}  // namespace crcgram::mc
