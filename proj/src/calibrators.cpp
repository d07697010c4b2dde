#include "crcgram/calibrators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace crcgram::calib {

BatchPartition partition_batches(std::span<const CalibrationItem> items, std::size_t G, bool truncate) {
  require(!items.empty(), ErrorCode::empty_input, "no calibration items");
  require(G >= 1, ErrorCode::indivisible_batching, "G must be >= 1");
  require(G <= items.size(), ErrorCode::indivisible_batching,
          "G = " + std::to_string(G) + " exceeds n = " + std::to_string(items.size()));
  const std::size_t remainder = items.size() % G;
  require(remainder == 0 || truncate, ErrorCode::indivisible_batching,
          "G = " + std::to_string(G) + " does not divide n = " + std::to_string(items.size()));
  BatchPartition part;
  part.G = G;
  part.I = items.size() / G;
  part.dropped = remainder;
  for (std::size_t g = 0; g < G; ++g) part.batches.push_back(items.subspan(g * part.I, part.I));
  return part;
}

void WeightLaw::validate() const {
  switch (kind) {
    case Kind::dirichlet:
      require(std::isfinite(eta) && eta > 0.0, ErrorCode::invalid_weight_law, "dirichlet eta must be > 0");
      break;
    case Kind::multinomial_count:
      require(K >= 1, ErrorCode::invalid_weight_law, "multinomial count K must be >= 1");
      break;
    case Kind::uniform:
      break;
  }
}

namespace {
std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}
}  // namespace

std::string WeightLaw::parameter_text() const {
  switch (kind) {
    case Kind::dirichlet: return format_g(eta);
    case Kind::multinomial_count: return std::to_string(K);
    case Kind::uniform: return "inf";
  }
  return "";
}

std::vector<std::size_t> draw_indices(std::size_t I, std::size_t K, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, I - 1);
  std::vector<std::size_t> out(K);
  for (auto& idx : out) idx = pick(rng);
  return out;
}

SimplexWeights sample_dirichlet(double eta, std::size_t I, Rng& rng) {
  require(std::isfinite(eta) && eta > 0.0, ErrorCode::invalid_eta, "eta must be > 0");
  require(I >= 1, ErrorCode::invalid_weight_law, "I must be >= 1");
  SimplexWeights out;
  out.law = WeightLaw::dirichlet(eta);
  out.weights.assign(I, 0.0);
  if (I == 1) {
    out.weights[0] = 1.0;
    return out;
  }
  std::gamma_distribution<double> gamma(eta, 1.0);
  double total = 0.0;
  // Very small eta can underflow every variate to zero; redraw in that case.
  while (!(total > 0.0)) {
    total = 0.0;
    for (auto& w : out.weights) {
      w = gamma(rng);
      total += w;
    }
  }
  for (auto& w : out.weights) w /= total;
  return out;
}

SimplexWeights multinomial_count_weights(std::size_t I, std::size_t K, Rng& rng) {
  require(I >= 1, ErrorCode::invalid_weight_law, "I must be >= 1");
  require(K >= 1, ErrorCode::invalid_weight_law, "K must be >= 1");
  SimplexWeights out;
  out.law = WeightLaw::multinomial_count(K);
  out.indices = draw_indices(I, K, rng);
  std::vector<std::size_t> counts(I, 0);
  for (std::size_t idx : out.indices) ++counts[idx];
  out.weights.resize(I);
  for (std::size_t i = 0; i < I; ++i) out.weights[i] = double(counts[i]) / double(K);
  return out;
}

SimplexWeights uniform_weights(std::size_t I) {
  require(I >= 1, ErrorCode::invalid_weight_law, "I must be >= 1");
  SimplexWeights out;
  out.law = WeightLaw::uniform();
  out.weights.assign(I, 1.0 / double(I));
  return out;
}

SimplexWeights sample_weights(const WeightLaw& law, std::size_t I, Rng& rng) {
  law.validate();
  switch (law.kind) {
    case WeightLaw::Kind::dirichlet: return sample_dirichlet(law.eta, I, rng);
    case WeightLaw::Kind::multinomial_count: return multinomial_count_weights(I, law.K, rng);
    case WeightLaw::Kind::uniform: return uniform_weights(I);
  }
  return uniform_weights(I);
}

std::vector<double> lambda_grid(std::span<const CalibrationItem> items) {
  std::vector<double> grid;
  grid.reserve(items.size() + 1);
  grid.push_back(0.0);
  for (const auto& item : items) grid.push_back(item.score);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

Lambda smallest_feasible_lambda(std::vector<Contribution> terms, std::span<const double> grid, double normalizer,
                                double offset, double alpha) {
  std::sort(terms.begin(), terms.end(), [](const Contribution& a, const Contribution& b) { return a.score < b.score; });
  // suffix[k] = sum of values of terms[k..]
  std::vector<double> suffix(terms.size() + 1, 0.0);
  for (std::size_t k = terms.size(); k-- > 0;) suffix[k] = suffix[k + 1] + terms[k].value;

  for (double lambda : grid) {
    const auto first = std::lower_bound(terms.begin(), terms.end(), lambda,
                                        [](const Contribution& c, double l) { return c.score < l; });
    const double risk = suffix[static_cast<std::size_t>(first - terms.begin())] / normalizer + offset;
    if (risk <= alpha + kConstraintTolerance) return Lambda::at(lambda);
  }
  return Lambda::reject_all();
}

void check_alpha(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, ErrorCode::alpha_out_of_range,
          "alpha = " + std::to_string(alpha) + " outside (0,1)");
}

Threshold crc_calibrate(std::span<const CalibrationItem> items, double alpha) {
  check_alpha(alpha);
  require(!items.empty(), ErrorCode::empty_input, "no calibration items");
  std::vector<Contribution> terms;
  terms.reserve(items.size());
  for (const auto& item : items) terms.push_back({item.score, item.severity});
  const double n1 = double(items.size()) + 1.0;
  const auto grid = lambda_grid(items);
  Threshold t;
  t.lambda = smallest_feasible_lambda(std::move(terms), grid, n1, 1.0 / n1, alpha);
  t.alpha = alpha;
  t.calibrator = CalibratorKind::crc;
  return t;
}

Threshold bb_crc_calibrate(std::span<const CalibrationItem> items, std::size_t G, std::size_t K, double alpha,
                           Rng& rng, BatchingOptions options, CalibrationTrace* trace) {
  check_alpha(alpha);
  require(K >= 1, ErrorCode::invalid_weight_law, "K must be >= 1");
  const auto part = partition_batches(items, G, options.truncate);
  std::vector<Contribution> terms;
  terms.reserve(G * K);
  if (trace) {
    trace->replicate_indices.clear();
    trace->dropped = part.dropped;
  }
  for (const auto& batch : part.batches) {
    const auto picks = draw_indices(part.I, K, rng);
    for (std::size_t idx : picks) terms.push_back({batch[idx].score, batch[idx].severity});
    if (trace) trace->replicate_indices.push_back(picks);
  }
  const double g1 = double(G) + 1.0;
  const auto used = items.first(part.G * part.I);
  Threshold t;
  t.lambda = smallest_feasible_lambda(std::move(terms), lambda_grid(used), g1 * double(K), 1.0 / g1, alpha);
  t.alpha = alpha;
  t.calibrator = CalibratorKind::bb_crc;
  return t;
}

Threshold rbwa_crc_calibrate(std::span<const CalibrationItem> items, std::size_t G, const WeightLaw& law,
                             double alpha, Rng& rng, BatchingOptions options, CalibrationTrace* trace) {
  check_alpha(alpha);
  law.validate();
  const auto part = partition_batches(items, G, options.truncate);
  std::vector<Contribution> terms;
  terms.reserve(part.G * part.I);
  if (trace) {
    trace->weights.clear();
    trace->dropped = part.dropped;
  }
  for (const auto& batch : part.batches) {
    auto p = sample_weights(law, part.I, rng);
    for (std::size_t i = 0; i < part.I; ++i) terms.push_back({batch[i].score, p.weights[i] * batch[i].severity});
    if (trace) trace->weights.push_back(std::move(p));
  }
  const double g1 = double(G) + 1.0;
  const auto used = items.first(part.G * part.I);
  Threshold t;
  t.lambda = smallest_feasible_lambda(std::move(terms), lambda_grid(used), g1, 1.0 / g1, alpha);
  t.alpha = alpha;
  t.calibrator = CalibratorKind::rbwa_crc;
  return t;
}

std::string CalibratorConfig::parameter_text() const {
  switch (kind) {
    case CalibratorKind::crc: return "NA";
    case CalibratorKind::bb_crc: return std::to_string(K);
    case CalibratorKind::rbwa_crc: return law.parameter_text();
  }
  return "NA";
}

Threshold calibrate(const CalibratorConfig& cfg, std::span<const CalibrationItem> items, double alpha,
                    std::uint64_t seed, CalibrationTrace* trace) {
  Rng rng(seed);
  Threshold t;
  switch (cfg.kind) {
    case CalibratorKind::crc: t = crc_calibrate(items, alpha); break;
    case CalibratorKind::bb_crc: t = bb_crc_calibrate(items, cfg.G, cfg.K, alpha, rng, cfg.batching, trace); break;
    case CalibratorKind::rbwa_crc:
      t = rbwa_crc_calibrate(items, cfg.G, cfg.law, alpha, rng, cfg.batching, trace);
      break;
  }
  t.seed = seed;
  return t;
}

}  // namespace crcgram::calib
