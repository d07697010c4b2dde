#include "crcgram/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace crcgram::mc {

namespace {

struct MeanSe {
  double mean = 0;
  double se = 0;
};

// Sample mean and standard error (n-1 denominator); se = 0 for fewer than two values.
MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  if (xs.empty()) return out;
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / double(xs.size() - 1)) / std::sqrt(double(xs.size()));
  return out;
}

double relative_error(double empirical, double closed) {
  if (closed == 0.0) return empirical == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(empirical - closed) / std::abs(closed);
}

calib::SimplexWeights clt_weights(const std::optional<double>& eta, std::size_t I, Rng& rng) {
  return eta ? calib::sample_dirichlet(*eta, I, rng) : calib::uniform_weights(I);
}

}  // namespace

void SyntheticSpec::validate() const {
  require(n >= 4, ErrorCode::invalid_spec, "n must be >= 4");
  require(trials >= 1, ErrorCode::invalid_spec, "trials must be >= 1");
  require(fresh_eval_size >= 100, ErrorCode::invalid_spec, "fresh_eval_size must be >= 100");
  if (score.kind == ScoreLaw::Kind::beta)
    require(std::isfinite(score.a) && std::isfinite(score.b) && score.a > 0 && score.b > 0, ErrorCode::invalid_spec,
            "beta parameters must be positive");
  if (severity.kind == SeverityModel::Kind::logistic)
    require(!std::isnan(severity.k) && severity.k >= 0 && std::isfinite(severity.q0), ErrorCode::invalid_spec,
            "logistic severity needs k >= 0 and finite q0");
  else
    require(std::isfinite(severity.tau), ErrorCode::invalid_spec, "deterministic severity needs finite tau");
}

SyntheticSpec SyntheticSpec::logistic_benchmark(std::uint64_t seed) {
  SyntheticSpec s;
  s.n = 200;
  s.score = ScoreLaw::uniform01();
  s.severity = SeverityModel::logistic(10.0, 0.5);
  s.trials = 500;
  s.fresh_eval_size = 2000;
  s.seed = seed;
  return s;
}

double draw_score(const ScoreLaw& law, Rng& rng) {
  if (law.kind == ScoreLaw::Kind::uniform01) return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const double x = std::gamma_distribution<double>(law.a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(law.b, 1.0)(rng);
  return x + y > 0 ? x / (x + y) : 0.5;
}

double draw_severity(const SeverityModel& model, double q, Rng& rng) {
  if (model.kind == SeverityModel::Kind::deterministic) return q < model.tau ? 1.0 : 0.0;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double p;
  if (std::isinf(model.k))
    p = q < model.q0 ? 1.0 : 0.0;
  else
    p = 1.0 / (1.0 + std::exp(-model.k * (model.q0 - q)));
  return u < p ? 1.0 : 0.0;
}

CalibrationItem draw_item(const SyntheticSpec& spec, Rng& rng) {
  CalibrationItem item;
  item.score = draw_score(spec.score, rng);
  item.severity = draw_severity(spec.severity, item.score, rng);
  return item;
}

Trial generate_trial(const SyntheticSpec& spec, std::size_t trial_index) {
  spec.validate();
  Rng rng = make_stream(spec.seed, {0, trial_index});
  Trial t;
  t.calibration.reserve(spec.n);
  t.fresh.reserve(spec.fresh_eval_size);
  for (std::size_t i = 0; i < spec.n; ++i) t.calibration.push_back(draw_item(spec, rng));
  for (std::size_t i = 0; i < spec.fresh_eval_size; ++i) t.fresh.push_back(draw_item(spec, rng));
  return t;
}

std::vector<calib::CalibratorConfig> benchmark_calibrators() {
  calib::CalibratorConfig crc;
  crc.kind = CalibratorKind::crc;
  calib::CalibratorConfig bb;
  bb.kind = CalibratorKind::bb_crc;
  bb.G = 10;
  bb.K = 50;
  calib::CalibratorConfig rbwa;
  rbwa.kind = CalibratorKind::rbwa_crc;
  rbwa.G = 10;
  rbwa.law = calib::WeightLaw::dirichlet(1.0);
  return {crc, bb, rbwa};
}

std::vector<RiskReportRow> run_risk_experiment(const SyntheticSpec& spec,
                                               std::span<const calib::CalibratorConfig> configs,
                                               std::span<const double> alphas, std::size_t workers,
                                               std::vector<std::vector<TrialOutcome>>* outcomes) {
  spec.validate();
  for (double a : alphas) calib::check_alpha(a);
  const std::size_t cells = configs.size() * alphas.size();
  // results[cell][trial]
  std::vector<std::vector<TrialOutcome>> results(cells, std::vector<TrialOutcome>(spec.trials));

  auto run_trial = [&](std::size_t trial) {
    const Trial data = generate_trial(spec, trial);
    for (std::size_t c = 0; c < configs.size(); ++c) {
      const std::uint64_t seed = derive_seed(spec.seed, {1, trial, c});
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        const Threshold t = calib::calibrate(configs[c], data.calibration, alphas[a], seed);
        results[c * alphas.size() + a][trial] = {t.lambda, empirical_risk(data.fresh, t.lambda)};
      }
    }
  };

  workers = std::max<std::size_t>(1, std::min(workers, spec.trials));
  if (workers == 1) {
    for (std::size_t trial = 0; trial < spec.trials; ++trial) run_trial(trial);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t trial; (trial = next.fetch_add(1)) < spec.trials;) run_trial(trial);
        } catch (...) {
          errors[w] = std::current_exception();
          next = spec.trials;
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<RiskReportRow> rows;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const auto& cell = results[c * alphas.size() + a];
      std::vector<double> risks, lambdas;
      for (const auto& o : cell) {
        risks.push_back(o.fresh_risk);
        if (!o.lambda.is_reject_all()) lambdas.push_back(o.lambda.value());
      }
      RiskReportRow row;
      row.calibrator = std::string(to_string(configs[c].kind));
      row.config = configs[c];
      row.alpha = alphas[a];
      const MeanSe r = mean_se(risks);
      const MeanSe l = mean_se(lambdas);
      row.mean_empirical_risk = r.mean;
      row.risk_se = r.se;
      row.mean_lambda = l.mean;
      row.lambda_se = l.se;
      row.reject_all_frac = double(cell.size() - lambdas.size()) / double(cell.size());
      row.trials = cell.size();
      rows.push_back(row);
    }
  }
  if (outcomes) *outcomes = std::move(results);
  return rows;
}

MomentReport rbwa_moment_check(std::span<const double> losses, double eta, std::size_t num_samples, Rng& rng,
                               double cantelli_t) {
  require(std::isfinite(eta) && eta > 0, ErrorCode::invalid_eta, "eta must be > 0");
  require(losses.size() >= 2, ErrorCode::invalid_spec, "moment check needs I >= 2");
  require(num_samples >= 2, ErrorCode::invalid_spec, "moment check needs at least two samples");
  const std::size_t I = losses.size();
  MomentReport rep;
  rep.I = I;
  rep.eta = eta;
  rep.kappa = double(I) * eta;
  rep.samples = num_samples;
  // Constant losses give L == l_0 exactly; summing p_i * l_0 would leave rounding noise.
  const bool constant = std::all_of(losses.begin(), losses.end(), [&](double l) { return l == losses[0]; });
  rep.closed_mean = constant ? losses[0] : std::accumulate(losses.begin(), losses.end(), 0.0) / double(I);
  for (double l : losses) rep.var_emp += (l - rep.closed_mean) * (l - rep.closed_mean);
  rep.var_emp /= double(I);
  rep.closed_var = rep.var_emp / (rep.kappa + 1.0);
  const double I2k = double(I) * double(I) * (rep.kappa + 1.0);
  rep.coord_closed_mean = 1.0 / double(I);
  rep.coord_closed_var = double(I - 1) / I2k;
  rep.coord_closed_cov = -1.0 / I2k;
  rep.cantelli_t = cantelli_t;

  std::vector<double> L(num_samples);
  std::vector<double> sum(I, 0.0), sumsq(I, 0.0);
  double sum01 = 0.0;
  for (std::size_t s = 0; s < num_samples; ++s) {
    const auto p = calib::sample_dirichlet(eta, I, rng);
    double v = 0.0;
    for (std::size_t i = 0; i < I; ++i) {
      v += p.weights[i] * losses[i];
      sum[i] += p.weights[i];
      sumsq[i] += p.weights[i] * p.weights[i];
    }
    sum01 += p.weights[0] * p.weights[1];
    L[s] = constant ? losses[0] : v;
  }
  const double ns = double(num_samples);
  rep.empirical_mean = constant ? losses[0] : std::accumulate(L.begin(), L.end(), 0.0) / ns;
  double ss = 0.0;
  std::size_t exceed = 0;
  for (double v : L) {
    ss += (v - rep.empirical_mean) * (v - rep.empirical_mean);
    if (v - rep.closed_mean >= cantelli_t) ++exceed;
  }
  rep.empirical_var = ss / (ns - 1.0);
  rep.mean_rel_error = relative_error(rep.empirical_mean, rep.closed_mean);
  rep.var_rel_error = relative_error(rep.empirical_var, rep.closed_var);
  rep.cantelli_frequency = double(exceed) / ns;
  rep.cantelli_bound = cantelli_t > 0 ? rep.closed_var / (rep.closed_var + cantelli_t * cantelli_t) : 1.0;

  for (std::size_t i = 0; i < I; ++i) {
    const double m = sum[i] / ns;
    rep.coord_means.push_back(m);
    rep.coord_vars.push_back((sumsq[i] - ns * m * m) / (ns - 1.0));
  }
  rep.coord_cov01 = (sum01 - ns * rep.coord_means[0] * rep.coord_means[1]) / (ns - 1.0);
  return rep;
}

AntiConcentrationReport anti_concentration_check(std::span<const double> losses, double eta, std::size_t num_samples,
                                                 Rng& rng) {
  require(std::isfinite(eta) && eta > 0, ErrorCode::invalid_eta, "eta must be > 0");
  std::vector<double> distinct(losses.begin(), losses.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  require(distinct.size() >= 2, ErrorCode::constant_losses, "losses must take at least two distinct values");

  std::vector<double> L(num_samples);
  for (auto& v : L) {
    const auto p = calib::sample_dirichlet(eta, losses.size(), rng);
    v = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) v += p.weights[i] * losses[i];
  }
  std::sort(L.begin(), L.end());
  AntiConcentrationReport rep;
  rep.samples = num_samples;
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t s = 1; s < L.size(); ++s) rep.min_gap = std::min(rep.min_gap, L[s] - L[s - 1]);
  rep.distinct = static_cast<std::size_t>(std::unique(L.begin(), L.end()) - L.begin());
  rep.pass = rep.distinct == num_samples;
  return rep;
}

double ks_distance_to_normal(std::vector<double> z) {
  if (z.empty()) return 0.0;
  std::sort(z.begin(), z.end());
  const double n = double(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double F = 0.5 * std::erfc(-z[i] / std::sqrt(2.0));
    d = std::max({d, double(i + 1) / n - F, F - double(i) / n});
  }
  return d;
}

bool CltReport::strictly_decreasing() const {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].ks_distance < rows[i - 1].ks_distance)) return false;
  return !rows.empty();
}

CltReport clt_check(const SyntheticSpec& spec, const CltConfig& cfg, Rng& rng) {
  spec.validate();
  require(cfg.batch_size >= 1, ErrorCode::invalid_spec, "batch_size must be >= 1");
  require(cfg.replications >= 2, ErrorCode::invalid_spec, "replications must be >= 2");
  require(!cfg.G_list.empty(), ErrorCode::invalid_spec, "G list is empty");
  if (cfg.eta) require(std::isfinite(*cfg.eta) && *cfg.eta > 0, ErrorCode::invalid_eta, "eta must be > 0");
  const Lambda lambda = Lambda::at(cfg.lambda);
  const std::size_t I = cfg.batch_size;
  // kappa -> inf for uniform weights, so the weight term drops out.
  const double shrink = cfg.eta ? 1.0 / (double(I) * *cfg.eta + 1.0) : 0.0;

  CltReport report;
  std::vector<double> ell(I);
  for (std::size_t G : cfg.G_list) {
    require(G >= 1, ErrorCode::invalid_spec, "G must be >= 1");
    std::vector<double> batch_means;  // L-bar_G per replication
    batch_means.reserve(cfg.replications);
    double sum_mu = 0, sum_mu2 = 0, sum_varemp = 0;
    for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
      double acc = 0.0;
      for (std::size_t g = 0; g < G; ++g) {
        double mu_g = 0.0;
        for (std::size_t i = 0; i < I; ++i) {
          ell[i] = loss(draw_item(spec, rng), lambda);
          mu_g += ell[i];
        }
        mu_g /= double(I);
        double var_g = 0.0;
        for (double l : ell) var_g += (l - mu_g) * (l - mu_g);
        var_g /= double(I);
        const auto p = clt_weights(cfg.eta, I, rng);
        double Lg = 0.0;
        for (std::size_t i = 0; i < I; ++i) Lg += p.weights[i] * ell[i];
        acc += Lg;
        sum_mu += mu_g;
        sum_mu2 += mu_g * mu_g;
        sum_varemp += var_g;
      }
      batch_means.push_back(acc / double(G));
    }
    const double nb = double(G) * double(cfg.replications);
    CltRow row;
    row.G = G;
    row.replications = cfg.replications;
    row.mu = sum_mu / nb;
    const double var_mu = std::max(0.0, sum_mu2 / nb - row.mu * row.mu);
    row.variance = (sum_varemp / nb) * shrink + var_mu;
    row.zero_variance = !(row.variance > 0.0);
    if (row.zero_variance) {
      row.ks_distance = 0.0;
    } else {
      const double scale = std::sqrt(double(G) / row.variance);
      for (auto& m : batch_means) m = (m - row.mu) * scale;
      row.ks_distance = ks_distance_to_normal(std::move(batch_means));
    }
    report.rows.push_back(row);
  }
  return report;
}

FsReductionRow fs_reduction_report(std::span<const CalibrationItem> items, const Threshold& threshold,
                                   std::string policy) {
  require(!items.empty(), ErrorCode::empty_input, "no items for FS reduction");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double shipped_sum = 0, unshipped_sum = 0;
  std::size_t shipped = 0;
  for (const auto& item : items) {
    if (IndicatorGate{}(item.score, threshold.lambda) > 0) {
      shipped_sum += item.severity;
      ++shipped;
    } else {
      unshipped_sum += item.severity;
    }
  }
  const std::size_t unshipped = items.size() - shipped;
  FsReductionRow row;
  row.policy = std::move(policy);
  row.alpha = threshold.alpha;
  row.fs_shipped = shipped ? shipped_sum / double(shipped) : nan;
  row.fs_unshipped = unshipped ? unshipped_sum / double(unshipped) : nan;
  row.fs_reduction_pct = 100.0 * (1.0 - row.fs_shipped / row.fs_unshipped);
  if (!std::isfinite(row.fs_reduction_pct)) row.fs_reduction_pct = nan;
  row.acceptance_rate = double(shipped) / double(items.size());
  return row;
}

}  // namespace crcgram::mc
