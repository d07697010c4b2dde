#include "crcgram/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "crcgram/calibrators.hpp"
#include "crcgram/data_io.hpp"
#include "crcgram/gpso.hpp"
#include "crcgram/montecarlo.hpp"
#include "crcgram/risk_policy.hpp"
#include "crcgram/run_config.hpp"

namespace crcgram::cli {

namespace {

struct CalibrateOptions {
  std::string items;
  std::vector<double> alphas;
  std::vector<std::string> methods{"crc"};
  std::size_t G = 10;
  std::size_t K = 50;
  double eta = 1.0;
  std::string weight_law = "dirichlet";
  std::string score_column = "q_score";
  bool truncate = false;
  std::uint64_t seed = 0;
  std::string out = "thresholds.csv";
};

struct GateOptions {
  std::string thresholds;
  std::string scores;
  std::string score_column = "q_score";
  std::string method;
  std::optional<double> alpha;
  std::string out = "decisions.csv";
};

struct GpsoOptions {
  std::string embeddings;
  bool l2 = true;
  bool center = false;
  long r_max = 4;
  long B = 8;
  long n_splits = 5;
  double train_fraction = 0.6;
  std::string route = "auto";
  std::uint64_t seed = 0;
  std::string out = "gpso_report.csv";
  std::string summary = "gpso_summary.csv";
  std::string dataset = "dataset";
};

struct SimulateOptions {
  std::string preset = "logistic";
  std::optional<std::size_t> n;
  std::optional<double> k;
  std::optional<double> q0;
  std::optional<double> tau;
  std::string score_law = "uniform";
  double beta_a = 2.0;
  double beta_b = 2.0;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> fresh;
  std::vector<double> alphas{0.05, 0.1, 0.15, 0.2};
  std::size_t G = 10;
  std::size_t K = 50;
  double eta = 1.0;
  std::vector<std::string> methods{"crc", "bb", "rbwa"};
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  std::string out = "calibration_summary.csv";
};

struct MomentsOptions {
  std::vector<double> losses;
  double eta = 1.0;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  double cantelli_t = 0.1;
  std::string out = "moments.csv";
  std::string clt_out;
  double clt_lambda = 0.9;
  std::vector<std::size_t> clt_G{10, 100, 1000};
  std::size_t clt_batch = 20;
  std::size_t clt_reps = 2000;
  bool clt_uniform = false;
};

struct ReportOptions {
  std::string items;
  std::string mode = "gram-crc";
  std::vector<double> alphas{0.01, 0.05, 0.1};
  std::vector<double> lambdas;
  std::string thresholds;
  std::size_t G = 10;
  std::size_t K = 50;
  double eta = 1.0;
  bool truncate = false;
  std::uint64_t seed = 0;
  std::string out = "fs_reduction.csv";
  std::string policy;
};

calib::CalibratorConfig make_calibrator(const std::string& method, std::size_t G, std::size_t K, double eta,
                                        const std::string& weight_law, bool truncate) {
  const auto kind = parse_calibrator(method);
  require(kind.has_value(), ErrorCode::config_error, "unknown method '" + method + "' (crc, bb, rbwa)");
  calib::CalibratorConfig cfg;
  cfg.kind = *kind;
  cfg.G = G;
  cfg.K = K;
  cfg.batching.truncate = truncate;
  if (weight_law == "dirichlet") {
    require(std::isfinite(eta) && eta > 0, ErrorCode::config_error, "eta must be > 0");
    cfg.law = calib::WeightLaw::dirichlet(eta);
  } else if (weight_law == "multinomial") {
    cfg.law = calib::WeightLaw::multinomial_count(K);
  } else if (weight_law == "uniform") {
    cfg.law = calib::WeightLaw::uniform();
  } else {
    fail(ErrorCode::config_error, "unknown weight law '" + weight_law + "' (dirichlet, multinomial, uniform)");
  }
  return cfg;
}

io::ThresholdRecord make_record(const calib::CalibratorConfig& cfg, const Threshold& t, std::size_t n) {
  io::ThresholdRecord rec;
  rec.threshold = t;
  rec.n = n;
  if (cfg.kind == CalibratorKind::crc) {
    rec.G = n;
    rec.I = 1;
  } else {
    rec.G = cfg.G;
    rec.I = cfg.G ? n / cfg.G : 0;
  }
  rec.parameter = cfg.parameter_text();
  return rec;
}

void require_alphas(const std::vector<double>& alphas) {
  require(!alphas.empty(), ErrorCode::config_error, "alpha list is empty");
  for (double a : alphas) calib::check_alpha(a);
}

int cmd_calibrate(const CalibrateOptions& o, std::ostream& out, std::ostream& err) {
  require_alphas(o.alphas);
  require(!o.methods.empty(), ErrorCode::config_error, "method list is empty");
  std::vector<calib::CalibratorConfig> configs;
  for (const auto& m : o.methods) configs.push_back(make_calibrator(m, o.G, o.K, o.eta, o.weight_law, o.truncate));
  const auto items = io::load_items(o.items, o.score_column);
  require(!items.empty(), ErrorCode::empty_input, o.items + ": no items");

  std::vector<io::ThresholdRecord> records;
  for (const auto& cfg : configs) {
    for (double alpha : o.alphas) {
      calib::CalibrationTrace trace;
      const Threshold t = calib::calibrate(cfg, items, alpha, o.seed, &trace);
      if (trace.dropped && alpha == o.alphas.front())
        err << "warning: " << to_string(cfg.kind) << " dropped " << trace.dropped << " trailing items to form "
            << cfg.G << " equal batches\n";
      records.push_back(make_record(cfg, t, items.size()));
      out << to_string(cfg.kind) << " alpha=" << io::format_exact(alpha) << " lambda_hat=" << format_lambda(t.lambda)
          << " empirical_risk=" << io::format_real(empirical_risk(items, t.lambda)) << " n=" << items.size() << '\n';
    }
  }
  io::write_thresholds(o.out, records);
  return 0;
}

int cmd_gate(const GateOptions& o, std::ostream& out) {
  auto records = io::load_thresholds(o.thresholds);
  std::optional<CalibratorKind> method;
  if (!o.method.empty()) {
    method = parse_calibrator(o.method);
    require(method.has_value(), ErrorCode::config_error, "unknown method '" + o.method + "'");
  }
  std::erase_if(records, [&](const io::ThresholdRecord& r) {
    if (method && r.threshold.calibrator != *method) return true;
    if (o.alpha && std::abs(r.threshold.alpha - *o.alpha) > 1e-12) return true;
    return false;
  });
  require(!records.empty(), ErrorCode::missing_threshold, o.thresholds + ": no threshold matches the selection");
  require(records.size() == 1, ErrorCode::config_error,
          o.thresholds + ": " + std::to_string(records.size()) + " thresholds match; select one with --method/--alpha");
  const Lambda lambda = records.front().threshold.lambda;
  const auto scores = io::load_scores(o.scores, o.score_column);
  const io::Table table = io::decision_table(scores, lambda);
  io::write_report(o.out, table);
  std::size_t shipped = 0;
  for (const auto& s : scores)
    if (gate(s.score, lambda) == Decision::accept) ++shipped;
  out << "lambda_hat=" << format_lambda(lambda) << " shipped=" << shipped << " abstained=" << scores.size() - shipped
      << '\n';
  return 0;
}

int cmd_gpso(const GpsoOptions& o, std::ostream& out, std::ostream& err) {
  gpso::PipelineConfig cfg;
  cfg.l2 = o.l2;
  cfg.center = o.center;
  cfg.r_max = o.r_max;
  cfg.bootstrap_B = o.B;
  cfg.n_splits = o.n_splits;
  cfg.train_fraction = o.train_fraction;
  cfg.seed = o.seed;
  if (o.route == "auto")
    cfg.route = SpectralRoute::automatic;
  else if (o.route == "feature")
    cfg.route = SpectralRoute::feature_space;
  else if (o.route == "item")
    cfg.route = SpectralRoute::item_space;
  else
    fail(ErrorCode::config_error, "unknown route '" + o.route + "' (auto, feature, item)");
  cfg.validate();

  const auto dataset = io::load_embeddings(o.embeddings);
  const auto report = gpso::grouped_cv_evaluate(dataset, cfg);
  if (!report.skipped_groups.empty())
    err << "skipped " << report.skipped_groups.size() << " group(s) with fewer than two items of some class\n";
  io::write_report(o.out, io::gpso_fold_table(report.folds));
  io::write_report(o.summary, io::gpso_summary_table(o.dataset, cfg.pipeline(), report.summary));
  out << "pipeline=" << cfg.pipeline() << " macro_acc=" << io::format_real(report.summary.accuracy.macro_accuracy)
      << " folds=" << report.folds.size() << " margin_pass_fraction="
      << io::format_real(report.summary.margin_pass_fraction) << '\n';
  return 0;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  mc::SyntheticSpec spec = mc::SyntheticSpec::logistic_benchmark(o.seed);
  if (o.preset == "deterministic") {
    spec.severity = mc::SeverityModel::deterministic(o.tau.value_or(0.5));
  } else {
    require(o.preset == "logistic", ErrorCode::config_error, "unknown preset '" + o.preset + "'");
    spec.severity = mc::SeverityModel::logistic(o.k.value_or(10.0), o.q0.value_or(0.5));
    require(!o.tau, ErrorCode::config_error, "--tau applies to the deterministic preset only");
  }
  if (o.preset == "deterministic")
    require(!o.k && !o.q0, ErrorCode::config_error, "--k/--q0 apply to the logistic preset only");
  if (o.score_law == "beta")
    spec.score = mc::ScoreLaw::beta(o.beta_a, o.beta_b);
  else
    require(o.score_law == "uniform", ErrorCode::config_error, "unknown score law '" + o.score_law + "'");
  if (o.n) spec.n = *o.n;
  if (o.trials) spec.trials = *o.trials;
  if (o.fresh) spec.fresh_eval_size = *o.fresh;
  spec.validate();
  require_alphas(o.alphas);
  require(!o.methods.empty(), ErrorCode::config_error, "method list is empty");

  std::vector<calib::CalibratorConfig> configs;
  for (const auto& m : o.methods) configs.push_back(make_calibrator(m, o.G, o.K, o.eta, "dirichlet", false));
  const auto rows = mc::run_risk_experiment(spec, configs, o.alphas, std::max<std::size_t>(1, o.workers));
  io::write_report(o.out, io::calibration_summary_table(rows));
  for (const auto& r : rows)
    out << r.calibrator << " alpha=" << io::format_real(r.alpha) << " risk=" << io::format_real(r.mean_empirical_risk)
        << " se=" << io::format_real(r.risk_se) << " mean_lambda=" << io::format_real(r.mean_lambda)
        << " lambda_se=" << io::format_real(r.lambda_se) << '\n';
  return 0;
}

int cmd_moments(const MomentsOptions& o, std::ostream& out) {
  require(o.losses.size() >= 2, ErrorCode::config_error, "--losses needs at least two values");
  for (double l : o.losses) require(l >= 0 && l <= 1, ErrorCode::config_error, "losses must lie in [0,1]");
  Rng rng = make_stream(o.seed, {0});
  const auto rep = mc::rbwa_moment_check(o.losses, o.eta, o.samples, rng, o.cantelli_t);
  io::write_report(o.out, io::moments_table(rep));
  out << "mean=" << io::format_real(rep.empirical_mean) << " closed_mean=" << io::format_real(rep.closed_mean)
      << " variance=" << io::format_real(rep.empirical_var) << " closed_variance=" << io::format_real(rep.closed_var)
      << " rel_error=" << io::format_real(rep.var_rel_error) << '\n';
  const bool constant = std::all_of(o.losses.begin(), o.losses.end(), [&](double l) { return l == o.losses[0]; });
  if (!constant) {
    Rng anti_rng = make_stream(o.seed, {1});
    const auto anti = mc::anti_concentration_check(o.losses, o.eta, std::min<std::size_t>(o.samples, 10000), anti_rng);
    out << "anti_concentration=" << (anti.pass ? "pass" : "fail") << " distinct=" << anti.distinct << "/"
        << anti.samples << '\n';
  }
  if (!o.clt_out.empty()) {
    mc::CltConfig cc;
    cc.lambda = o.clt_lambda;
    cc.G_list = o.clt_G;
    cc.batch_size = o.clt_batch;
    cc.replications = o.clt_reps;
    cc.eta = o.clt_uniform ? std::nullopt : std::optional<double>(o.eta);
    Rng clt_rng = make_stream(o.seed, {2});
    const auto clt = mc::clt_check(mc::SyntheticSpec::logistic_benchmark(o.seed), cc, clt_rng);
    io::write_report(o.clt_out, io::clt_table(clt));
    for (const auto& r : clt.rows)
      out << "clt G=" << r.G << " ks=" << io::format_real(r.ks_distance) << (r.zero_variance ? " zero_variance" : "")
          << '\n';
  }
  return 0;
}

int cmd_report(const ReportOptions& o, std::ostream& out) {
  const auto mode = parse_mode(o.mode);
  require(mode.has_value(), ErrorCode::config_error, "unknown mode '" + o.mode + "' (gram-crc, geval-crc, geval-naive)");
  const ModeSpec ms = mode_spec(*mode);
  const std::string column = ms.score == ScoreKind::judge_norm ? "judge_norm" : "q_score";
  const std::string policy = o.policy.empty() ? std::string(to_string(*mode)) : o.policy;
  auto items = io::load_items(o.items, column);
  require(!items.empty(), ErrorCode::empty_input, o.items + ": no items");
  for (auto& it : items) it.kind = ms.score;

  std::vector<mc::FsReductionRow> rows;
  if (!o.thresholds.empty()) {
    for (const auto& rec : io::load_thresholds(o.thresholds))
      rows.push_back(mc::fs_reduction_report(items, rec.threshold, policy));
  } else if (!ms.calibrator) {
    const auto& lambdas = o.lambdas.empty() ? kNaiveThresholds : o.lambdas;
    for (double l : lambdas) {
      Threshold t;
      t.lambda = Lambda::at(l);
      t.alpha = std::nan("");
      rows.push_back(mc::fs_reduction_report(items, t, policy + "@" + io::format_real(l)));
    }
  } else {
    require_alphas(o.alphas);
    const auto cfg = make_calibrator(std::string(to_string(*ms.calibrator)), o.G, o.K, o.eta, "dirichlet", o.truncate);
    for (double alpha : o.alphas)
      rows.push_back(mc::fs_reduction_report(items, calib::calibrate(cfg, items, alpha, o.seed), policy));
  }
  io::write_report(o.out, io::fs_reduction_table(rows));
  for (const auto& r : rows)
    out << r.policy << " alpha=" << io::format_real(r.alpha) << " fs_unshipped=" << io::format_real(r.fs_unshipped)
        << " fs_shipped=" << io::format_real(r.fs_shipped) << " reduction=" << io::format_real(r.fs_reduction_pct)
        << " acceptance=" << io::format_real(r.acceptance_rate) << '\n';
  return 0;
}

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Appends `--key=value` for every config entry not already given on the command
// line, so flags take precedence over the file.
std::vector<std::string> merge_config(const std::vector<std::string>& args, CLI::App& app) {
  std::string sub_name;
  for (const auto& a : args)
    if (!a.empty() && a[0] != '-') {
      sub_name = a;
      break;
    }
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path || sub_name.empty()) return args;
  CLI::App* sub = app.get_subcommand_no_throw(sub_name);
  if (!sub) return args;
  const RunConfig cfg = RunConfig::load(*path);
  std::vector<std::string> merged = args;
  for (const auto& [key, entry] : cfg.entries) {
    const std::string flag = "--" + key;
    require(key != "config" && sub->get_option_no_throw(flag) != nullptr, ErrorCode::config_error,
            cfg.source + ":" + std::to_string(entry.line) + ": unknown key '" + key + "' for " + sub_name);
    if (!flag_given(args, flag)) merged.push_back(flag + "=" + entry.value);
  }
  return merged;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"crcgram: Gram-geometry scoring and conformal risk control for LLM response gating"};
  app.name("crcgram");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  CalibrateOptions cal;
  auto* c = app.add_subcommand("calibrate", "Select thresholds lambda_hat per (method, alpha) from a calibration set");
  c->add_option("--config", "Run configuration file (key = value)");
  c->add_option("--items", cal.items, "Calibration items CSV (id,group_id,q_score,severity,...)")->required();
  c->add_option("--alpha,--alphas", cal.alphas, "Risk budget(s) in (0,1)")->delimiter(',')->required();
  c->add_option("--method,--methods", cal.methods, "Calibrator(s): crc, bb, rbwa")->delimiter(',');
  c->add_option("--G", cal.G, "Number of batches (bb, rbwa)");
  c->add_option("--K", cal.K, "Replicates per batch (bb) or multinomial count (rbwa)");
  c->add_option("--eta", cal.eta, "Dirichlet concentration (rbwa)");
  c->add_option("--weight-law", cal.weight_law, "RBWA weights: dirichlet, multinomial, uniform");
  c->add_option("--score-column", cal.score_column, "Policy score column: q_score or judge_norm");
  c->add_flag("--truncate", cal.truncate, "Drop trailing n mod G items instead of failing");
  c->add_option("--seed", cal.seed, "Master seed");
  c->add_option("--out", cal.out, "Threshold CSV to write");

  GateOptions gt;
  auto* g = app.add_subcommand("gate", "Apply a calibrated threshold to label-free scores");
  g->add_option("--config", "Run configuration file (key = value)");
  g->add_option("--thresholds", gt.thresholds, "Threshold CSV from calibrate")->required();
  g->add_option("--scores", gt.scores, "Scores CSV (id plus score column)")->required();
  g->add_option("--score-column", gt.score_column, "Score column to gate");
  g->add_option("--method", gt.method, "Select the threshold row by calibrator");
  g->add_option("--alpha", gt.alpha, "Select the threshold row by alpha");
  g->add_option("--out", gt.out, "Decisions CSV to write");

  GpsoOptions gp;
  auto* e = app.add_subcommand("gpso-eval", "Grouped cross-validation of the spectral-overlap classifier");
  e->add_option("--config", "Run configuration file (key = value)");
  e->add_option("--embeddings", gp.embeddings, "Embeddings CSV (group_id,class_label,dim_0,...)")->required();
  e->add_option("--l2", gp.l2, "L2-normalize rows (true/false)");
  e->add_option("--center", gp.center, "Center rows (true/false)");
  e->add_option("--r-max", gp.r_max, "Largest rank considered by the eigengap rule");
  e->add_option("--B", gp.B, "Bootstrap replicates per prototype");
  e->add_option("--n-splits", gp.n_splits, "Random splits per group");
  e->add_option("--train-fraction", gp.train_fraction, "Per-class training fraction");
  e->add_option("--route", gp.route, "Spectral route: auto, feature, item");
  e->add_option("--seed", gp.seed, "Master seed");
  e->add_option("--out", gp.out, "Per-fold report CSV");
  e->add_option("--summary", gp.summary, "Summary CSV");
  e->add_option("--dataset", gp.dataset, "Dataset label for the summary");

  SimulateOptions sm;
  auto* s = app.add_subcommand("simulate", "Monte Carlo risk-vs-alpha experiment on synthetic data");
  s->add_option("--config", "Run configuration file (key = value)");
  s->add_option("--preset", sm.preset, "Severity model: logistic or deterministic");
  s->add_option("--n", sm.n, "Calibration items per trial [200]");
  s->add_option("--k", sm.k, "Logistic slope [10]");
  s->add_option("--q0", sm.q0, "Logistic midpoint [0.5]");
  s->add_option("--tau", sm.tau, "Deterministic cut [0.5]");
  s->add_option("--score-law", sm.score_law, "Score law: uniform or beta");
  s->add_option("--beta-a", sm.beta_a, "Beta shape a");
  s->add_option("--beta-b", sm.beta_b, "Beta shape b");
  s->add_option("--trials", sm.trials, "Trials [500]");
  s->add_option("--fresh", sm.fresh, "Fresh evaluation items per trial [2000]");
  s->add_option("--alphas,--alpha", sm.alphas, "Risk budgets")->delimiter(',');
  s->add_option("--G", sm.G, "Batches for bb and rbwa");
  s->add_option("--K", sm.K, "Replicates per batch for bb");
  s->add_option("--eta", sm.eta, "Dirichlet concentration for rbwa");
  s->add_option("--methods,--method", sm.methods, "Calibrators: crc, bb, rbwa")->delimiter(',');
  s->add_option("--workers", sm.workers, "Worker threads (output does not depend on it)");
  s->add_option("--seed", sm.seed, "Master seed");
  s->add_option("--out", sm.out, "Summary CSV to write");

  MomentsOptions mo;
  auto* m = app.add_subcommand("moments", "RBWA batch-loss moments, anti-concentration and CLT diagnostics");
  m->add_option("--config", "Run configuration file (key = value)");
  m->add_option("--losses", mo.losses, "Per-item losses of one batch")->delimiter(',')->required();
  m->add_option("--eta", mo.eta, "Dirichlet concentration");
  m->add_option("--samples", mo.samples, "Weight draws");
  m->add_option("--seed", mo.seed, "Master seed");
  m->add_option("--cantelli-t", mo.cantelli_t, "Deviation t for the one-sided Cantelli check");
  m->add_option("--out", mo.out, "Moments CSV to write");
  m->add_option("--clt-out", mo.clt_out, "Also run the batch-mean CLT check and write this CSV");
  m->add_option("--clt-lambda", mo.clt_lambda, "Fixed threshold for the CLT check");
  m->add_option("--clt-G", mo.clt_G, "Batch counts for the CLT check")->delimiter(',');
  m->add_option("--clt-batch", mo.clt_batch, "Items per batch for the CLT check");
  m->add_option("--clt-reps", mo.clt_reps, "Replications per G");
  m->add_flag("--clt-uniform", mo.clt_uniform, "Uniform weights in the CLT check");

  ReportOptions rp;
  auto* r = app.add_subcommand("report", "FS-reduction table for a deployment mode");
  r->add_option("--config", "Run configuration file (key = value)");
  r->add_option("--items", rp.items, "Items CSV with severities")->required();
  r->add_option("--mode", rp.mode, "gram-crc, geval-crc or geval-naive");
  r->add_option("--alphas,--alpha", rp.alphas, "Risk budgets for calibrated modes")->delimiter(',');
  r->add_option("--lambdas", rp.lambdas, "Fixed thresholds for geval-naive")->delimiter(',');
  r->add_option("--thresholds", rp.thresholds, "Use thresholds from this CSV instead of calibrating");
  r->add_option("--G", rp.G, "Batches");
  r->add_option("--K", rp.K, "Replicates per batch (geval-crc)");
  r->add_option("--eta", rp.eta, "Dirichlet concentration (gram-crc)");
  r->add_flag("--truncate", rp.truncate, "Drop trailing n mod G items instead of failing");
  r->add_option("--seed", rp.seed, "Master seed");
  r->add_option("--out", rp.out, "FS reduction CSV to write");
  r->add_option("--policy", rp.policy, "Policy label");

  try {
    std::vector<std::string> merged = merge_config(args, app);
    std::reverse(merged.begin(), merged.end());
    try {
      app.parse(merged);
    } catch (const CLI::ParseError& pe) {
      // Help requests exit 0 and print the selected subcommand's help.
      return app.exit(pe, out, err) == 0 ? 0 : 2;
    }
    if (c->parsed()) return cmd_calibrate(cal, out, err);
    if (g->parsed()) return cmd_gate(gt, out);
    if (e->parsed()) return cmd_gpso(gp, out, err);
    if (s->parsed()) return cmd_simulate(sm, out);
    if (m->parsed()) return cmd_moments(mo, out);
    if (r->parsed()) return cmd_report(rp, out);
    return 2;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return exit_code_for(ex.code());
  } catch (const std::filesystem::filesystem_error& ex) {
    err << "error: " << ex.what() << '\n';
    return 3;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 4;
  }
}

}  // namespace crcgram::cli
