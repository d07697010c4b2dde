#include "crcgram/data_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace crcgram::io {

namespace {

std::string at_line(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string text_cell(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
  return std::to_string(std::get<std::int64_t>(c));
}

std::string render_cell(const Cell& c, ColumnKind kind) {
  if (kind == ColumnKind::exact_real)
    if (const auto* d = std::get_if<double>(&c)) return format_exact(*d);
  return text_cell(c);
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string format_exact(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view text, std::string_view what) {
  double v = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  require(!text.empty() && res.ec == std::errc() && res.ptr == last, ErrorCode::parse_error,
          std::string(what) + ": cannot parse '" + std::string(text) + "' as a number");
  return v;
}

std::int64_t parse_integer(std::string_view text, std::string_view what) {
  std::int64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  require(!text.empty() && res.ec == std::errc() && res.ptr == text.data() + text.size(), ErrorCode::parse_error,
          std::string(what) + ": cannot parse '" + std::string(text) + "' as an integer");
  return v;
}

namespace {
std::uint64_t parse_unsigned(std::string_view text, std::string_view what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  require(!text.empty() && res.ec == std::errc() && res.ptr == text.data() + text.size(), ErrorCode::parse_error,
          std::string(what) + ": cannot parse '" + std::string(text) + "' as a non-negative integer");
  return v;
}
}  // namespace

std::string render_report(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.schema.size(); ++c) {
    if (c) out += ',';
    out += table.schema[c].name;
  }
  out += '\n';
  for (const auto& row : table.rows) {
    require(row.size() == table.schema.size(), ErrorCode::dimension_mismatch, "row width does not match schema");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += render_cell(row[c], table.schema[c].kind);
    }
    out += '\n';
  }
  return out;
}

void write_text_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    require(bool(os), ErrorCode::io_error, "cannot open " + tmp.string() + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.flush();
    if (!os) {
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(ErrorCode::io_error, "write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::io_error, "cannot move output into place at " + path.string());
  }
}

void write_report(const fs::path& path, const Table& table) { write_text_atomic(path, render_report(table)); }

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::size_t CsvData::column(std::string_view name) const {
  const auto pos = find_column(name);
  require(pos.has_value(), ErrorCode::missing_column, source + ": missing column '" + std::string(name) + "'");
  return *pos;
}

std::optional<std::size_t> CsvData::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

CsvData parse_csv(std::string_view text, std::string_view source) {
  CsvData csv;
  csv.source = std::string(source);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (!have_header) {
      csv.header = std::move(fields);
      have_header = true;
      continue;
    }
    csv.rows.push_back(std::move(fields));
    csv.line_numbers.push_back(line_no);
  }
  require(have_header, ErrorCode::missing_column, csv.source + ": no header line");
  return csv;
}

CsvData read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

Table parse_report(std::string_view text, const Schema& schema, std::string_view source) {
  const CsvData csv = parse_csv(text, source);
  std::vector<std::size_t> cols;
  for (const auto& c : schema) cols.push_back(csv.column(c.name));
  Table table;
  table.schema = schema;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& fields = csv.rows[r];
    const std::string where = at_line(source, csv.line_numbers[r]);
    require(fields.size() == csv.header.size(), ErrorCode::parse_error, where + ": wrong number of fields");
    Row row;
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const std::string& f = fields[cols[c]];
      switch (schema[c].kind) {
        case ColumnKind::text: row.emplace_back(f); break;
        case ColumnKind::real:
        case ColumnKind::exact_real: row.emplace_back(parse_real(f, where + " " + schema[c].name)); break;
        case ColumnKind::integer: row.emplace_back(parse_integer(f, where + " " + schema[c].name)); break;
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

Table read_report(const fs::path& path, const Schema& schema) {
  return parse_report(read_text(path), schema, path.string());
}

// ---------------------------------------------------------------------------
// Items

std::vector<CalibrationItem> parse_items(const CsvData& csv, std::string_view score_column) {
  require(score_column == "q_score" || score_column == "judge_norm", ErrorCode::config_error,
          "score column must be q_score or judge_norm, got '" + std::string(score_column) + "'");
  const std::size_t c_id = csv.column("id");
  const std::size_t c_group = csv.column("group_id");
  const std::size_t c_score = csv.column(score_column);
  const std::size_t c_sev = csv.column("severity");
  const ScoreKind kind = score_column == "judge_norm" ? ScoreKind::judge_norm : ScoreKind::other;
  std::vector<CalibrationItem> items;
  items.reserve(csv.rows.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& f = csv.rows[r];
    const std::string where = at_line(csv.source, csv.line_numbers[r]);
    require(f.size() == csv.header.size(), ErrorCode::parse_error, where + ": wrong number of fields");
    const double score = parse_real(f[c_score], where + " " + std::string(score_column));
    const double severity = parse_real(f[c_sev], where + " severity");
    try {
      items.push_back(make_item(score, severity, f[c_id], f[c_group], kind));
    } catch (const Error& e) {
      fail(e.code(), where + ": " + e.what());
    }
  }
  return items;
}

std::vector<CalibrationItem> load_items(const fs::path& path, std::string_view score_column) {
  return parse_items(read_csv(path), score_column);
}

std::vector<ScoredItem> load_scores(const fs::path& path, std::string_view score_column) {
  const CsvData csv = read_csv(path);
  const std::size_t c_id = csv.column("id");
  const std::size_t c_score = csv.column(score_column);
  std::vector<ScoredItem> out;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& f = csv.rows[r];
    const std::string where = at_line(csv.source, csv.line_numbers[r]);
    require(f.size() == csv.header.size(), ErrorCode::parse_error, where + ": wrong number of fields");
    const double score = parse_real(f[c_score], where + " " + std::string(score_column));
    try {
      out.push_back({f[c_id], clip_unit(score, "score")});
    } catch (const Error& e) {
      fail(e.code(), where + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Embeddings

std::vector<EmbeddingBatch<double>> parse_embeddings(const CsvData& csv) {
  require(csv.header.size() >= 3 && csv.header[0] == "group_id" && csv.header[1] == "class_label",
          ErrorCode::missing_column, csv.source + ": header must be group_id,class_label,dim_0,...");
  const std::size_t d = csv.header.size() - 2;
  for (std::size_t j = 0; j < d; ++j)
    require(csv.header[j + 2] == "dim_" + std::to_string(j), ErrorCode::missing_column,
            csv.source + ": expected column dim_" + std::to_string(j));

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& f = csv.rows[r];
    const std::string where = at_line(csv.source, csv.line_numbers[r]);
    require(f.size() == csv.header.size(), ErrorCode::inconsistent_dimension,
            where + ": row has dimension " + std::to_string(f.size() >= 2 ? f.size() - 2 : 0) + ", expected " +
                std::to_string(d));
    require(f[1].empty() || parse_class_label(f[1]).has_value(), ErrorCode::parse_error,
            where + ": class_label must be good, bad or empty");
    auto [it, inserted] = members.try_emplace(f[0]);
    if (inserted) order.push_back(f[0]);
    it->second.push_back(r);
  }

  std::vector<EmbeddingBatch<double>> batches;
  for (const auto& gid : order) {
    const auto& rows = members[gid];
    EmbeddingBatch<double> b;
    b.group_id = gid;
    b.rows.resize(static_cast<Index>(rows.size()), static_cast<Index>(d));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& f = csv.rows[rows[k]];
      const std::string where = at_line(csv.source, csv.line_numbers[rows[k]]);
      for (std::size_t j = 0; j < d; ++j)
        b.rows(static_cast<Index>(k), static_cast<Index>(j)) = parse_real(f[j + 2], where + " dim_" + std::to_string(j));
      b.row_labels.push_back(f[1].empty() ? std::nullopt : parse_class_label(f[1]));
    }
    require(b.rows.allFinite(), ErrorCode::value_out_of_range, csv.source + ": group " + gid + " has non-finite values");
    const bool uniform =
        std::all_of(b.row_labels.begin(), b.row_labels.end(), [&](const auto& l) { return l == b.row_labels[0]; });
    if (uniform) b.class_label = b.row_labels[0];
    b.l2_normalized = rows_unit_norm(b.rows);
    batches.push_back(std::move(b));
  }
  return batches;
}

std::vector<EmbeddingBatch<double>> load_embeddings(const fs::path& path) { return parse_embeddings(read_csv(path)); }

std::string render_embeddings(const std::vector<EmbeddingBatch<double>>& batches) {
  require(!batches.empty(), ErrorCode::empty_input, "no embedding batches to write");
  const Index d = batches.front().dim();
  std::string out = "group_id,class_label";
  for (Index j = 0; j < d; ++j) out += ",dim_" + std::to_string(j);
  out += '\n';
  for (const auto& b : batches) {
    require(b.dim() == d, ErrorCode::inconsistent_dimension, "batches differ in dimension");
    for (Index i = 0; i < b.size(); ++i) {
      const auto label = b.row_labels.empty() ? b.class_label : b.row_labels[static_cast<std::size_t>(i)];
      out += b.group_id;
      out += ',';
      if (label) out += to_string(*label);
      for (Index j = 0; j < d; ++j) {
        out += ',';
        out += format_exact(b.rows(i, j));
      }
      out += '\n';
    }
  }
  return out;
}

void write_embeddings(const fs::path& path, const std::vector<EmbeddingBatch<double>>& batches) {
  write_text_atomic(path, render_embeddings(batches));
}

// ---------------------------------------------------------------------------
// Thresholds

Schema threshold_schema() {
  return {{"calibrator", ColumnKind::text}, {"alpha", ColumnKind::exact_real}, {"lambda_hat", ColumnKind::text},
          {"G", ColumnKind::integer},       {"I", ColumnKind::integer},        {"K_or_eta", ColumnKind::text},
          {"seed", ColumnKind::text},       {"n", ColumnKind::integer}};
}

Table threshold_table(const std::vector<ThresholdRecord>& records) {
  Table t;
  t.schema = threshold_schema();
  for (const auto& r : records) {
    const Lambda& l = r.threshold.lambda;
    t.rows.push_back({std::string(to_string(r.threshold.calibrator)), r.threshold.alpha,
                      l.is_reject_all() ? std::string("REJECT_ALL") : format_exact(l.value()),
                      std::int64_t(r.G), std::int64_t(r.I), r.parameter, std::to_string(r.threshold.seed),
                      std::int64_t(r.n)});
  }
  return t;
}

std::vector<ThresholdRecord> parse_thresholds(std::string_view text, std::string_view source) {
  const Table t = parse_report(text, threshold_schema(), source);
  std::vector<ThresholdRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = std::string(source) + " row " + std::to_string(r + 1);
    ThresholdRecord rec;
    const auto kind = parse_calibrator(std::get<std::string>(row[0]));
    require(kind.has_value(), ErrorCode::parse_error, where + ": unknown calibrator");
    rec.threshold.calibrator = *kind;
    rec.threshold.alpha = std::get<double>(row[1]);
    const auto& lam = std::get<std::string>(row[2]);
    if (lam == "REJECT_ALL") {
      rec.threshold.lambda = Lambda::reject_all();
    } else {
      try {
        rec.threshold.lambda = Lambda::at(parse_real(lam, where + " lambda_hat"));
      } catch (const Error& e) {
        fail(e.code(), where + ": " + e.what());
      }
    }
    const auto G = std::get<std::int64_t>(row[3]);
    const auto I = std::get<std::int64_t>(row[4]);
    const auto n = std::get<std::int64_t>(row[7]);
    require(G >= 0 && I >= 0 && n >= 0, ErrorCode::value_out_of_range, where + ": negative count");
    rec.G = std::size_t(G);
    rec.I = std::size_t(I);
    rec.parameter = std::get<std::string>(row[5]);
    rec.threshold.seed = parse_unsigned(std::get<std::string>(row[6]), where + " seed");
    rec.n = std::size_t(n);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ThresholdRecord> load_thresholds(const fs::path& path) {
  return parse_thresholds(read_text(path), path.string());
}

void write_thresholds(const fs::path& path, const std::vector<ThresholdRecord>& records) {
  write_report(path, threshold_table(records));
}

// ---------------------------------------------------------------------------
// Report schemas

Schema decision_schema() {
  return {{"id", ColumnKind::text}, {"q_score", ColumnKind::exact_real}, {"decision", ColumnKind::text}};
}

Table decision_table(const std::vector<ScoredItem>& items, const Lambda& lambda) {
  Table t;
  t.schema = decision_schema();
  for (const auto& it : items)
    t.rows.push_back({it.id, it.score, std::string(gate(it.score, lambda) == Decision::accept ? "ship" : "abstain")});
  return t;
}

Schema gpso_fold_schema() {
  return {{"group_id", ColumnKind::text},  {"split", ColumnKind::integer},   {"predicted", ColumnKind::text},
          {"true", ColumnKind::text},      {"margin", ColumnKind::real},     {"norm_margin", ColumnKind::real},
          {"rank", ColumnKind::integer},   {"delta_P", ColumnKind::real},    {"epsilon", ColumnKind::real},
          {"gamma", ColumnKind::real},     {"delta_proto", ColumnKind::real}, {"margin_pass", ColumnKind::integer}};
}

Table gpso_fold_table(const std::vector<gpso::FoldRecord>& folds) {
  Table t;
  t.schema = gpso_fold_schema();
  for (const auto& f : folds)
    t.rows.push_back({f.group_id, std::int64_t(f.split), f.predicted, f.truth, f.margin, f.norm_margin,
                      std::int64_t(f.rank), f.delta_P, f.epsilon, f.gamma, f.delta_proto,
                      std::int64_t(f.margin_pass ? 1 : 0)});
  return t;
}

Schema gpso_summary_schema() {
  return {{"dataset", ColumnKind::text},     {"pipeline", ColumnKind::text},
          {"macro_acc", ColumnKind::real},   {"acc_good", ColumnKind::real},
          {"acc_bad", ColumnKind::real},     {"delta_P", ColumnKind::real},
          {"mean_norm_margin", ColumnKind::real}, {"avg_rank", ColumnKind::real},
          {"margin_pass_fraction", ColumnKind::real}, {"skipped_groups", ColumnKind::integer}};
}

Table gpso_summary_table(const std::string& dataset, char pipeline, const gpso::CvSummary& s) {
  auto class_acc = [&](std::string_view id) {
    for (const auto& c : s.accuracy.per_class)
      if (c.class_id == id) return c.accuracy();
    return std::nan("");
  };
  Table t;
  t.schema = gpso_summary_schema();
  t.rows.push_back({dataset, std::string(1, pipeline), s.accuracy.macro_accuracy, class_acc("good"), class_acc("bad"),
                    s.mean_delta_P, s.mean_norm_margin, s.mean_rank, s.margin_pass_fraction,
                    std::int64_t(s.skipped_groups)});
  return t;
}

Schema calibration_summary_schema() {
  return {{"method", ColumnKind::text},        {"alpha", ColumnKind::real},     {"empirical_risk", ColumnKind::real},
          {"risk_se", ColumnKind::real},       {"mean_lambda", ColumnKind::real}, {"lambda_se", ColumnKind::real},
          {"reject_all_frac", ColumnKind::real}, {"trials", ColumnKind::integer}};
}

Table calibration_summary_table(const std::vector<mc::RiskReportRow>& rows) {
  Table t;
  t.schema = calibration_summary_schema();
  for (const auto& r : rows)
    t.rows.push_back({r.calibrator, r.alpha, r.mean_empirical_risk, r.risk_se, r.mean_lambda, r.lambda_se,
                      r.reject_all_frac, std::int64_t(r.trials)});
  return t;
}

Schema fs_reduction_schema() {
  return {{"policy", ColumnKind::text},        {"alpha", ColumnKind::real},
          {"fs_unshipped", ColumnKind::real},  {"fs_shipped", ColumnKind::real},
          {"fs_reduction_pct", ColumnKind::real}, {"acceptance_rate", ColumnKind::real}};
}

Table fs_reduction_table(const std::vector<mc::FsReductionRow>& rows) {
  Table t;
  t.schema = fs_reduction_schema();
  for (const auto& r : rows)
    t.rows.push_back({r.policy, r.alpha, r.fs_unshipped, r.fs_shipped, r.fs_reduction_pct, r.acceptance_rate});
  return t;
}

Schema moments_schema() {
  return {{"I", ColumnKind::integer},
          {"eta", ColumnKind::real},
          {"kappa", ColumnKind::real},
          {"samples", ColumnKind::integer},
          {"mean_closed", ColumnKind::real},
          {"mean_empirical", ColumnKind::real},
          {"var_emp", ColumnKind::real},
          {"var_closed", ColumnKind::real},
          {"var_empirical", ColumnKind::real},
          {"var_rel_error", ColumnKind::real},
          {"coord_mean_closed", ColumnKind::real},
          {"coord_mean_max_rel_error", ColumnKind::real},
          {"coord_var_closed", ColumnKind::real},
          {"coord_var_max_rel_error", ColumnKind::real},
          {"coord_cov_closed", ColumnKind::real},
          {"coord_cov01", ColumnKind::real},
          {"cantelli_t", ColumnKind::real},
          {"cantelli_frequency", ColumnKind::real},
          {"cantelli_bound", ColumnKind::real}};
}

Table moments_table(const mc::MomentReport& m) {
  double mean_err = 0, var_err = 0;
  for (double v : m.coord_means) mean_err = std::max(mean_err, std::abs(v - m.coord_closed_mean) / m.coord_closed_mean);
  for (double v : m.coord_vars) var_err = std::max(var_err, std::abs(v - m.coord_closed_var) / m.coord_closed_var);
  Table t;
  t.schema = moments_schema();
  t.rows.push_back({std::int64_t(m.I), m.eta, m.kappa, std::int64_t(m.samples), m.closed_mean, m.empirical_mean,
                    m.var_emp, m.closed_var, m.empirical_var, m.var_rel_error, m.coord_closed_mean, mean_err,
                    m.coord_closed_var, var_err, m.coord_closed_cov, m.coord_cov01, m.cantelli_t,
                    m.cantelli_frequency, m.cantelli_bound});
  return t;
}

Schema clt_schema() {
  return {{"G", ColumnKind::integer},        {"replications", ColumnKind::integer}, {"mu", ColumnKind::real},
          {"variance", ColumnKind::real},    {"ks_distance", ColumnKind::real},     {"zero_variance", ColumnKind::integer}};
}

Table clt_table(const mc::CltReport& report) {
  Table t;
  t.schema = clt_schema();
  for (const auto& r : report.rows)
    t.rows.push_back({std::int64_t(r.G), std::int64_t(r.replications), r.mu, r.variance, r.ks_distance,
                      std::int64_t(r.zero_variance ? 1 : 0)});
  return t;
}

}  // namespace crcgram::io
