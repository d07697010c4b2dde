#pragma once

// CSV ingestion and emission. Reports use a fixed column order and %.6g numbers;
// columns that must survive a round trip bit for bit (thresholds, scores,
// embeddings) use the shortest representation that parses back exactly.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "crcgram/gpso.hpp"
#include "crcgram/gram_geometry.hpp"
#include "crcgram/montecarlo.hpp"
#include "crcgram/risk_policy.hpp"

namespace crcgram::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Cells and schemas

enum class ColumnKind { text, real, exact_real, integer };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::text;
};

using Schema = std::vector<Column>;
using Cell = std::variant<std::string, double, std::int64_t>;
using Row = std::vector<Cell>;

struct Table {
  Schema schema;
  std::vector<Row> rows;
};

std::string format_real(double v);   // %.6g, NaN/inf as literals
std::string format_exact(double v);  // shortest round-trip form
double parse_real(std::string_view text, std::string_view what);  // accepts NaN, inf
std::int64_t parse_integer(std::string_view text, std::string_view what);

std::string render_report(const Table& table);
/// Header-only file for an empty table. The file is written to a temporary and
/// renamed into place, so a failure never leaves a partial file behind.
void write_report(const fs::path& path, const Table& table);
Table parse_report(std::string_view text, const Schema& schema, std::string_view source = "<memory>");
Table read_report(const fs::path& path, const Schema& schema);

void write_text_atomic(const fs::path& path, std::string_view content);
std::string read_text(const fs::path& path);

// ---------------------------------------------------------------------------
// Raw CSV

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
  std::string source;

  /// Position of `name` in the header; MissingColumn when absent.
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;
};

CsvData parse_csv(std::string_view text, std::string_view source = "<memory>");
CsvData read_csv(const fs::path& path);

// ---------------------------------------------------------------------------
// Calibration items: id,group_id,q_score,severity[,judge_norm,judge_correctness,...]

/// Items in file order with the policy score taken from `score_column`
/// (q_score or judge_norm). Errors name the offending line.
std::vector<CalibrationItem> parse_items(const CsvData& csv, std::string_view score_column = "q_score");
std::vector<CalibrationItem> load_items(const fs::path& path, std::string_view score_column = "q_score");

struct ScoredItem {
  std::string id;
  double score = 0;
};

/// id and score column only; any severity column is ignored.
std::vector<ScoredItem> load_scores(const fs::path& path, std::string_view score_column = "q_score");

// ---------------------------------------------------------------------------
// Embeddings: group_id,class_label,dim_0,...,dim_{d-1}

std::vector<EmbeddingBatch<double>> parse_embeddings(const CsvData& csv);
std::vector<EmbeddingBatch<double>> load_embeddings(const fs::path& path);
std::string render_embeddings(const std::vector<EmbeddingBatch<double>>& batches);
void write_embeddings(const fs::path& path, const std::vector<EmbeddingBatch<double>>& batches);

// ---------------------------------------------------------------------------
// Thresholds: calibrator,alpha,lambda_hat,G,I,K_or_eta,seed,n

struct ThresholdRecord {
  Threshold threshold;
  std::size_t G = 0;
  std::size_t I = 0;
  std::string parameter;  // K_or_eta
  std::size_t n = 0;
};

Schema threshold_schema();
Table threshold_table(const std::vector<ThresholdRecord>& records);
std::vector<ThresholdRecord> parse_thresholds(std::string_view text, std::string_view source = "<memory>");
std::vector<ThresholdRecord> load_thresholds(const fs::path& path);
void write_thresholds(const fs::path& path, const std::vector<ThresholdRecord>& records);

// ---------------------------------------------------------------------------
// Other report schemas

Schema decision_schema();  // id,q_score,decision
Schema gpso_fold_schema();
Schema gpso_summary_schema();
Schema calibration_summary_schema();
Schema fs_reduction_schema();
Schema moments_schema();
Schema clt_schema();

Table decision_table(const std::vector<ScoredItem>& items, const Lambda& lambda);
Table gpso_fold_table(const std::vector<gpso::FoldRecord>& folds);
Table gpso_summary_table(const std::string& dataset, char pipeline, const gpso::CvSummary& summary);
Table calibration_summary_table(const std::vector<mc::RiskReportRow>& rows);
Table fs_reduction_table(const std::vector<mc::FsReductionRow>& rows);
Table moments_table(const mc::MomentReport& report);
Table clt_table(const mc::CltReport& report);

}  // namespace crcgram::io
