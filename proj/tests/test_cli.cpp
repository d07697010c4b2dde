#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <unistd.h>

#include "crcgram/cli.hpp"
#include "crcgram/data_io.hpp"
#include "crcgram/risk_policy.hpp"

using namespace crcgram;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = CRCGRAM_FIXTURE_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("crcgram_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) { return (kFixtures / name).string(); }

}  // namespace

TEST_CASE("calibrate writes one threshold per method and alpha") {
  TempDir dir;
  const auto r = run({"calibrate", "--items", fixture("calibration_items.csv"), "--alphas", "0.2,0.3", "--methods",
                      "crc,bb,rbwa", "--G", "10", "--eta", "1", "--seed", "7", "--out", dir / "t.csv"});
  REQUIRE(r.code == 0);
  const auto recs = io::load_thresholds(dir / "t.csv");
  REQUIRE(recs.size() == 6);
  CHECK(recs[0].threshold.calibrator == CalibratorKind::crc);
  CHECK(recs[0].G == 60);
  CHECK(recs[0].I == 1);
  CHECK(recs[0].parameter == "NA");
  CHECK(recs[2].parameter == "50");
  CHECK(recs[4].parameter == "1");
  CHECK(recs[5].threshold.alpha == 0.3);
  CHECK(recs[5].threshold.seed == 7);
  CHECK(r.out.find("rbwa_crc alpha=0.3 lambda_hat=") != std::string::npos);
}

TEST_CASE("calibrate is byte-deterministic") {
  TempDir dir;
  const std::vector<std::string> base{"calibrate", "--items", fixture("calibration_items.csv"), "--alpha", "0.1",
                                      "--method", "rbwa", "--G", "10", "--eta", "1", "--seed", "7"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", dir / "a.csv"});
  b.insert(b.end(), {"--out", dir / "b.csv"});
  const auto ra = run(a), rb = run(b);
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(ra.out == rb.out);
  CHECK(io::read_text(dir / "a.csv") == io::read_text(dir / "b.csv"));
  CHECK(io::load_thresholds(dir / "a.csv").size() == 1);
}

TEST_CASE("tiny calibration sets reject everything") {
  TempDir dir;
  io::write_text_atomic(dir / "i.csv", "id,group_id,q_score,severity\na,g,0.2,0\nb,g,0.5,0\nc,g,0.8,0\n");
  const auto r = run({"calibrate", "--items", dir / "i.csv", "--alpha", "0.1", "--out", dir / "t.csv"});
  REQUIRE(r.code == 0);
  CHECK(io::read_text(dir / "t.csv").find(",REJECT_ALL,") != std::string::npos);
}

TEST_CASE("gate fixtures") {
  TempDir dir;
  std::vector<io::ThresholdRecord> recs(1);
  recs[0].threshold = {Lambda::at(0.6), 0.1, CalibratorKind::crc, 0};
  recs[0].G = 3;
  recs[0].I = 1;
  recs[0].parameter = "NA";
  recs[0].n = 3;
  io::write_thresholds(dir / "t.csv", recs);
  io::write_text_atomic(dir / "s.csv", "id,q_score\nx,0.59\ny,0.60\nz,0.61\n");
  auto r = run({"gate", "--thresholds", dir / "t.csv", "--scores", dir / "s.csv", "--out", dir / "d.csv"});
  REQUIRE(r.code == 0);
  CHECK(io::read_text(dir / "d.csv") == "id,q_score,decision\nx,0.59,abstain\ny,0.6,ship\nz,0.61,ship\n");
  CHECK(r.out.find("shipped=2 abstained=1") != std::string::npos);

  recs[0].threshold.lambda = Lambda::reject_all();
  io::write_thresholds(dir / "t.csv", recs);
  r = run({"gate", "--thresholds", dir / "t.csv", "--scores", dir / "s.csv", "--out", dir / "d.csv"});
  REQUIRE(r.code == 0);
  CHECK(io::read_text(dir / "d.csv").find("ship\n") == std::string::npos);

  // no row for this alpha
  r = run({"gate", "--thresholds", dir / "t.csv", "--scores", dir / "s.csv", "--alpha", "0.2", "--out", dir / "e.csv"});
  CHECK(r.code == 3);
  CHECK_FALSE(fs::exists(dir / "e.csv"));
}

TEST_CASE("gating the calibration set reproduces the calibrated risk") {
  TempDir dir;
  for (const std::string method : {"crc", "bb", "rbwa"}) {
    const auto c = run({"calibrate", "--items", fixture("calibration_items.csv"), "--alpha", "0.3", "--method", method,
                        "--seed", "3", "--out", dir / "t.csv"});
    REQUIRE(c.code == 0);
    const auto g = run({"gate", "--thresholds", dir / "t.csv", "--scores", fixture("calibration_items.csv"), "--out",
                        dir / "d.csv"});
    REQUIRE(g.code == 0);
    const auto items = io::load_items(fixture("calibration_items.csv"));
    const auto decisions = io::read_csv(dir / "d.csv");
    REQUIRE(decisions.rows.size() == items.size());
    long double sum = 0;
    for (std::size_t i = 0; i < items.size(); ++i)
      if (decisions.rows[i][2] == "ship") sum += items[i].severity;
    const double gated = double(sum / items.size());
    const auto lambda = io::load_thresholds(dir / "t.csv")[0].threshold.lambda;
    CHECK(gated == doctest::Approx(empirical_risk(items, lambda)).epsilon(1e-12));
    CHECK(c.out.find("empirical_risk=" + io::format_real(gated)) != std::string::npos);
  }
}

TEST_CASE("simulate emits one row per calibrator and alpha") {
  TempDir dir;
  const auto r = run({"simulate", "--preset", "logistic", "--trials", "20", "--fresh", "200", "--alphas",
                      "0.05,0.1,0.15,0.2", "--workers", "2", "--out", dir / "s.csv"});
  REQUIRE(r.code == 0);
  const auto t = io::read_report(dir / "s.csv", io::calibration_summary_schema());
  CHECK(t.rows.size() == 12);
  const auto r1 = run({"simulate", "--trials", "20", "--fresh", "200", "--workers", "1", "--out", dir / "s1.csv"});
  REQUIRE(r1.code == 0);
  CHECK(io::read_text(dir / "s.csv") == io::read_text(dir / "s1.csv"));

  CHECK(run({"simulate", "--preset", "deterministic", "--k", "3", "--out", dir / "x.csv"}).code == 2);
  CHECK(run({"simulate", "--n", "3", "--out", dir / "x.csv"}).code == 4);
}

TEST_CASE("moments subcommand") {
  TempDir dir;
  const auto r = run({"moments", "--losses", "0,0.2,0.5,1.0", "--eta", "2", "--samples", "100000", "--out",
                      dir / "m.csv", "--clt-out", dir / "c.csv", "--clt-G", "5,10", "--clt-reps", "50"});
  REQUIRE(r.code == 0);
  const auto t = io::read_report(dir / "m.csv", io::moments_schema());
  REQUIRE(t.rows.size() == 1);
  const auto& schema = t.schema;
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < schema.size(); ++i)
      if (schema[i].name == name) return std::get<double>(t.rows[0][i]);
    FAIL("no column " << name);
    return 0.0;
  };
  CHECK(col("var_closed") == doctest::Approx(0.0157639).epsilon(1e-5));
  CHECK(std::abs(col("var_empirical") / 0.141875 * 9.0 - 1.0) < 0.02);
  CHECK(r.out.find("anti_concentration=pass") != std::string::npos);
  CHECK(io::read_report(dir / "c.csv", io::clt_schema()).rows.size() == 2);
  CHECK(run({"moments", "--losses", "0.5", "--out", dir / "m.csv"}).code == 2);
}

TEST_CASE("gpso-eval on the planted fixture") {
  TempDir dir;
  const auto r = run({"gpso-eval", "--embeddings", fixture("planted_embeddings.csv"), "--B", "4", "--n-splits", "3",
                      "--seed", "1", "--out", dir / "f.csv", "--summary", dir / "s.csv", "--dataset", "planted"});
  REQUIRE(r.code == 0);
  const auto s = io::read_report(dir / "s.csv", io::gpso_summary_schema());
  REQUIRE(s.rows.size() == 1);
  CHECK(std::get<std::string>(s.rows[0][0]) == "planted");
  CHECK(std::get<double>(s.rows[0][2]) == 1.0);
  CHECK(io::read_report(dir / "f.csv", io::gpso_fold_schema()).rows.size() == 4 * 3 * 2);
  CHECK(run({"gpso-eval", "--embeddings", fixture("planted_embeddings.csv"), "--route", "sideways", "--out",
             dir / "f.csv"})
            .code == 2);
}

TEST_CASE("report subcommand") {
  TempDir dir;
  auto r = run({"report", "--items", fixture("fs_items.csv"), "--mode", "geval-naive", "--lambdas", "0.5", "--out",
                dir / "fs.csv"});
  REQUIRE(r.code == 0);
  const auto t = io::read_report(dir / "fs.csv", io::fs_reduction_schema());
  REQUIRE(t.rows.size() == 1);
  CHECK(std::get<double>(t.rows[0][2]) == doctest::Approx(0.892));
  CHECK(std::get<double>(t.rows[0][3]) == doctest::Approx(0.019));
  CHECK(std::get<double>(t.rows[0][4]) == doctest::Approx(97.87).epsilon(1e-3));

  r = run({"report", "--items", fixture("calibration_items.csv"), "--mode", "gram-crc", "--alphas", "0.2,0.3", "--G",
           "10", "--out", dir / "g.csv"});
  REQUIRE(r.code == 0);
  CHECK(io::read_report(dir / "g.csv", io::fs_reduction_schema()).rows.size() == 2);
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"calibrate", "--items", fixture("calibration_items.csv")}).code == 2);
  CHECK(run({"calibrate", "--items", fixture("calibration_items.csv"), "--alpha", "0.1", "--bogus", "1"}).code == 2);
  CHECK(run({"calibrate", "--items", fixture("calibration_items.csv"), "--alpha", "0.1", "--method", "zzz"}).code == 2);
  // missing input file
  CHECK(run({"calibrate", "--items", dir / "none.csv", "--alpha", "0.1", "--out", dir / "t.csv"}).code == 3);
  // bad data row, and no output left behind
  io::write_text_atomic(dir / "bad.csv", "id,group_id,q_score,severity\na,g,0.5,1.3\n");
  CHECK(run({"calibrate", "--items", dir / "bad.csv", "--alpha", "0.1", "--out", dir / "t.csv"}).code == 3);
  CHECK_FALSE(fs::exists(dir / "t.csv"));
  // 60 items do not split into 7 batches
  CHECK(run({"calibrate", "--items", fixture("calibration_items.csv"), "--alpha", "0.1", "--method", "bb", "--G", "7",
             "--out", dir / "t.csv"})
            .code == 4);
  CHECK(run({"calibrate", "--items", fixture("calibration_items.csv"), "--alpha", "1.5", "--out", dir / "t.csv"}).code ==
        4);
}

TEST_CASE("help lists every option") {
  const auto top = run({"--help"});
  CHECK(top.code == 0);
  for (const char* sub : {"calibrate", "gate", "gpso-eval", "simulate", "moments", "report"})
    CHECK(top.out.find(sub) != std::string::npos);
  const auto cal = run({"calibrate", "--help"});
  CHECK(cal.code == 0);
  for (const char* key : {"--config", "--items", "--alpha", "--method", "--G", "--K", "--eta", "--weight-law",
                          "--score-column", "--truncate", "--seed", "--out"})
    CHECK(cal.out.find(key) != std::string::npos);
  const auto gp = run({"gpso-eval", "--help"});
  for (const char* key : {"--l2", "--center", "--r-max", "--B", "--n-splits", "--train-fraction", "--route"})
    CHECK(gp.out.find(key) != std::string::npos);
}

TEST_CASE("config files and flag precedence") {
  TempDir dir;
  io::write_text_atomic(dir / "run.cfg", "# calibration sweep\nitems = " + fixture("calibration_items.csv") +
                                             "\nalpha = 0.2\nmethod = rbwa\nG = 10\nseed = 9\nout = " + (dir / "cfg.csv") +
                                             "\n");
  auto r = run({"calibrate", "--config", dir / "run.cfg"});
  REQUIRE(r.code == 0);
  auto recs = io::load_thresholds(dir / "cfg.csv");
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].threshold.alpha == 0.2);
  CHECK(recs[0].threshold.seed == 9);

  r = run({"calibrate", "--config", dir / "run.cfg", "--alpha", "0.3", "--seed", "4"});
  REQUIRE(r.code == 0);
  recs = io::load_thresholds(dir / "cfg.csv");
  CHECK(recs[0].threshold.alpha == 0.3);
  CHECK(recs[0].threshold.seed == 4);
  CHECK(recs[0].threshold.calibrator == CalibratorKind::rbwa_crc);

  io::write_text_atomic(dir / "bad.cfg", "alpha = 0.2\nwidth = 3\n");
  r = run({"calibrate", "--config", dir / "bad.cfg", "--items", fixture("calibration_items.csv")});
  CHECK(r.code == 2);
  CHECK(r.err.find("width") != std::string::npos);
  CHECK(run({"calibrate", "--config", dir / "missing.cfg"}).code == 2);
}
