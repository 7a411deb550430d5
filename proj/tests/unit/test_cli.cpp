#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <blindcal/csv.hpp>
#include <blindcal/experiments.hpp>

#include "cli.hpp"
#include "config.hpp"

using namespace blindcal;
using namespace blindcal::cli;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "blindcal");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path dir() {
  const auto d = std::filesystem::temp_directory_path() / "blindcal_unit_cli";
  std::filesystem::create_directories(d);
  return d;
}

std::string write_config(const std::string& name, const std::string& text) {
  const auto p = dir() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSweepConfig = R"({
  // comments are allowed
  "n": 24, "s": [2], "m": [12, 16], "r": 0.5, "delta_u": 3,
  "trials": 2, "seed": 5, "methods": ["altmin", "baseline1"],
  "altmin": {"num_starts": 2}
})";

}  // namespace

TEST(Cli, HelpListsSubcommands) {
  const CliResult r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"recover", "sweep", "analyze", "linearized", "tomo2d"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
}

TEST(Cli, UnknownSubcommandIsUsageError) { EXPECT_NE(run({"calibrate"}).code, 0); }

TEST(Cli, MissingRequiredKeyIsNamed) {
  const auto cfg = write_config("missing.json", R"({"s": [2], "m": [10], "methods": ["altmin"]})");
  const CliResult r = run({"sweep", "--config", cfg, "--out", (dir() / "x.csv").string()});
  EXPECT_EQ(r.code, kUsageError);
  EXPECT_NE(r.err.find("'n'"), std::string::npos) << r.err;
}

TEST(Cli, UnknownKeyIsRejectedWithPath) {
  const auto cfg = write_config("unknown.json", R"({"n": 16, "methods": ["altmin"], "altmin": {"startz": 3}})");
  const CliResult r = run({"sweep", "--config", cfg, "--out", (dir() / "x.csv").string()});
  EXPECT_EQ(r.code, kUsageError);
  EXPECT_NE(r.err.find("altmin.startz"), std::string::npos) << r.err;
}

TEST(Cli, EmptyMethodListIsRejected) {
  const auto cfg = write_config("empty.json", R"({"n": 16, "methods": []})");
  const CliResult r = run({"sweep", "--config", cfg, "--out", (dir() / "x.csv").string()});
  EXPECT_EQ(r.code, kUsageError);
  EXPECT_NE(r.err.find("methods"), std::string::npos);
}

TEST(Cli, WrongTypeIsRejected) {
  const auto cfg = write_config("type.json", R"({"n": "sixteen", "methods": ["altmin"]})");
  EXPECT_EQ(run({"sweep", "--config", cfg, "--out", (dir() / "x.csv").string()}).code, kUsageError);
}

TEST(Cli, MalformedJsonIsUsageError) {
  const auto cfg = write_config("bad.json", "{\"n\": 16,");
  EXPECT_EQ(run({"recover", "--config", cfg}).code, kUsageError);
}

TEST(Cli, SweepIsByteDeterministicAcrossWorkerCounts) {
  const auto cfg = write_config("sweep.json", kSweepConfig);
  const auto a = dir() / "sweep_a.csv";
  const auto b = dir() / "sweep_b.csv";
  std::filesystem::remove(a);
  std::filesystem::remove(b);
  ASSERT_EQ(run({"sweep", "--config", cfg, "--out", a.string(), "--workers", "1"}).code, 0);
  ASSERT_EQ(run({"sweep", "--config", cfg, "--out", b.string(), "--workers", "3"}).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(read_csv(a.string()).size(), 9u);
}

TEST(Cli, SweepResumeCompletesPartialFile) {
  const auto cfg = write_config("sweep_resume.json", kSweepConfig);
  const auto full = dir() / "resume_full.csv";
  const auto part = dir() / "resume_part.csv";
  std::filesystem::remove(full);
  ASSERT_EQ(run({"sweep", "--config", cfg, "--out", full.string()}).code, 0);
  const std::string text = slurp(full);
  std::size_t cut = 0;
  for (int i = 0; i < 4; ++i) cut = text.find('\n', cut) + 1;
  std::ofstream(part, std::ios::binary) << text.substr(0, cut);
  const CliResult r = run({"sweep", "--config", cfg, "--out", part.string(), "--resume"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("skipped (already present): 3"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(part), text);
}

TEST(Cli, SeedFlagOverridesConfig) {
  const auto cfg = write_config("seed.json", R"({"n": 24, "s": 2, "m": 12, "r": 0.5, "altmin": {"num_starts": 1}})");
  const auto a = dir() / "seed_a.csv";
  const auto b = dir() / "seed_b.csv";
  ASSERT_EQ(run({"recover", "--config", cfg, "--out", a.string(), "--seed", "1"}).code, 0);
  ASSERT_EQ(run({"recover", "--config", cfg, "--out", b.string(), "--seed", "2"}).code, 0);
  EXPECT_NE(slurp(dir() / "seed_a_x_true.csv"), slurp(dir() / "seed_b_x_true.csv"));
}

TEST(Cli, RecoverWritesRecordAndCompanions) {
  const auto cfg = write_config("recover.json", R"({"n": 32, "s": 3, "m": 20, "r": 0.5, "delta_u": 4,
    "method": "altmin", "altmin": {"num_starts": 2}})");
  const auto out = dir() / "rec.csv";
  const CliResult r = run({"recover", "--config", cfg, "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rrmse="), std::string::npos);
  const auto rows = read_csv(out.string());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], csv_header());
  for (const char* c : {"rec_x_hat.csv", "rec_x_true.csv", "rec_delta_hat.csv", "rec_delta_true.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir() / c)) << c;
  }
}

TEST(Cli, RecoverFromFilesReproducesSyntheticRun) {
  // Measurements written by a synthetic instance, read back through the
  // file-input path.
  ExperimentSpec spec;
  spec.n = 32;
  spec.r = 0.5;
  const Instance inst = make_instance(spec, 3, 20, 0, false);
  write_vector_csv((dir() / "in_y.csv").string(), inst.y);
  write_vector_csv((dir() / "in_u.csv").string(), inst.u);
  write_vector_csv((dir() / "in_x.csv").string(), inst.signal.x);
  const auto cfg = write_config("files.json", R"({"n": 32, "r": 0.5, "method": "baseline1",
    "input": {"measurements": ")" + (dir() / "in_y.csv").string() + R"(", "frequencies": ")" +
                                                  (dir() / "in_u.csv").string() + R"(", "truth": ")" +
                                                  (dir() / "in_x.csv").string() + R"("}})");
  const CliResult r = run({"recover", "--config", cfg, "--out", (dir() / "files.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rrmse="), std::string::npos);
}

TEST(Cli, LinearizedExactAndDegenerate) {
  const auto ok = write_config("lin_ok.json", R"({"n": 21, "mode": "exact"})");
  const CliResult a = run({"linearized", "--config", ok, "--out", (dir() / "lin.csv").string()});
  EXPECT_EQ(a.code, 0);
  EXPECT_NE(a.out.find("exact recovery"), std::string::npos);
  const auto even = write_config("lin_even.json", R"({"n": 21, "mode": "exact", "parity": "even"})");
  const CliResult b = run({"linearized", "--config", even, "--out", (dir() / "lin2.csv").string()});
  EXPECT_EQ(b.code, kSolveError);
  EXPECT_NE(b.err.find("DegenerateMeasurements"), std::string::npos) << b.err;
}

TEST(Cli, AnalyzeWritesBothTables) {
  const auto cfg = write_config("analyze.json", R"({"n": 16, "m": 8, "mc_samples": 500,
    "g_experiment": {"trials": 2, "r_values": [0, 0.5]}})");
  const auto out = dir() / "an.csv";
  const CliResult r = run({"analyze", "--config", cfg, "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("holds"), std::string::npos);
  EXPECT_EQ(read_csv((dir() / "an_g_experiment.csv").string()).size(), 5u);
}

TEST(Cli, Tomo2dRequiresImageSize) {
  const auto cfg = write_config("tomo_bad.json", R"({"n_spokes": 4})");
  const CliResult r = run({"tomo2d", "--config", cfg});
  EXPECT_EQ(r.code, kUsageError);
  EXPECT_NE(r.err.find("image_size"), std::string::npos);
}

TEST(Cli, CompanionPathNaming) {
  EXPECT_EQ(companion_path("/a/b/run.csv", "x_hat"), "/a/b/run_x_hat.csv");
  EXPECT_EQ(companion_path("run.csv", "x_hat"), "run_x_hat.csv");
}

TEST(Config, DeltaUAcceptsIntegerOrM) {
  EXPECT_EQ(parse_delta_u(Json("M"), "delta_u"), 0);
  EXPECT_EQ(parse_delta_u(Json(4), "delta_u"), 4);
  EXPECT_THROW(parse_delta_u(Json("N"), "delta_u"), ConfigError);
  EXPECT_THROW(parse_delta_u(Json(0), "delta_u"), ConfigError);
}
