#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <blindcal/csv.hpp>
#include <blindcal/experiments.hpp>

#include "oracles.hpp"

using namespace blindcal;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.n = 32;
  spec.s_list = {2, 3};
  spec.m_list = {16, 20};
  spec.r = 0.5;
  spec.delta_u = 4;
  spec.noise_pct = 2.0;
  spec.trials = 2;
  spec.seed = 77;
  spec.methods = {Method::AltMin, Method::Baseline1};
  spec.altmin.num_starts = 2;
  return spec;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "blindcal_unit_exp";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(MixSeed, DependsOnEveryPartAndOrder) {
  EXPECT_EQ(mix_seed({1, 2, 3}), mix_seed({1, 2, 3}));
  EXPECT_NE(mix_seed({1, 2, 3}), mix_seed({1, 3, 2}));
  EXPECT_NE(mix_seed({1, 2}), mix_seed({1, 2, 0}));
}

TEST(GenSparse, ExactSparsityAndDeterminism) {
  const Vector a = gen_sparse_signal(50, 7, BasisKind::Canonical, 3);
  EXPECT_EQ((a.array() != 0.0).count(), 7);
  EXPECT_EQ(a, gen_sparse_signal(50, 7, BasisKind::Canonical, 3));
  EXPECT_NE(a, gen_sparse_signal(50, 7, BasisKind::Canonical, 4));
  const SparseSignal h = gen_sparse(SparsityBasis(BasisKind::Haar1D, Grid::line(32)), 4, 5);
  EXPECT_EQ((h.coeffs.array() != 0.0).count(), 4);
  EXPECT_THROW(gen_sparse_signal(5, 6, BasisKind::Canonical, 1), Error);
}

TEST(GenFrequencies, DistinctSortedIntegersInRange) {
  const Vector u = gen_frequencies(30, 41, 8);
  std::set<double> seen(u.begin(), u.end());
  EXPECT_EQ(seen.size(), 30u);
  for (Index i = 0; i < u.size(); ++i) {
    EXPECT_EQ(u[i], std::round(u[i]));
    EXPECT_LE(std::abs(u[i]), 20.0);
    if (i > 0) EXPECT_LT(u[i - 1], u[i]);
  }
  EXPECT_GE(min_frequency_gap(u), 1.0);
  EXPECT_THROW(gen_frequencies(50, 41, 1), Error);
}

TEST(AddNoise, ScaleFollowsPercentage) {
  const CVector y = CVector::Constant(20000, Complex(3.0, 4.0));
  const CVector noisy = add_noise(y, 10.0, 9);
  const CVector diff = noisy - y;
  const double sigma = std::sqrt(diff.real().squaredNorm() / 20000.0);
  EXPECT_NEAR(sigma, 0.5, 0.02);
  EXPECT_EQ(add_noise(y, 0.0, 9), y);
}

TEST(Rrmse, Definition) {
  Vector x(2), xh(2);
  x << 3, 4;
  xh << 3, 3;
  EXPECT_DOUBLE_EQ(rrmse(x, xh), 0.2);
}

TEST(BalancedGroups, PartitionWithNearEqualSizes) {
  const auto groups = balanced_groups(23, 5, 10);
  ASSERT_EQ(groups.size(), 5u);
  std::set<int> all;
  for (const auto& g : groups) {
    EXPECT_TRUE(g.size() == 4u || g.size() == 5u);
    all.insert(g.begin(), g.end());
  }
  EXPECT_EQ(all.size(), 23u);
}

TEST(Instance, SharedAcrossMethodsAndReproducible) {
  const ExperimentSpec spec = small_spec();
  const Instance a = make_instance(spec, 3, 20, 1, false);
  const Instance b = make_instance(spec, 3, 20, 1, false);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.signal.x, b.signal.x);
  EXPECT_EQ(a.model.num_params(), 4);
  const Instance other_trial = make_instance(spec, 3, 20, 0, false);
  EXPECT_NE(a.signal.x, other_trial.signal.x);
  // Frequencies are fixed per M.
  EXPECT_EQ(a.u, other_trial.u);
  const Instance train = make_instance(spec, 3, 20, 1, false, 1000);
  EXPECT_NE(train.signal.x, a.signal.x);
}

TEST(Method, NamesRoundTrip) {
  for (auto m : {Method::AltMin, Method::Baseline1, Method::Baseline2, Method::Linearized}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("oracle"), Error);
}

TEST(Spec, Validation) {
  ExperimentSpec spec = small_spec();
  spec.m_list = {40};
  EXPECT_THROW(spec.validate(), Error);
  spec = small_spec();
  spec.methods.clear();
  EXPECT_THROW(spec.validate(), Error);
  spec = small_spec();
  spec.trials = 0;
  EXPECT_THROW(spec.validate(), Error);
}

TEST(Records, CsvFieldsAlignWithHeader) {
  ResultRecord rec;
  rec.wall_time_ms = 12.5;
  EXPECT_EQ(to_csv_fields(rec, false).size(), csv_header().size());
  const auto header = csv_header();
  const auto pos = std::find(header.begin(), header.end(), "wall_time_ms") - header.begin();
  EXPECT_EQ(to_csv_fields(rec, false)[static_cast<size_t>(pos)], "0");
  EXPECT_EQ(to_csv_fields(rec, true)[static_cast<size_t>(pos)], "12.5");
}

TEST(Sweep, CanonicalOrderAndDeterminism) {
  const ExperimentSpec spec = small_spec();
  const auto p1 = temp_file("sweep1.csv");
  const auto p2 = temp_file("sweep2.csv");
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
  SweepOptions opts;
  opts.csv_path = p1.string();
  const SweepOutcome a = run_sweep(spec, opts);
  opts.csv_path = p2.string();
  opts.workers = 3;
  run_sweep(spec, opts);
  EXPECT_EQ(slurp(p1), slurp(p2));
  ASSERT_EQ(a.records.size(), 16u);
  EXPECT_EQ(a.records[0].s, 2);
  EXPECT_EQ(a.records[0].m, 16);
  EXPECT_EQ(a.records[0].method, "altmin");
  EXPECT_EQ(a.records[1].trial, 1);
  EXPECT_EQ(a.records[2].method, "baseline1");
  EXPECT_EQ(a.records[4].m, 20);
}

TEST(Sweep, ResumeSkipsCompletedRowsAndMatchesFreshRun) {
  const ExperimentSpec spec = small_spec();
  const auto full = temp_file("full.csv");
  const auto part = temp_file("part.csv");
  std::filesystem::remove(full);
  SweepOptions opts;
  opts.csv_path = full.string();
  run_sweep(spec, opts);
  // Keep the header and five rows, plus a torn sixth row.
  const std::string text = slurp(full);
  std::size_t cut = 0;
  for (int i = 0; i < 6; ++i) cut = text.find('\n', cut) + 1;
  {
    std::ofstream out(part, std::ios::binary);
    out << text.substr(0, cut) << "2,canon";
  }
  opts.csv_path = part.string();
  opts.resume = true;
  const SweepOutcome res = run_sweep(spec, opts);
  EXPECT_EQ(res.skipped, 5);
  EXPECT_EQ(res.records.size(), 11u);
  EXPECT_EQ(slurp(part), text);
}

TEST(Sweep, ResumeRejectsForeignHeader) {
  const auto path = temp_file("foreign.csv");
  {
    std::ofstream out(path);
    out << "a,b\n1,2\n";
  }
  SweepOptions opts;
  opts.csv_path = path.string();
  opts.resume = true;
  EXPECT_THROW(run_sweep(small_spec(), opts), Error);
}

TEST(LambdaCv, PicksCandidateWithSmallestMeanError) {
  ExperimentSpec spec = small_spec();
  const LambdaCvResult cv = cross_validate_lambda(spec, 2, 16, Method::Baseline1, {0.1, 1.0}, 2);
  ASSERT_EQ(cv.mean_rrmse.size(), 2u);
  const auto best = std::min_element(cv.mean_rrmse.begin(), cv.mean_rrmse.end()) - cv.mean_rrmse.begin();
  EXPECT_EQ(cv.best_factor, cv.factors[static_cast<size_t>(best)]);
}

TEST(ExecuteMethod, TracesStartBelowInitialObjective) {
  const ExperimentSpec spec = small_spec();
  for (Method m : {Method::AltMin, Method::Baseline1, Method::Baseline2, Method::Linearized}) {
    const MethodRun run = execute_method(spec, 2, 16, m, 0, 1.0);
    ASSERT_FALSE(run.traces.empty());
    for (const auto& t : run.traces) EXPECT_TRUE(oracle::non_increasing_from(t, run.initial_objective, 1e-9));
    EXPECT_TRUE(std::isfinite(run.record.rrmse));
  }
}

TEST(Tomo2d, SmallDemoRunsAndReportsBothMethods) {
  Tomo2dSpec spec;
  spec.image_size = 8;
  spec.n_spokes = 6;
  spec.per_spoke = 8;
  spec.sparsity = 4;
  spec.altmin.num_starts = 2;
  const Tomo2dReport rep = run_tomo2d(spec);
  EXPECT_EQ(rep.image_true.size(), 64);
  EXPECT_EQ(rep.beta_hat.size(), 6);
  EXPECT_TRUE(std::isfinite(rep.rrmse_altmin));
  EXPECT_TRUE(std::isfinite(rep.rrmse_baseline1));
  EXPECT_EQ(rep.traces.size(), 2u);
}
