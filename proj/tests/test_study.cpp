#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fracsde/study.hpp"
#include "reference_rate_tables.hpp"

using namespace fracsde;

namespace {

StudyConfig small_temporal() {
  StudyConfig c;
  c.alphas = {0.4, 0.8};
  c.hursts = {0.7};
  c.m = -0.5;
  c.K = 24;
  c.trajectories = 7;
  c.seed = 9;
  c.grids = {8, 16, 32};
  c.fixed_inverse_h = 16;
  return c;
}

StudyConfig small_spatial() {
  StudyConfig c = small_temporal();
  c.grids = {4, 8, 16};
  c.fixed_N = 32;
  c.g0 = InitialData::parabola;
  return c;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

// =============================================================================
// Rates
// =============================================================================

TEST(Rate, Examples) {
  EXPECT_DOUBLE_EQ(rate(0.4, 0.2), 1.0);
  // log2(4.093 / 2.698) = 0.601268..., displayed to four digits as 0.6012
  EXPECT_NEAR(rate(4.093e-4, 2.698e-4), std::log(4.093 / 2.698) / std::log(2.0), 1e-14);
  EXPECT_NEAR(rate(4.093e-4, 2.698e-4), 0.6012, 1e-4);
  EXPECT_EQ(rate(3e-5, 3e-5), 0.0);
  EXPECT_THROW(rate(0.0, 1.0), std::domain_error);
  EXPECT_THROW(rate(1.0, -1.0), std::domain_error);
}

TEST(MeanRate, FirstTemporalReferenceRow) {
  const auto& r = testdata::kReferenceRows[0];
  EXPECT_NEAR(mean_rate(r.errors), 0.5505, 5e-4);
}

TEST(MeanRate, AllReferenceRows) {
  for (const auto& r : testdata::kReferenceRows) {
    EXPECT_NEAR(mean_rate(r.errors), r.reported_mean_rate, 5e-4) << r.hurst << " " << r.alpha << " " << r.m;
    const double rho = (1.0 + r.m) / 4.0;
    const double predicted = r.temporal ? predicted_temporal_rate(r.hurst, r.alpha, rho)
                                        : predicted_spatial_rate(r.hurst, r.alpha, rho);
    EXPECT_NEAR(predicted, r.predicted_rate, 5e-5);
  }
}

TEST(MeanRate, NeedsTwoErrors) {
  const std::vector<double> one{1.0};
  EXPECT_THROW(mean_rate(one), std::domain_error);
  EXPECT_TRUE(successive_rates(one).empty());
}

// =============================================================================
// Coarsening and coupling
// =============================================================================

TEST(CoarsenIncrements, Example) {
  FgnTrajectory fine{Eigen::MatrixXd(1, 4)};
  fine.increments << 1, 2, 3, 4;
  const FgnTrajectory c = coarsen_increments(fine, 2);
  ASSERT_EQ(c.n_steps(), 2u);
  EXPECT_EQ(c.increments(0, 0), 3.0);
  EXPECT_EQ(c.increments(0, 1), 7.0);
  EXPECT_EQ(coarsen_increments(fine, 1).increments, fine.increments);
  EXPECT_THROW(coarsen_increments(fine, 3), std::invalid_argument);
  EXPECT_THROW(coarsen_increments(fine, 0), std::invalid_argument);
}

TEST(CoarsenIncrements, ComposesAndPreservesEndpointPaths) {
  TrajectorySampler sampler(NoiseSpec{0.65, 0.0, 5}, 64, 1.0 / 64.0);
  const FgnTrajectory fine = sampler.sample(3, 1);
  const FgnTrajectory a = coarsen_increments(coarsen_increments(fine, 2), 4);
  const FgnTrajectory b = coarsen_increments(fine, 8);
  EXPECT_LT((a.increments - b.increments).cwiseAbs().maxCoeff(), 1e-14);
  // the coarse path equals the fine path at every coarse time point
  for (Eigen::Index k = 0; k < fine.increments.rows(); ++k) {
    double fine_path = 0.0, coarse_path = 0.0;
    for (Eigen::Index n = 0; n < 8; ++n) {
      coarse_path += b.increments(k, n);
      for (Eigen::Index j = 0; j < 8; ++j) fine_path += fine.increments(k, 8 * n + j);
      EXPECT_NEAR(coarse_path, fine_path, 1e-14 * std::max(1.0, std::abs(fine_path)));
    }
  }
  // loads are linear in the increments, so coarse loads are block sums of fine loads
  const LoadOperator op(5, Mesh(8));
  const Eigen::MatrixXd lf = op.all_loads(fine), lc = op.all_loads(b);
  for (Eigen::Index n = 0; n < 8; ++n)
    EXPECT_LT((lc.col(n) - lf.middleCols(8 * n, 8).rowwise().sum()).cwiseAbs().maxCoeff(), 1e-14);
}

// =============================================================================
// Validation
// =============================================================================

TEST(ValidateLadder, Rules) {
  const std::vector<std::size_t> ok{16, 32, 64}, gap{16, 64}, single{16}, zero{0, 0};
  EXPECT_NO_THROW(validate_ladder(ok));
  EXPECT_THROW(validate_ladder(gap), ConfigError);
  EXPECT_THROW(validate_ladder(single), ConfigError);
  EXPECT_THROW(validate_ladder(zero), ConfigError);
}

TEST(Study, MissingSeedIsAnError) {
  StudyConfig c = small_temporal();
  c.seed.reset();
  EXPECT_THROW(temporal_study(c), ConfigError);
  EXPECT_THROW(spatial_study(c), ConfigError);
}

TEST(Study, BadLaddersRejected) {
  StudyConfig c = small_temporal();
  c.grids = {8, 24};
  EXPECT_THROW(temporal_study(c), ConfigError);
  c.grids = {8};
  EXPECT_THROW(temporal_study(c), ConfigError);
}

// =============================================================================
// Studies
// =============================================================================

TEST(Study, TemporalShapeAndDeterminism) {
  StudyConfig c = small_temporal();
  c.threads = 1;
  const RateTable a = temporal_study(c);
  c.threads = 3;
  const RateTable b = temporal_study(c);
  ASSERT_EQ(a.rows.size(), 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(a.rows[r].errors.size(), 3u);
    EXPECT_EQ(a.rows[r].rates.size(), 2u);
    EXPECT_EQ(a.rows[r].errors, b.rows[r].errors);  // bit-identical across thread counts
    for (double e : a.rows[r].errors) EXPECT_GT(e, 0.0);
  }
  EXPECT_NE(a.rows[0].errors, a.rows[1].errors);
  std::ostringstream sa, sb;
  write_csv(sa, a);
  write_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Study, SpatialDeterminismAcrossThreads) {
  StudyConfig c = small_spatial();
  c.threads = 1;
  const RateTable a = spatial_study(c);
  c.threads = 4;
  const RateTable b = spatial_study(c);
  ASSERT_EQ(a.rows.size(), 2u);
  for (std::size_t r = 0; r < 2; ++r) EXPECT_EQ(a.rows[r].errors, b.rows[r].errors);
}

TEST(Study, SeedChangesResults) {
  StudyConfig c = small_temporal();
  const RateTable a = temporal_study(c);
  c.seed = 10;
  EXPECT_NE(a.rows[0].errors, temporal_study(c).rows[0].errors);
}

TEST(Study, DeterministicLaddersReachFullOrder) {
  StudyConfig c;
  c.alphas = {0.5};
  c.grids = {16, 32, 64};
  c.fixed_inverse_h = 32;
  c.g0 = InitialData::parabola;
  const RateTable t = deterministic_temporal_study(c);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(t.rows[0].mean_rate, 1.0, 0.15);

  c.grids = {8, 16, 32};
  c.fixed_N = 256;
  c.oracle_modes = 400;
  const RateTable s = deterministic_spatial_study(c);
  EXPECT_NEAR(s.rows[0].mean_rate, 2.0, 0.15);
}

// =============================================================================
// CSV
// =============================================================================

TEST(WriteCsv, Format) {
  RateTable t;
  RateRow r;
  r.hurst = 0.6;
  r.alpha = 0.3;
  r.m = 0.0;
  r.grid = {32, 64};
  r.errors = {4.093e-4, 2.698e-4};
  r.rates = successive_rates(r.errors);
  r.mean_rate = mean_rate(r.errors);
  r.predicted_rate = 0.525;
  r.seed = 42;
  t.rows.push_back(r);
  std::ostringstream os;
  write_csv(os, t);
  const auto l = lines(os.str());
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0], kCsvHeader);
  EXPECT_EQ(l[1], "0.6,0.3,0,1,32,4.093000e-04,0.6013,0.6013,0.5250,42");
  EXPECT_EQ(l[2], "0.6,0.3,0,2,64,2.698000e-04,,0.6013,0.5250,42");
}
