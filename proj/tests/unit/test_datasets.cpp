#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dcci/datasets.hpp"

using namespace dcci;

TEST(GaussianPair, VarianceAndCovariance) {
  const PairDataset d = gen_gaussian_pair(1000000, 1.0, 0.5, 1);
  const double var_x = d.x.squaredNorm() / double(d.size());
  EXPECT_NEAR(var_x, 1.0, 0.01);
  // cov(x, y) = tau^2; standard error of the mean of x*y.
  const VectorXd prod = d.x.col(0).cwiseProduct(d.y.col(0));
  const double se = std::sqrt((prod.array() - prod.mean()).square().mean() / double(d.size()));
  EXPECT_LE(std::abs(prod.mean() - 1.0), 3.0 * se);
}

TEST(GaussianPair, NoiselessAndReproducible) {
  const PairDataset d = gen_gaussian_pair(100, 2.0, 0.0, 2);
  EXPECT_EQ(d.x, d.y);
  const PairDataset a = gen_gaussian_pair(50, 1.0, 1.0, 3), b = gen_gaussian_pair(50, 1.0, 1.0, 3);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.x, gen_gaussian_pair(50, 1.0, 1.0, 4).x);
  EXPECT_THROW(gen_gaussian_pair(0, 1.0, 1.0, 1), ValidationError);
  EXPECT_THROW(gen_gaussian_pair(10, 0.0, 1.0, 1), ValidationError);
}

TEST(GaussianPair, PrefixStableAcrossSizes) {
  // Per-column streams: a longer draw extends a shorter one.
  const PairDataset a = gen_gaussian_pair(20, 1.0, 1.0, 5), b = gen_gaussian_pair(40, 1.0, 1.0, 5);
  EXPECT_EQ(a.x, b.x.topRows(20));
}

TEST(RingDisk, AngularUniformity) {
  const PairDataset d = gen_ring_disk(100000, 6);
  std::vector<double> counts(36, 0.0);
  double ring = 0;
  for (Index i = 1; i < d.size(); i += 2) {
    double a = std::atan2(d.x(i, 1), d.x(i, 0));
    if (a < 0) a += 2 * std::numbers::pi;
    counts[std::min<std::size_t>(35, std::size_t(a / (2 * std::numbers::pi) * 36))] += 1;
    ring += 1;
  }
  double stat = 0.0;
  for (double c : counts) stat += (c - ring / 36) * (c - ring / 36) / (ring / 36);
  EXPECT_LT(stat, 66.62);  // chi-square, 35 dof, 0.001 level
}

TEST(RingDisk, GeometryAndSplit) {
  const PairDataset d = gen_ring_disk(1001, 7, std::numbers::pi / 8, 0.0);
  EXPECT_EQ(d.x, d.y);
  Index disk = 0, ring = 0;
  for (Index i = 0; i < d.size(); ++i) {
    const double r = d.x.row(i).norm();
    if (r <= 0.25) {
      ++disk;
    } else {
      ++ring;
      EXPECT_GE(r, 0.8 - 1e-12);
      EXPECT_LE(r, 1.0 + 1e-12);
      double a = std::atan2(d.x(i, 1), d.x(i, 0));
      if (a < 0) a += 2 * std::numbers::pi;
      EXPECT_GE(a, std::numbers::pi / 8 - 1e-12);
    }
  }
  EXPECT_EQ(disk, 501);
  EXPECT_EQ(ring, 500);
  EXPECT_EQ(d.meta["generator"], "ringdisk");
  EXPECT_THROW(gen_ring_disk(10, 1, 2 * std::numbers::pi), ValidationError);
}

TEST(DiscreteJoint, FullSupportAndReproducible) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto j = gen_discrete_joint(5, 7, s, 0.3);
    EXPECT_GT(j.table().minCoeff(), 0.0);
    EXPECT_NEAR(j.table().sum(), 1.0, 1e-12);
  }
  EXPECT_EQ(gen_discrete_joint(3, 3, 9).table(), gen_discrete_joint(3, 3, 9).table());
  EXPECT_THROW(gen_discrete_joint(1, 3, 9), ValidationError);
}

TEST(DiscreteJoint, SampledFrequencies) {
  const auto j = gen_discrete_joint(3, 4, 10);
  const Index n = 1000000;
  const auto pairs = sample_joint(j, n, 11);
  MatrixXd counts = MatrixXd::Zero(3, 4);
  for (Index i = 0; i < n; ++i) counts(pairs(i, 0), pairs(i, 1)) += 1;
  for (Index x = 0; x < 3; ++x) {
    for (Index y = 0; y < 4; ++y) {
      const double p = j(x, y);
      const double se = std::sqrt(p * (1 - p) / double(n));
      EXPECT_LE(std::abs(counts(x, y) / double(n) - p), 5 * se) << x << "," << y;
    }
  }
}

TEST(Blobs, BayesRates) {
  // No label noise, far-apart blobs: the nearest centre is always right.
  const PairDataset clean = gen_labeled_blobs(3000, 3, 10.0, 0.5, 0.0, 12);
  // With 5% flips, the Bayes accuracy is 95% up to binomial error.
  const PairDataset noisy = gen_labeled_blobs(20000, 3, 10.0, 0.5, 0.05, 13);
  auto nearest_accuracy = [](const PairDataset& d) {
    Index hit = 0;
    for (Index i = 0; i < d.size(); ++i) {
      Index best = 0;
      double dist = INFINITY;
      for (Index c = 0; c < 3; ++c) {
        const double a = 2 * std::numbers::pi * double(c) / 3.0;
        const double e = std::hypot(d.x(i, 0) - 10 * std::cos(a), d.x(i, 1) - 10 * std::sin(a));
        if (e < dist) {
          dist = e;
          best = c;
        }
      }
      Index label = 0;
      d.y.row(i).maxCoeff(&label);
      hit += best == label;
    }
    return double(hit) / double(d.size());
  };
  EXPECT_EQ(nearest_accuracy(clean), 1.0);
  const double se = std::sqrt(0.95 * 0.05 / 20000.0);
  EXPECT_NEAR(nearest_accuracy(noisy), 0.95, 4 * se);
  EXPECT_EQ(noisy.y.rowwise().sum(), VectorXd::Ones(20000));
}

TEST(Blobs, Validation) {
  EXPECT_THROW(gen_labeled_blobs(10, 1, 1.0, 1.0, 0.0, 1), ValidationError);
  EXPECT_THROW(gen_labeled_blobs(10, 3, 1.0, 1.0, 1.5, 1), ValidationError);
}

TEST(DeriveSeed, StreamsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}

TEST(PairDataset, ValidateAndSlice) {
  PairDataset d = gen_gaussian_pair(10, 1.0, 1.0, 14);
  const PairDataset s = d.slice(2, 3);
  EXPECT_EQ(s.x, d.x.middleRows(2, 3));
  EXPECT_THROW(d.slice(8, 5), ValidationError);
  d.y.conservativeResize(9, 1);
  EXPECT_THROW(d.validate(), ValidationError);
}
