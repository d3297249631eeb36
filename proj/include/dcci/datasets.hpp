#ifndef DCCI_DATASETS_HPP
#define DCCI_DATASETS_HPP

#include <cstdint>
#include <random>
#include <string>

#include <json.hpp>

#include "dcci/discrete.hpp"
#include "dcci/types.hpp"

namespace dcci {

/// Paired samples; row n of x and y is one draw (x_n, y_n).
struct PairDataset {
  MatrixXd x;
  MatrixXd y;
  nlohmann::json meta = nlohmann::json::object();  // generator, params, seed

  Index size() const { return x.rows(); }
  Index dx() const { return x.cols(); }
  Index dy() const { return y.cols(); }

  /// Throws unless the two sides have equal row counts and finite entries.
  void validate() const;
  /// Rows [begin, begin + count).
  PairDataset slice(Index begin, Index count) const;
};

/// Seed for an independent substream: splitmix64 of the run seed mixed with
/// the stream index. Stream k drives column/aspect k of a generator.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) { return Rng(derive_seed(seed, stream)); }

/// x ~ N(0, tau^2), y = x + N(0, sigma^2).
PairDataset gen_gaussian_pair(Index n, double tau, double sigma, std::uint64_t seed);

struct RingDiskGeometry {
  double disk_radius = 0.25;
  double ring_inner = 0.8;
  double ring_outer = 1.0;
};

/// Even rows: uniform on the disk. Odd rows: uniform on the annulus with the
/// sector [0, gap_angle) removed. y = x + N(0, shift_std^2 I).
PairDataset gen_ring_disk(Index n, std::uint64_t seed, double gap_angle = 0.0, double shift_std = 0.05,
                          const RingDiskGeometry& geometry = {});

/// Random full-support joint: Gamma(concentration) weights, normalized.
JointDistribution<double> gen_discrete_joint(Index nx, Index ny, std::uint64_t seed, double concentration = 1.0);

/// i.i.d. (x, y) index pairs from a joint, one pair per row (column 0 = x, 1 = y).
Eigen::Matrix<Index, Eigen::Dynamic, 2> sample_joint(const JointDistribution<double>& joint, Index n,
                                                      std::uint64_t seed);

/// Gaussian blobs centred on a circle of radius `separation`, one per class;
/// y is the one-hot label, replaced by a uniformly chosen other class with
/// probability label_noise.
PairDataset gen_labeled_blobs(Index n, Index classes, double separation, double noise, double label_noise,
                              std::uint64_t seed);

}  // namespace dcci

#endif  // DCCI_DATASETS_HPP
