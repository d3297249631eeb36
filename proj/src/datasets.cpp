#include "dcci/datasets.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace dcci {

void PairDataset::validate() const {
  if (x.rows() != y.rows()) {
    std::ostringstream os;
    os << "dataset has " << x.rows() << " x rows but " << y.rows() << " y rows";
    throw ValidationError(os.str());
  }
  detail::require(x.allFinite() && y.allFinite(), "dataset has non-finite entries");
}

PairDataset PairDataset::slice(Index begin, Index count) const {
  detail::require(begin >= 0 && count >= 0 && begin + count <= size(), "PairDataset::slice out of range");
  PairDataset out;
  out.x = x.middleRows(begin, count);
  out.y = y.middleRows(begin, count);
  out.meta = meta;
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

PairDataset gen_gaussian_pair(Index n, double tau, double sigma, std::uint64_t seed) {
  detail::require(n >= 1, "gen_gaussian_pair: n must be at least 1");
  detail::require(tau > 0.0 && std::isfinite(tau), "gen_gaussian_pair: tau must be positive");
  detail::require(sigma >= 0.0 && std::isfinite(sigma), "gen_gaussian_pair: sigma must be nonnegative");
  Rng rx = make_stream(seed, 0);
  Rng rn = make_stream(seed, 1);
  std::normal_distribution<double> unit(0.0, 1.0);

  PairDataset d;
  d.x.resize(n, 1);
  d.y.resize(n, 1);
  for (Index i = 0; i < n; ++i) {
    d.x(i, 0) = tau * unit(rx);
    const double noise = unit(rn);
    d.y(i, 0) = d.x(i, 0) + sigma * noise;
  }
  d.meta = {{"generator", "gaussian"}, {"params", {{"n", n}, {"tau", tau}, {"sigma", sigma}}}, {"seed", seed}};
  return d;
}

PairDataset gen_ring_disk(Index n, std::uint64_t seed, double gap_angle, double shift_std,
                          const RingDiskGeometry& geometry) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  detail::require(n >= 1, "gen_ring_disk: n must be at least 1");
  detail::require(gap_angle >= 0.0 && gap_angle < two_pi, "gen_ring_disk: gap_angle must be in [0, 2 pi)");
  detail::require(shift_std >= 0.0, "gen_ring_disk: shift_std must be nonnegative");
  detail::require(geometry.disk_radius > 0.0 && geometry.ring_inner > geometry.disk_radius &&
                      geometry.ring_outer > geometry.ring_inner,
                  "gen_ring_disk: inconsistent geometry");

  Rng r_radius = make_stream(seed, 0);
  Rng r_angle = make_stream(seed, 1);
  Rng r_shift = make_stream(seed, 2);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> unit(0.0, 1.0);

  const double r0 = geometry.ring_inner * geometry.ring_inner;
  const double r1 = geometry.ring_outer * geometry.ring_outer;
  PairDataset d;
  d.x.resize(n, 2);
  d.y.resize(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double u = u01(r_radius);
    const double v = u01(r_angle);
    double radius;
    double angle;
    if (i % 2 == 0) {
      radius = geometry.disk_radius * std::sqrt(u);
      angle = two_pi * v;
    } else {
      radius = std::sqrt(r0 + u * (r1 - r0));
      angle = gap_angle + v * (two_pi - gap_angle);
    }
    d.x(i, 0) = radius * std::cos(angle);
    d.x(i, 1) = radius * std::sin(angle);
    const double s0 = unit(r_shift);
    const double s1 = unit(r_shift);
    d.y(i, 0) = d.x(i, 0) + shift_std * s0;
    d.y(i, 1) = d.x(i, 1) + shift_std * s1;
  }
  d.meta = {{"generator", "ringdisk"},
            {"params",
             {{"n", n},
              {"gap_angle", gap_angle},
              {"shift_std", shift_std},
              {"disk_radius", geometry.disk_radius},
              {"ring_inner", geometry.ring_inner},
              {"ring_outer", geometry.ring_outer}}},
            {"seed", seed}};
  return d;
}

JointDistribution<double> gen_discrete_joint(Index nx, Index ny, std::uint64_t seed, double concentration) {
  detail::require(nx >= 2 && ny >= 2, "gen_discrete_joint: both dimensions must be at least 2");
  detail::require(concentration > 0.0, "gen_discrete_joint: concentration must be positive");
  Rng rng = make_stream(seed, 0);
  std::gamma_distribution<double> gamma(concentration, 1.0);
  MatrixXd w(nx, ny);
  for (Index x = 0; x < nx; ++x)
    for (Index y = 0; y < ny; ++y) w(x, y) = gamma(rng);
  // Gamma draws can underflow to zero for small concentrations.
  w.array() += 1e-6 * w.maxCoeff();
  return JointDistribution<double>::normalized(w);
}

Eigen::Matrix<Index, Eigen::Dynamic, 2> sample_joint(const JointDistribution<double>& joint, Index n,
                                                      std::uint64_t seed) {
  detail::require(n >= 0, "sample_joint: n must be nonnegative");
  const MatrixXd& t = joint.table();
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(t.size()));
  for (Index x = 0; x < t.rows(); ++x)
    for (Index y = 0; y < t.cols(); ++y) weights.push_back(t(x, y));
  std::discrete_distribution<Index> cell(weights.begin(), weights.end());
  Rng rng = make_stream(seed, 0);
  Eigen::Matrix<Index, Eigen::Dynamic, 2> out(n, 2);
  for (Index i = 0; i < n; ++i) {
    const Index c = cell(rng);
    out(i, 0) = c / t.cols();
    out(i, 1) = c % t.cols();
  }
  return out;
}

PairDataset gen_labeled_blobs(Index n, Index classes, double separation, double noise, double label_noise,
                              std::uint64_t seed) {
  detail::require(n >= 1, "gen_labeled_blobs: n must be at least 1");
  detail::require(classes >= 2, "gen_labeled_blobs: need at least two classes");
  detail::require(separation >= 0.0 && noise >= 0.0, "gen_labeled_blobs: separation and noise must be nonnegative");
  detail::require(label_noise >= 0.0 && label_noise <= 1.0, "gen_labeled_blobs: label_noise must be in [0, 1]");

  Rng r_class = make_stream(seed, 0);
  Rng r_pos = make_stream(seed, 1);
  Rng r_flip = make_stream(seed, 2);
  std::uniform_int_distribution<Index> pick(0, classes - 1);
  std::uniform_int_distribution<Index> other(0, classes - 2);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> unit(0.0, 1.0);

  PairDataset d;
  d.x.resize(n, 2);
  d.y = MatrixXd::Zero(n, classes);
  for (Index i = 0; i < n; ++i) {
    const Index c = pick(r_class);
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(classes);
    const double e0 = unit(r_pos);
    const double e1 = unit(r_pos);
    d.x(i, 0) = separation * std::cos(angle) + noise * e0;
    d.x(i, 1) = separation * std::sin(angle) + noise * e1;
    Index label = c;
    const double flip = u01(r_flip);
    const Index alt = other(r_flip);
    if (flip < label_noise) label = alt >= c ? alt + 1 : alt;
    d.y(i, label) = 1.0;
  }
  d.meta = {{"generator", "blobs"},
            {"params",
             {{"n", n},
              {"classes", classes},
              {"separation", separation},
              {"noise", noise},
              {"label_noise", label_noise}}},
            {"seed", seed}};
  return d;
}

}  // namespace dcci
