#include "dcci/inference.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace dcci {

namespace {

// Parses "<s><digits>" starting at text[pos]; advances pos.
int parse_coordinate(const std::string& text, std::size_t& pos, char& side) {
  if (pos >= text.size() || (text[pos] != 'x' && text[pos] != 'y')) {
    throw ValidationError("target '" + text + "': expected x<i> or y<i>");
  }
  side = text[pos++];
  int value = 0;
  const auto* first = text.data() + pos;
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr == first || value < 0) {
    throw ValidationError("target '" + text + "': expected a coordinate index");
  }
  pos += static_cast<std::size_t>(ptr - first);
  return value;
}

std::string coordinate_name(char side, int i) { return std::string(1, side) + std::to_string(i); }

}  // namespace

double Target::operator()(const Eigen::Ref<const RowVector<double>>& point) const {
  if (i < 0) return 1.0;
  if (i >= point.size() || j >= point.size()) {
    throw ValidationError("target '" + name + "' refers to a coordinate outside the data");
  }
  return j < 0 ? point(i) : point(i) * point(j);
}

Target parse_target(const std::string& raw) {
  std::string text;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) text.push_back(c);
  detail::require(!text.empty(), "empty target name");
  Target t;
  if (text == "1") {
    t.name = "1";
    return t;
  }
  std::size_t pos = 0;
  t.i = parse_coordinate(text, pos, t.side);
  if (pos == text.size()) {
    t.name = coordinate_name(t.side, t.i);
    return t;
  }
  if (text.compare(pos, 2, "^2") == 0 && pos + 2 == text.size()) {
    t.j = t.i;
  } else if (text[pos] == '*') {
    ++pos;
    char side2 = 0;
    t.j = parse_coordinate(text, pos, side2);
    if (side2 != t.side) throw ValidationError("target '" + raw + "' mixes x and y coordinates");
    if (pos != text.size()) throw ValidationError("target '" + raw + "': trailing characters");
  } else {
    throw ValidationError("target '" + raw + "': trailing characters");
  }
  if (t.j < t.i) std::swap(t.i, t.j);
  t.name = coordinate_name(t.side, t.i) + "*" + coordinate_name(t.side, t.j);
  return t;
}

std::vector<Target> parse_targets(const std::string& comma_separated) {
  std::vector<Target> out;
  std::stringstream ss(comma_separated);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(parse_target(item));
  }
  detail::require(!out.empty(), "no targets given");
  return out;
}

std::vector<std::string> moment_target_names(char side, Index dim) {
  std::vector<std::string> out;
  for (int i = 0; i < dim; ++i) out.push_back(coordinate_name(side, i));
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) out.push_back(coordinate_name(side, i) + "*" + coordinate_name(side, j));
  return out;
}

Index InferenceModel::target_index(const std::string& name) const {
  for (std::size_t k = 0; k < targets.size(); ++k)
    if (targets[k].name == name) return static_cast<Index>(k);
  return -1;
}

InferenceModel make_inference(CovarianceTriple triple, MatrixXd theta, Direction direction,
                              std::vector<Target> targets, const InverseMode& mode) {
  detail::require(triple.A.rows() == triple.kg() && triple.A.cols() == triple.kf(), "inference: A has the wrong shape");
  const Index k_target = direction == Direction::YtoX ? triple.kf() : triple.kg();
  detail::require(theta.cols() == k_target, "inference: theta has the wrong number of feature columns");
  detail::require(static_cast<Index>(targets.size()) == theta.rows(), "inference: one target name per theta row");
  detail::require(theta.allFinite(), "inference: theta has non-finite entries");

  const MatrixXd kinv = stable_inverse(triple.K, mode);
  const MatrixXd linv = stable_inverse(triple.L, mode);
  MatrixXd transfer;
  MatrixXd check;
  if (direction == Direction::YtoX) {
    const MatrixXd n_star = kinv * triple.A.transpose();  // components of N^*
    transfer = n_star * linv;
    check = kinv * (triple.A.transpose() * linv);
  } else {
    const MatrixXd n = linv * triple.A;  // components of N
    transfer = n * kinv;
    check = linv * (triple.A * kinv);
  }
  const double scale = 1.0 + kinv.norm() * triple.A.norm() * linv.norm();
  if (!transfer.allFinite() || (transfer - check).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw NumericalError("inference: transfer matrix is not numerically stable");
  }

  InferenceModel inf;
  inf.triple = std::move(triple);
  inf.theta = std::move(theta);
  inf.direction = direction;
  inf.targets = std::move(targets);
  inf.inverse_mode = mode;
  inf.transfer = std::move(transfer);
  return inf;
}

InferenceModel fit_statistics(const TrainedModel& model, const PairDataset& training, std::vector<Target> targets,
                              Direction direction) {
  training.validate();
  detail::require(training.size() >= 1, "fit_statistics: empty training set");
  detail::require(!targets.empty(), "fit_statistics: no targets");
  const char side = direction == Direction::YtoX ? 'x' : 'y';
  const MatrixXd& raw = direction == Direction::YtoX ? training.x : training.y;
  for (const Target& t : targets) {
    if (t.i >= 0 && t.side != side) {
      throw ValidationError("target '" + t.name + "' is not on the inferred side (" + std::string(1, side) + ")");
    }
  }

  const MatrixXd F = features_x(model, training.x);
  const MatrixXd G = features_y(model, training.y);
  const Index n = training.size();
  MatrixXd values(n, static_cast<Index>(targets.size()));
  for (Index r = 0; r < n; ++r)
    for (std::size_t k = 0; k < targets.size(); ++k) values(r, static_cast<Index>(k)) = targets[k](raw.row(r));
  if (!values.allFinite()) throw ValidationError("fit_statistics: a target produced non-finite values");

  const MatrixXd& own = direction == Direction::YtoX ? F : G;
  MatrixXd theta = values.transpose() * own / static_cast<double>(n);

  InferenceModel inf = make_inference(covariances(F, G), std::move(theta), direction, std::move(targets),
                                      model.config.inverse_mode);
  inf.net_f = model.net_f;
  inf.net_g = model.net_g;
  return inf;
}

Posterior infer_features(const InferenceModel& inf, const Eigen::Ref<const VectorXd>& features) {
  detail::require(features.size() == inf.transfer.cols(), "infer: conditioning feature count mismatch");
  Posterior p;
  p.expectations = inf.theta * (inf.transfer * features);
  const std::size_t m = inf.targets.size();
  p.names.reserve(m);
  p.stddev.assign(m, std::nullopt);
  p.clamped.assign(m, false);
  for (std::size_t k = 0; k < m; ++k) {
    const Target& t = inf.targets[k];
    p.names.push_back(t.name);
    if (t.i < 0 || t.j >= 0) continue;
    const Index sq = inf.target_index(t.name + "*" + t.name);
    if (sq < 0) continue;
    const double mean = p.expectations(static_cast<Index>(k));
    double var = p.expectations(sq) - mean * mean;
    if (var < 0.0) {
      var = 0.0;
      p.clamped[k] = true;
    }
    p.stddev[k] = std::sqrt(var);
  }
  return p;
}

namespace {

const FeatureNetwork<double>& conditioning_net(const InferenceModel& inf) {
  return inf.direction == Direction::YtoX ? inf.net_g : inf.net_f;
}

}  // namespace

Posterior infer(const InferenceModel& inf, const Eigen::Ref<const RowVector<double>>& observation) {
  const MatrixXd feats = forward(conditioning_net(inf), MatrixXd(observation));
  return infer_features(inf, feats.row(0).transpose());
}

MatrixXd infer_batch(const InferenceModel& inf, const MatrixXd& observations) {
  const MatrixXd feats = forward(conditioning_net(inf), observations);
  detail::require(feats.cols() == inf.transfer.cols(), "infer: conditioning feature count mismatch");
  return feats * (inf.theta * inf.transfer).transpose();
}

InferenceModel fit_classifier(const TrainedModel& model, const PairDataset& training) {
  std::vector<Target> targets;
  for (Index c = 0; c < training.dy(); ++c) targets.push_back(parse_target("y" + std::to_string(c)));
  return fit_statistics(model, training, std::move(targets), Direction::XtoY);
}

Classification classify(const InferenceModel& inf, const Eigen::Ref<const RowVector<double>>& x) {
  detail::require(inf.direction == Direction::XtoY, "classify: model must infer y from x");
  for (const Target& t : inf.targets) {
    detail::require(t.side == 'y' && t.i >= 0 && t.j < 0, "classify: targets must be label coordinates");
  }
  Classification out;
  out.scores = infer(inf, x).expectations;
  out.label = 0;
  for (Index c = 1; c < out.scores.size(); ++c)
    if (out.scores(c) > out.scores(out.label)) out.label = c;
  out.label = inf.targets[static_cast<std::size_t>(out.label)].i;
  return out;
}

MaxVarianceDirection posterior_direction_of_max_variance(const Posterior& posterior, char side, Index dim) {
  auto find = [&](const std::string& name) -> double {
    for (std::size_t k = 0; k < posterior.names.size(); ++k)
      if (posterior.names[k] == name) return posterior.expectations(static_cast<Index>(k));
    throw ValidationError("max-variance direction needs target '" + name + "'");
  };
  MaxVarianceDirection out;
  out.mean.resize(dim);
  for (int i = 0; i < dim; ++i) out.mean(i) = find(std::string(1, side) + std::to_string(i));
  MatrixXd cov(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      const std::string name =
          std::string(1, side) + std::to_string(i) + "*" + std::string(1, side) + std::to_string(j);
      cov(i, j) = find(name) - out.mean(i) * out.mean(j);
      cov(j, i) = cov(i, j);
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
  const VectorXd& lambda = eig.eigenvalues();
  out.clamped = (lambda.array() < 0.0).any();
  const double top = std::max(0.0, lambda(dim - 1));
  out.deviation = eig.eigenvectors().col(dim - 1) * std::sqrt(top);
  for (Index i = 0; i < dim; ++i) {
    if (std::abs(out.deviation(i)) > 1e-12) {
      if (out.deviation(i) < 0.0) out.deviation *= -1.0;
      break;
    }
  }
  return out;
}

MaxVarianceDirection posterior_direction_of_max_variance(const InferenceModel& inf,
                                                         const Eigen::Ref<const RowVector<double>>& observation) {
  const char side = inf.direction == Direction::YtoX ? 'x' : 'y';
  const Index dim = inf.direction == Direction::YtoX ? inf.net_f.input_dim() : inf.net_g.input_dim();
  detail::require(dim >= 1, "max-variance direction: unknown target dimension");
  return posterior_direction_of_max_variance(infer(inf, observation), side, dim);
}

}  // namespace dcci
