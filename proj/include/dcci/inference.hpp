#ifndef DCCI_INFERENCE_HPP
#define DCCI_INFERENCE_HPP

// Conditional expectations from learned features. For a target Theta on the
// inferred side, the training averages Theta_j = E[Theta f_j] plus the frozen
// K, L, A are enough to evaluate E[Theta | observation] as a linear function
// of the observation's features.

#include <optional>
#include <string>
#include <vector>

#include "dcci/canonical.hpp"
#include "dcci/datasets.hpp"
#include "dcci/trainer.hpp"

namespace dcci {

/// A named function of one side's raw coordinates. Names follow a small
/// grammar: "1", "<s><i>", "<s><i>*<s><j>" (also "<s><i>^2"), with s = x or y.
struct Target {
  std::string name;  // canonical form, products ordered i <= j
  char side = 'x';
  int i = -1;        // -1 for the constant
  int j = -1;        // -1 unless a product

  double operator()(const Eigen::Ref<const RowVector<double>>& point) const;
};

Target parse_target(const std::string& text);
std::vector<Target> parse_targets(const std::string& comma_separated);

/// Coordinates plus all pairwise products of one side: what the
/// max-variance direction needs.
std::vector<std::string> moment_target_names(char side, Index dim);

struct InferenceModel {
  CovarianceTriple triple;
  MatrixXd theta;  // m targets × k features of the inferred side
  Direction direction = Direction::YtoX;
  std::vector<Target> targets;
  FeatureNetwork<double> net_f;
  FeatureNetwork<double> net_g;
  InverseMode inverse_mode;
  // Maps conditioning features to target-side feature components:
  // YtoX: N^* L^+ = K^+ A^T L^+,  XtoY: N K^+ = L^+ A K^+.
  MatrixXd transfer;

  Index target_count() const { return theta.rows(); }
  Index target_index(const std::string& name) const;  // -1 when absent
};

/// Builds the transfer matrix from a triple and Theta_j statistics. The
/// product is formed as (N^*) L^+ and cross-checked against K^+ (A^T L^+).
InferenceModel make_inference(CovarianceTriple triple, MatrixXd theta, Direction direction,
                              std::vector<Target> targets, const InverseMode& mode = InverseMode::pseudo());

/// Theta_j = (1/N) sum_n Theta(x_n) f_j(x_n) and K, L, A over the full
/// training set. For YtoX the targets live on x; for XtoY on y.
InferenceModel fit_statistics(const TrainedModel& model, const PairDataset& training, std::vector<Target> targets,
                              Direction direction);

struct Posterior {
  std::vector<std::string> names;
  VectorXd expectations;
  // Standard deviation of target t when "t*t" was also registered.
  std::vector<std::optional<double>> stddev;
  // True where the estimated variance was negative and clamped to zero.
  std::vector<bool> clamped;
};

/// Posterior from the conditioning side's feature vector.
Posterior infer_features(const InferenceModel& inf, const Eigen::Ref<const VectorXd>& conditioning_features);

/// Posterior for one raw observation of the conditioning side.
Posterior infer(const InferenceModel& inf, const Eigen::Ref<const RowVector<double>>& observation);

/// Expectations for every row of a batch of observations (rows × targets).
MatrixXd infer_batch(const InferenceModel& inf, const MatrixXd& observations);

struct Classification {
  Index label;
  VectorXd scores;
};

/// Registers one-hot coordinates y0..y{k-1} as targets and fits XtoY statistics.
InferenceModel fit_classifier(const TrainedModel& model, const PairDataset& training);

/// Arg-max of the inferred label expectation; ties go to the lowest index.
Classification classify(const InferenceModel& inf, const Eigen::Ref<const RowVector<double>>& x);

struct MaxVarianceDirection {
  VectorXd mean;
  VectorXd deviation;  // top eigenvector scaled by sqrt(top eigenvalue)
  bool clamped = false;
};

/// Needs every coordinate and every pairwise product of the inferred side
/// registered as targets.
MaxVarianceDirection posterior_direction_of_max_variance(const InferenceModel& inf,
                                                         const Eigen::Ref<const RowVector<double>>& observation);
MaxVarianceDirection posterior_direction_of_max_variance(const Posterior& posterior, char side, Index dim);

}  // namespace dcci

#endif  // DCCI_INFERENCE_HPP
