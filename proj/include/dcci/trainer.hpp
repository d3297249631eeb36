#ifndef DCCI_TRAINER_HPP
#define DCCI_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dcci/canonical.hpp"
#include "dcci/datasets.hpp"
#include "dcci/neural.hpp"

namespace dcci {

enum class Optimizer { Adam, GradientDescent };

struct TrainConfig {
  Index k0 = 3;
  Index batch_size = 512;
  double learning_rate = 1e-3;
  Index epochs = 100;
  std::uint64_t seed = 0;
  InverseMode inverse_mode = InverseMode::pseudo(1e-10);
  Optimizer optimizer = Optimizer::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::vector<Index> hidden_x = {64, 64};
  std::vector<Index> hidden_y = {64, 64};
  // Use the raw y columns as the g features (one-hot labels for classification).
  bool y_identity = false;
};

/// Throws ValidationError for unusable settings.
void validate(const TrainConfig& cfg);
/// Non-fatal advice, e.g. a batch smaller than ten times k0.
std::vector<std::string> config_warnings(const TrainConfig& cfg);

struct EpochRecord {
  double train_loss;
  double test_loss;
};

struct TrainedModel {
  FeatureNetwork<double> net_f;
  FeatureNetwork<double> net_g;
  TrainConfig config;
  std::vector<EpochRecord> history;
};

struct TrainHooks {
  // Called with the training-row indices of every mini-batch, before the update.
  std::function<void(std::span<const Index>)> on_batch;
  std::function<void(Index epoch, const EpochRecord&)> on_epoch;
};

/// Freshly initialized networks for the given data dimensions.
TrainedModel init_model(const TrainConfig& cfg, Index dx, Index dy);

/// Mini-batch optimization of both networks against the trace loss. The test
/// set is only used to report test_loss after each epoch.
TrainedModel train(const PairDataset& train_set, const PairDataset& test_set, const TrainConfig& cfg,
                   const TrainHooks& hooks = {});

/// Continues training an existing model for cfg.epochs more epochs.
void train_more(TrainedModel& model, const PairDataset& train_set, const PairDataset& test_set,
                const TrainHooks& hooks = {});

/// Features of both sides on a dataset.
MatrixXd features_x(const TrainedModel& model, const MatrixXd& x);
MatrixXd features_y(const TrainedModel& model, const MatrixXd& y);

/// Loss over the covariances of the whole dataset.
double eval_loss(const TrainedModel& model, const PairDataset& data);

/// Learned spectrum: diagonalizes K^+ A^T L^+ A on the dataset covariances
/// and keeps the k_report leading pairs.
SpanDiagonalization extract_canonical(const TrainedModel& model, const PairDataset& data, Index k_report);

/// Values of the canonical x-variables (columns) at the given points.
MatrixXd canonical_x_values(const TrainedModel& model, const SpanDiagonalization& spectrum, const MatrixXd& x);

/// Canonical pairs orthogonal to the constant functions: both feature sets
/// are centred on `data` first, so the trivial eta = 1 pair drops out.
struct NontrivialCanonical {
  SpanDiagonalization spectrum;
  RowVector<double> mean_f;
  RowVector<double> mean_g;
};
NontrivialCanonical nontrivial_canonical(const TrainedModel& model, const PairDataset& data, Index k_report);
MatrixXd nontrivial_x_values(const TrainedModel& model, const NontrivialCanonical& c, const MatrixXd& x);

}  // namespace dcci

#endif  // DCCI_TRAINER_HPP
