#include "dcci/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dcci {

namespace {

constexpr std::uint64_t kStreamNetF = 10;
constexpr std::uint64_t kStreamNetG = 11;
constexpr std::uint64_t kStreamShuffle = 12;

struct AdamState {
  GradientSet<double> m;
  GradientSet<double> v;
  long step = 0;
};

void adam_step(FeatureNetwork<double>& net, const GradientSet<double>& g, AdamState& s, const TrainConfig& cfg) {
  if (s.m.weight.size() != net.layers().size()) {
    s.m = GradientSet<double>::zeros_like(net);
    s.v = GradientSet<double>::zeros_like(net);
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.step));
  const double lr = cfg.learning_rate;
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_eps);
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    update(net.layers()[l].weight, g.weight[l], s.m.weight[l], s.v.weight[l]);
    update(net.layers()[l].bias, g.bias[l], s.m.bias[l], s.v.bias[l]);
  }
}

void sgd_step(FeatureNetwork<double>& net, const GradientSet<double>& g, const TrainConfig& cfg) {
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    net.layers()[l].weight -= cfg.learning_rate * g.weight[l];
    net.layers()[l].bias -= cfg.learning_rate * g.bias[l];
  }
}

void require_finite_loss(double value, const char* what, Index epoch) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << what << " became non-finite (" << value << ") in epoch " << epoch;
    throw NumericalError(os.str());
  }
}

}  // namespace

void validate(const TrainConfig& cfg) {
  detail::require(cfg.k0 >= 1, "k0 must be at least 1");
  detail::require(cfg.batch_size >= 1, "batch size must be at least 1");
  detail::require(cfg.learning_rate > 0.0 && std::isfinite(cfg.learning_rate), "learning rate must be positive");
  detail::require(cfg.epochs >= 0, "epochs must be nonnegative");
  detail::require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0,
                  "ADAM betas must be in [0, 1)");
  detail::require(cfg.adam_eps > 0.0, "ADAM epsilon must be positive");
  detail::require(cfg.inverse_mode.value >= 0.0, "inverse tolerance/epsilon must be nonnegative");
}

std::vector<std::string> config_warnings(const TrainConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.batch_size < 10 * cfg.k0) {
    std::ostringstream os;
    os << "batch size " << cfg.batch_size << " is below 10 * k0 = " << 10 * cfg.k0
       << "; learned features may not hold up on larger batches";
    out.push_back(os.str());
  }
  return out;
}

TrainedModel init_model(const TrainConfig& cfg, Index dx, Index dy) {
  validate(cfg);
  detail::require(dx >= 1 && dy >= 1, "data dimensions must be positive");
  TrainedModel model;
  model.config = cfg;
  Rng rf = make_stream(cfg.seed, kStreamNetF);
  model.net_f = FeatureNetwork<double>::random(dx, cfg.hidden_x, cfg.k0, rf);
  if (cfg.y_identity) {
    model.net_g = FeatureNetwork<double>(dy);
  } else {
    Rng rg = make_stream(cfg.seed, kStreamNetG);
    model.net_g = FeatureNetwork<double>::random(dy, cfg.hidden_y, cfg.k0, rg);
  }
  return model;
}

MatrixXd features_x(const TrainedModel& model, const MatrixXd& x) { return forward(model.net_f, x); }
MatrixXd features_y(const TrainedModel& model, const MatrixXd& y) { return forward(model.net_g, y); }

double eval_loss(const TrainedModel& model, const PairDataset& data) {
  data.validate();
  detail::require(data.size() >= 1, "eval_loss: empty dataset");
  const CovarianceTriple t = covariances(features_x(model, data.x), features_y(model, data.y));
  return loss(t, model.config.k0, model.config.inverse_mode);
}

void train_more(TrainedModel& model, const PairDataset& train_set, const PairDataset& test_set,
                const TrainHooks& hooks) {
  const TrainConfig& cfg = model.config;
  validate(cfg);
  train_set.validate();
  test_set.validate();
  detail::require(train_set.size() >= 1, "training set is empty");
  detail::require(test_set.size() >= 1, "test set is empty");
  detail::require(train_set.dx() == model.net_f.input_dim() && train_set.dy() == model.net_g.input_dim(),
                  "training data dimensions do not match the networks");
  detail::require(test_set.dx() == train_set.dx() && test_set.dy() == train_set.dy(),
                  "test data dimensions do not match the training data");

  const Index n = train_set.size();
  // The shuffle stream is offset by the epochs already run so that resuming
  // continues the same sequence of permutations.
  Rng shuffle_rng = make_stream(cfg.seed, kStreamShuffle);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < model.history.size(); ++e) {
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);
  }

  AdamState state_f;
  AdamState state_g;
  const bool train_g = !model.net_g.is_identity();

  for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Index epoch_id = static_cast<Index>(model.history.size());
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);

    for (Index start = 0; start < n; start += cfg.batch_size) {
      const Index count = std::min(cfg.batch_size, n - start);
      if (count < cfg.k0) break;  // too few rows for a full-rank covariance
      const std::span<const Index> rows(perm.data() + start, static_cast<std::size_t>(count));
      if (hooks.on_batch) hooks.on_batch(rows);

      const MatrixXd xb = train_set.x(rows, Eigen::all);
      const MatrixXd yb = train_set.y(rows, Eigen::all);
      const MatrixXd F = forward(model.net_f, xb);
      const MatrixXd G = forward(model.net_g, yb);
      const LossGradient lg = loss_and_feature_grads(F, G, cfg.k0, cfg.inverse_mode);
      require_finite_loss(lg.loss, "batch loss", epoch_id);
      if (!lg.dF.allFinite() || !lg.dG.allFinite()) {
        throw NumericalError("feature gradient became non-finite in epoch " + std::to_string(epoch_id));
      }

      const GradientSet<double> gf = backprop(model.net_f, xb, lg.dF);
      if (cfg.optimizer == Optimizer::Adam) {
        adam_step(model.net_f, gf, state_f, cfg);
      } else {
        sgd_step(model.net_f, gf, cfg);
      }
      if (train_g) {
        const GradientSet<double> gg = backprop(model.net_g, yb, lg.dG);
        if (cfg.optimizer == Optimizer::Adam) {
          adam_step(model.net_g, gg, state_g, cfg);
        } else {
          sgd_step(model.net_g, gg, cfg);
        }
      }
    }

    EpochRecord rec{eval_loss(model, train_set), eval_loss(model, test_set)};
    require_finite_loss(rec.train_loss, "training loss", epoch_id);
    require_finite_loss(rec.test_loss, "test loss", epoch_id);
    model.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(epoch_id, rec);
  }
}

TrainedModel train(const PairDataset& train_set, const PairDataset& test_set, const TrainConfig& cfg,
                   const TrainHooks& hooks) {
  train_set.validate();
  TrainedModel model = init_model(cfg, train_set.dx(), train_set.dy());
  train_more(model, train_set, test_set, hooks);
  return model;
}

namespace {

void check_extract(const TrainedModel& model, const PairDataset& data, Index k_report, const char* who) {
  data.validate();
  const Index k0 = model.config.k0;
  if (data.size() < 10 * k0) {
    std::ostringstream os;
    os << who << ": need at least " << 10 * k0 << " samples, got " << data.size();
    throw ValidationError(os.str());
  }
  if (k_report < 1 || k_report > k0) {
    throw ValidationError(std::string(who) + ": k_report must be in [1, k0]");
  }
}

SpanDiagonalization leading(const SpanDiagonalization& full, Index k_report) {
  SpanDiagonalization out;
  out.relevances = full.relevances.head(k_report);
  out.singular_values = full.singular_values.head(k_report);
  out.x_map = full.x_map.leftCols(k_report);
  out.y_map = full.y_map.leftCols(k_report);
  return out;
}

}  // namespace

SpanDiagonalization extract_canonical(const TrainedModel& model, const PairDataset& data, Index k_report) {
  check_extract(model, data, k_report, "extract_canonical");
  const CovarianceTriple t = covariances(features_x(model, data.x), features_y(model, data.y));
  return leading(diagonalize(t, model.config.inverse_mode), k_report);
}

NontrivialCanonical nontrivial_canonical(const TrainedModel& model, const PairDataset& data, Index k_report) {
  check_extract(model, data, k_report, "nontrivial_canonical");
  MatrixXd F = features_x(model, data.x);
  MatrixXd G = features_y(model, data.y);
  NontrivialCanonical out;
  out.mean_f = F.colwise().mean();
  out.mean_g = G.colwise().mean();
  F.rowwise() -= out.mean_f;
  G.rowwise() -= out.mean_g;
  out.spectrum = leading(diagonalize(covariances(F, G), model.config.inverse_mode), k_report);
  return out;
}

MatrixXd nontrivial_x_values(const TrainedModel& model, const NontrivialCanonical& c, const MatrixXd& x) {
  MatrixXd F = features_x(model, x);
  F.rowwise() -= c.mean_f;
  return F * c.spectrum.x_map;
}

MatrixXd canonical_x_values(const TrainedModel& model, const SpanDiagonalization& spectrum, const MatrixXd& x) {
  return features_x(model, x) * spectrum.x_map;
}

}  // namespace dcci
