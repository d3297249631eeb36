#ifndef DCCI_NEURAL_HPP
#define DCCI_NEURAL_HPP

// Small dense feed-forward feature maps with hand-written backpropagation,
// and the gradient of the trace loss with respect to the feature batches.

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "dcci/canonical.hpp"
#include "dcci/types.hpp"

namespace dcci {

enum class Activation { Tanh, Identity };

inline const char* to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "identity"; }

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "identity") return Activation::Identity;
  throw ValidationError("unknown activation '" + s + "'");
}

/// One affine map followed by an activation. Rows of the batch are samples,
/// so the layer computes act(H W + b) with W stored as (in × out).
template <typename Scalar = double>
struct Layer {
  Matrix<Scalar> weight;
  RowVector<Scalar> bias;
  Activation activation = Activation::Tanh;

  Index in_dim() const { return weight.rows(); }
  Index out_dim() const { return weight.cols(); }
};

/// A network with no layers is the identity map on its input; that is how
/// fixed features (e.g. one-hot labels) are plugged into the trainer.
template <typename Scalar = double>
class FeatureNetwork {
 public:
  FeatureNetwork() = default;
  explicit FeatureNetwork(Index input_dim) : input_dim_(input_dim) {}

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  template <typename Rng>
  static FeatureNetwork random(Index input_dim, const std::vector<Index>& hidden, Index output_dim, Rng& rng,
                               Activation hidden_act = Activation::Tanh, Activation last_act = Activation::Tanh) {
    detail::require(input_dim >= 1 && output_dim >= 1, "FeatureNetwork: dimensions must be positive");
    FeatureNetwork net(input_dim);
    Index fan_in = input_dim;
    auto make = [&](Index fan_out, Activation act) {
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-bound, bound);
      Layer<Scalar> layer;
      layer.weight.resize(fan_in, fan_out);
      for (Index j = 0; j < fan_out; ++j)
        for (Index i = 0; i < fan_in; ++i) layer.weight(i, j) = static_cast<Scalar>(dist(rng));
      layer.bias = RowVector<Scalar>::Zero(fan_out);
      layer.activation = act;
      net.add_layer(std::move(layer));
      fan_in = fan_out;
    };
    for (Index h : hidden) {
      detail::require(h >= 1, "FeatureNetwork: hidden widths must be positive");
      make(h, hidden_act);
    }
    make(output_dim, last_act);
    return net;
  }

  void add_layer(Layer<Scalar> layer) {
    detail::require(layer.in_dim() == output_dim(), "FeatureNetwork: layer input does not match previous output");
    detail::require(layer.bias.size() == layer.out_dim(), "FeatureNetwork: bias length mismatch");
    layers_.push_back(std::move(layer));
  }

  Index input_dim() const { return input_dim_; }
  Index output_dim() const { return layers_.empty() ? input_dim_ : layers_.back().out_dim(); }
  bool is_identity() const { return layers_.empty(); }

  const std::vector<Layer<Scalar>>& layers() const { return layers_; }
  std::vector<Layer<Scalar>>& layers() { return layers_; }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

 private:
  Index input_dim_ = 0;
  std::vector<Layer<Scalar>> layers_;
};

/// d(loss)/d(parameters), laid out like the network's layers.
template <typename Scalar = double>
struct GradientSet {
  std::vector<Matrix<Scalar>> weight;
  std::vector<RowVector<Scalar>> bias;

  static GradientSet zeros_like(const FeatureNetwork<Scalar>& net) {
    GradientSet g;
    for (const auto& l : net.layers()) {
      g.weight.push_back(Matrix<Scalar>::Zero(l.weight.rows(), l.weight.cols()));
      g.bias.push_back(RowVector<Scalar>::Zero(l.bias.size()));
    }
    return g;
  }
};

namespace detail {

template <typename Scalar>
void apply_activation(Matrix<Scalar>& h, Activation act) {
  if (act == Activation::Tanh) h = h.array().tanh().matrix();
}

template <typename Scalar, typename Derived>
void check_batch(const FeatureNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& batch) {
  if (batch.cols() != net.input_dim()) {
    std::ostringstream os;
    os << "network expects " << net.input_dim() << " input columns, got " << batch.cols();
    throw ValidationError(os.str());
  }
  require(batch.allFinite(), "network input has non-finite entries");
}

}  // namespace detail

/// Applies the network to each row of the batch.
template <typename Scalar, typename Derived>
Matrix<Scalar> forward(const FeatureNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& batch) {
  detail::check_batch(net, batch);
  Matrix<Scalar> h = batch.template cast<Scalar>();
  for (const auto& layer : net.layers()) {
    Matrix<Scalar> z = h * layer.weight;
    z.rowwise() += layer.bias;
    detail::apply_activation(z, layer.activation);
    h = std::move(z);
  }
  return h;
}

/// Chain rule through the network: given d(loss)/d(outputs), returns
/// d(loss)/d(parameters).
template <typename Scalar, typename DerivedB, typename DerivedU>
GradientSet<Scalar> backprop(const FeatureNetwork<Scalar>& net, const Eigen::MatrixBase<DerivedB>& batch,
                             const Eigen::MatrixBase<DerivedU>& upstream) {
  detail::check_batch(net, batch);
  detail::require(upstream.rows() == batch.rows() && upstream.cols() == net.output_dim(),
                  "backprop: upstream gradient shape does not match the network output");
  const auto& layers = net.layers();
  const std::size_t depth = layers.size();

  std::vector<Matrix<Scalar>> acts;
  acts.reserve(depth + 1);
  acts.push_back(batch.template cast<Scalar>());
  for (const auto& layer : layers) {
    Matrix<Scalar> z = acts.back() * layer.weight;
    z.rowwise() += layer.bias;
    detail::apply_activation(z, layer.activation);
    acts.push_back(std::move(z));
  }

  GradientSet<Scalar> grads;
  grads.weight.resize(depth);
  grads.bias.resize(depth);
  Matrix<Scalar> delta = upstream.template cast<Scalar>();
  for (std::size_t l = depth; l-- > 0;) {
    if (layers[l].activation == Activation::Tanh) {
      delta.array() *= (Scalar(1) - acts[l + 1].array().square());
    }
    grads.weight[l] = acts[l].transpose() * delta;
    grads.bias[l] = delta.colwise().sum();
    if (l > 0) delta = delta * layers[l].weight.transpose();
  }
  return grads;
}

struct LossGradient {
  double loss = 0.0;
  MatrixXd dF;  // d(loss)/dF, same shape as F
  MatrixXd dG;
};

/// Loss k0 - Tr(K^+ A^T L^+ A) and its gradient with respect to both feature
/// batches, using the same stabilized inverses in both passes:
///   dF = -(2/N) (G L^+ A K^+ - F K^+ A^T L^+ A K^+)
///   dG = -(2/N) (F K^+ A^T L^+ - G L^+ A K^+ A^T L^+)
template <typename DerivedF, typename DerivedG>
LossGradient loss_and_feature_grads(const Eigen::MatrixBase<DerivedF>& F_in, const Eigen::MatrixBase<DerivedG>& G_in,
                                    Index k0, const InverseMode& mode = InverseMode::pseudo()) {
  const MatrixXd F = F_in.template cast<double>();
  const MatrixXd G = G_in.template cast<double>();
  const CovarianceTriple t = covariances(F, G);
  detail::require(k0 == t.kf(), "loss_and_feature_grads: k0 must equal the feature count");
  const MatrixXd kinv = stable_inverse(t.K, mode);
  const MatrixXd linv = stable_inverse(t.L, mode);

  const MatrixXd linv_a_kinv = linv * t.A * kinv;       // kg × kf
  const MatrixXd kinv_at_linv = linv_a_kinv.transpose();  // kf × kg
  const MatrixXd m_x = kinv_at_linv * t.A * kinv;         // K^+ A^T L^+ A K^+
  const MatrixXd m_y = linv_a_kinv * t.A.transpose() * linv;

  LossGradient out;
  out.loss = static_cast<double>(k0) - (kinv_at_linv * t.A).trace();
  const double scale = -2.0 / static_cast<double>(F.rows());
  out.dF = scale * (G * linv_a_kinv - F * m_x);
  out.dG = scale * (F * kinv_at_linv - G * m_y);
  return out;
}

}  // namespace dcci

#endif  // DCCI_NEURAL_HPP
