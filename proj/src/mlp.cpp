#include "bclust/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "bclust/rng.hpp"

namespace bclust {

namespace {

using EMatrix = Eigen::MatrixXd;
using ERowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// |z| is capped so the result stays strictly inside (0, 1) even when the
// logit saturates; 1/(1+e^-37) already rounds to 1.0 in double precision.
double sigmoid(double z) {
  z = std::clamp(z, -36.0, 36.0);
  return 1.0 / (1.0 + std::exp(-z));
}

// Numerically safe -[y log p + (1-y) log(1-p)] evaluated from the logit.
double bce_from_logit(double z, double y) {
  const double softplus = std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0);
  return softplus - y * z;
}

}  // namespace

Scaler Scaler::fit(const Matrix& samples) {
  if (samples.rows() == 0) throw DataError("Scaler: no samples");
  Scaler s;
  s.mean.assign(samples.cols(), 0.0);
  s.inv_std.assign(samples.cols(), 1.0);
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    for (std::size_t j = 0; j < samples.cols(); ++j) s.mean[j] += samples(i, j);
  }
  for (double& m : s.mean) m /= samples.rows();
  std::vector<double> var(samples.cols(), 0.0);
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    for (std::size_t j = 0; j < samples.cols(); ++j) {
      const double d = samples(i, j) - s.mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < samples.cols(); ++j) {
    const double sd = std::sqrt(var[j] / samples.rows());
    s.inv_std[j] = 1.0 / std::max(sd, 1e-8);
  }
  return s;
}

void Scaler::apply(std::span<double> x) const {
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = (x[j] - mean[j]) * inv_std[j];
}

Matrix Scaler::transform(const Matrix& samples) const {
  Matrix out = samples;
  for (std::size_t i = 0; i < out.rows(); ++i) apply(out.row(i));
  return out;
}

Mlp::Mlp(std::vector<int> layer_sizes, std::uint64_t rng_seed) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2 || sizes_.back() != 1) {
    throw std::invalid_argument("Mlp: need [input, hidden..., 1] layer sizes");
  }
  for (int s : sizes_) {
    if (s <= 0) throw std::invalid_argument("Mlp: layer sizes must be positive");
  }
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    count += static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l] + sizes_[l + 1];
  }
  params_.assign(count, 0.0);

  // He-style fan-in scaling keeps rectifier activations from vanishing or
  // exploding at depth; biases start at zero.
  Rng rng(rng_seed);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int fan_in = sizes_[l];
    const int fan_out = sizes_[l + 1];
    const bool last = l + 2 == sizes_.size();
    const double scale = last ? std::sqrt(1.0 / fan_in) : std::sqrt(2.0 / fan_in);
    for (int i = 0; i < fan_out * fan_in; ++i) params_[offset + i] = scale * rng.normal();
    offset += static_cast<std::size_t>(fan_out) * fan_in + fan_out;
  }
}

double Mlp::predict(std::span<const double> x) const {
  std::vector<double> act(x.begin(), x.end()), next;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const bool last = l + 2 == sizes_.size();
    next.assign(out, 0.0);
    for (int i = 0; i < out; ++i) {
      double z = params_[offset + static_cast<std::size_t>(out) * in + i];  // bias
      const double* w = &params_[offset + static_cast<std::size_t>(i) * in];
      for (int j = 0; j < in; ++j) z += w[j] * act[j];
      next[i] = last ? z : std::max(z, 0.0);
    }
    act = next;
    offset += static_cast<std::size_t>(out) * in + out;
  }
  return sigmoid(act[0]);
}

void Mlp::predict_batch(const Matrix& inputs, std::span<double> out) const {
  const auto n = static_cast<Eigen::Index>(inputs.rows());
  EMatrix act = ERowMajorMap(inputs.data().data(), n, static_cast<Eigen::Index>(inputs.cols()));
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int in = sizes_[l];
    const int width = sizes_[l + 1];
    ERowMajorMap w(&params_[offset], width, in);
    Eigen::Map<const Eigen::VectorXd> b(&params_[offset + static_cast<std::size_t>(width) * in],
                                        width);
    EMatrix z = act * w.transpose();
    z.rowwise() += b.transpose();
    if (l + 2 < sizes_.size()) z = z.cwiseMax(0.0);
    act = std::move(z);
    offset += static_cast<std::size_t>(width) * in + width;
  }
  for (Eigen::Index i = 0; i < n; ++i) out[i] = sigmoid(act(i, 0));
}

double Mlp::loss(const Matrix& inputs, std::span<const double> targets,
                 std::vector<double>* grad) const {
  const auto n = static_cast<Eigen::Index>(inputs.rows());
  if (targets.size() != inputs.rows() || n == 0) {
    throw std::invalid_argument("Mlp::loss: target count must match row count");
  }
  const std::size_t n_layers = sizes_.size() - 1;

  // Forward pass, keeping pre-activations for the backward sweep.
  std::vector<EMatrix> acts(n_layers + 1);
  std::vector<EMatrix> zs(n_layers);
  acts[0] = ERowMajorMap(inputs.data().data(), n, static_cast<Eigen::Index>(inputs.cols()));
  std::size_t offset = 0;
  std::vector<std::size_t> offsets(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    offsets[l] = offset;
    const int in = sizes_[l];
    const int width = sizes_[l + 1];
    ERowMajorMap w(&params_[offset], width, in);
    Eigen::Map<const Eigen::VectorXd> b(&params_[offset + static_cast<std::size_t>(width) * in],
                                        width);
    zs[l] = acts[l] * w.transpose();
    zs[l].rowwise() += b.transpose();
    acts[l + 1] = l + 1 < n_layers ? zs[l].cwiseMax(0.0) : zs[l];
    offset += static_cast<std::size_t>(width) * in + width;
  }

  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += bce_from_logit(zs.back()(i, 0), targets[i]);
  const double loss_value = total / n;
  if (!grad) return loss_value;

  grad->assign(params_.size(), 0.0);
  // d(loss)/d(logit) of mean BCE through the sigmoid is (p - y)/n.
  EMatrix delta(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    delta(i, 0) = (sigmoid(zs.back()(i, 0)) - targets[i]) / n;
  }
  for (std::size_t l = n_layers; l-- > 0;) {
    const int in = sizes_[l];
    const int width = sizes_[l + 1];
    using ERowMajorMutable =
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    ERowMajorMutable gw(&(*grad)[offsets[l]], width, in);
    Eigen::Map<Eigen::VectorXd> gb(&(*grad)[offsets[l] + static_cast<std::size_t>(width) * in],
                                   width);
    gw = delta.transpose() * acts[l];
    gb = delta.colwise().sum().transpose();
    if (l > 0) {
      ERowMajorMap w(&params_[offsets[l]], width, in);
      EMatrix prev = delta * w;
      // rectifier gate
      prev = (zs[l - 1].array() > 0.0).select(prev, 0.0);
      delta = std::move(prev);
    }
  }
  return loss_value;
}

}  // namespace bclust
