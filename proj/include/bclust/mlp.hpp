#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bclust/common.hpp"

namespace bclust {

/// Per-dimension affine input normalization (x - mean) / std, with std
/// floored to keep constant dimensions harmless.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> inv_std;

  static Scaler fit(const Matrix& samples);
  void apply(std::span<double> x) const;
  Matrix transform(const Matrix& samples) const;
};

/// Fully connected feedforward binary classifier: rectifier hidden layers,
/// logistic sigmoid output. Parameters live in one flat vector (per layer:
/// row-major weight matrix, then bias) so optimizers and finite-difference
/// checks can treat the model as a plain function of its parameters.
class Mlp {
 public:
  Mlp() = default;
  /// layer_sizes includes the input width and ends with the output width 1.
  Mlp(std::vector<int> layer_sizes, std::uint64_t rng_seed);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// P(positive) for one input; strictly inside (0, 1).
  double predict(std::span<const double> x) const;

  /// P(positive) for every row of inputs.
  void predict_batch(const Matrix& inputs, std::span<double> out) const;

  /// Mean binary cross-entropy of the batch (targets in {0,1}); when grad is
  /// non-null it receives d(loss)/d(params) in the flat layout.
  double loss(const Matrix& inputs, std::span<const double> targets,
              std::vector<double>* grad) const;

 private:
  std::vector<int> sizes_;
  std::vector<double> params_;
};

}  // namespace bclust
