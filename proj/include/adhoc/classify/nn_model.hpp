#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "adhoc/corpus/topic.hpp"

namespace adhoc {

inline constexpr int kEmbeddingDim = 64;
inline constexpr int kHiddenDim = 64;

using TokenIds = std::vector<int>;

// Bag-of-embeddings classifier:
//   embed -> max over positions -> batch norm -> dense 64 + ReLU -> dense 20 + sigmoid.
// A text with no in-vocabulary token pools to the zero vector.
struct NnModel {
  Eigen::MatrixXd embedding;  // vocab x 64, one row per token
  Eigen::VectorXd bn_gamma;
  Eigen::VectorXd bn_beta;
  Eigen::VectorXd bn_running_mean;
  Eigen::VectorXd bn_running_var;
  Eigen::MatrixXd w1;  // 64 x 64 (out x in)
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // 20 x 64
  Eigen::VectorXd b2;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-3;

  // Embeddings uniform(-0.05, 0.05); dense weights He-uniform by fan-in;
  // biases and BN shift 0, BN scale 1, running variance 1.
  static NnModel initialize(std::size_t vocab_size, std::uint64_t seed);

  std::size_t vocab_size() const noexcept { return static_cast<std::size_t>(embedding.rows()); }

  // Inference: batch norm uses the running statistics.
  Eigen::VectorXd forward(std::span<const int> tokens) const;
  // One row of 20 probabilities per text.
  Eigen::MatrixXd predict(std::span<const TokenIds> texts) const;

  bool all_finite() const;

  nlohmann::json to_json() const;
  static NnModel from_json(const nlohmann::json& doc);
};

// Element-wise max of the token embeddings; zeros for an empty text. The
// argmax row per dimension is written to `argmax` when given (-1 if empty).
Eigen::VectorXd max_pool(const Eigen::MatrixXd& embedding, std::span<const int> tokens,
                         std::vector<int>* argmax = nullptr);

// Same shapes as the trainable tensors of NnModel.
struct NnGradients {
  Eigen::MatrixXd embedding;
  Eigen::VectorXd bn_gamma;
  Eigen::VectorXd bn_beta;
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;

  static NnGradients zeros_like(const NnModel& model);
};

struct BatchPass {
  double loss = 0.0;  // mean binary cross-entropy over batch x 20 outputs
  NnGradients grads;
  Eigen::VectorXd batch_mean;
  Eigen::VectorXd batch_var;
};

// Training-mode pass (batch statistics) with analytic gradients.
// targets: batch x 20 in {0, 1}.
BatchPass forward_backward(const NnModel& model, std::span<const TokenIds> batch,
                           const Eigen::MatrixXd& targets);

// Training-mode loss only.
double batch_loss(const NnModel& model, std::span<const TokenIds> batch,
                  const Eigen::MatrixXd& targets);

Eigen::MatrixXd label_matrix(std::span<const LabelSet> labels);

// Parameter views in a fixed order: embedding, bn_gamma, bn_beta, w1, b1, w2, b2.
std::vector<std::span<double>> parameter_views(NnModel& model);
std::vector<std::span<const double>> gradient_views(const NnGradients& grads);

}  // namespace adhoc
