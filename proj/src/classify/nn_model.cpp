#include "adhoc/classify/nn_model.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "adhoc/core/error.hpp"
#include "adhoc/core/rng.hpp"

namespace adhoc {

using nlohmann::json;

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Stable BCE on a logit.
double bce_with_logit(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

void check_tokens(const NnModel& model, std::span<const int> tokens) {
  for (int t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= model.vocab_size()) {
      throw ValidationError("token id " + std::to_string(t) + " outside the vocabulary");
    }
  }
}

template <typename Derived>
json matrix_json(const Eigen::MatrixBase<Derived>& m) {
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>>(data.data(), m.rows(),
                                                                    m.cols()) = m;
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& doc) {
  const auto rows = doc.at("rows").get<Eigen::Index>();
  const auto cols = doc.at("cols").get<Eigen::Index>();
  const auto data = doc.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ValidationError("model tensor has inconsistent shape");
  }
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

struct Activations {
  Eigen::MatrixXd pooled;  // B x 64
  std::vector<std::vector<int>> argmax;
  Eigen::VectorXd mean, var;
  Eigen::MatrixXd normalized;  // x-hat
  Eigen::MatrixXd bn_out;
  Eigen::MatrixXd hidden_pre;
  Eigen::MatrixXd hidden;
  Eigen::MatrixXd logits;  // B x 20
};

Activations forward_train(const NnModel& m, std::span<const TokenIds> batch) {
  if (batch.empty()) throw ValidationError("empty training batch");
  const auto b = static_cast<Eigen::Index>(batch.size());
  Activations a;
  a.pooled.resize(b, kEmbeddingDim);
  a.argmax.resize(batch.size());
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& tokens = batch[static_cast<std::size_t>(i)];
    check_tokens(m, tokens);
    a.pooled.row(i) = max_pool(m.embedding, tokens, &a.argmax[static_cast<std::size_t>(i)]);
  }
  a.mean = a.pooled.colwise().mean().transpose();
  const Eigen::MatrixXd centered = a.pooled.rowwise() - a.mean.transpose();
  a.var = centered.array().square().colwise().mean().transpose();
  const Eigen::RowVectorXd inv_std = (a.var.array() + m.bn_epsilon).rsqrt().matrix().transpose();
  a.normalized = centered.array().rowwise() * inv_std.array();
  a.bn_out = (a.normalized.array().rowwise() * m.bn_gamma.transpose().array()).rowwise() +
             m.bn_beta.transpose().array();
  a.hidden_pre = (a.bn_out * m.w1.transpose()).rowwise() + m.b1.transpose();
  a.hidden = a.hidden_pre.cwiseMax(0.0);
  a.logits = (a.hidden * m.w2.transpose()).rowwise() + m.b2.transpose();
  return a;
}

double mean_bce(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& targets) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (Eigen::Index j = 0; j < logits.cols(); ++j) total += bce_with_logit(logits(i, j), targets(i, j));
  }
  return total / static_cast<double>(logits.size());
}

void check_targets(std::span<const TokenIds> batch, const Eigen::MatrixXd& targets) {
  if (targets.rows() != static_cast<Eigen::Index>(batch.size()) || targets.cols() != kNumTopics) {
    throw ValidationError("target matrix must be batch x 20");
  }
}

}  // namespace

Eigen::VectorXd max_pool(const Eigen::MatrixXd& embedding, std::span<const int> tokens,
                         std::vector<int>* argmax) {
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(embedding.cols());
  if (argmax) argmax->assign(static_cast<std::size_t>(embedding.cols()), -1);
  if (tokens.empty()) return pooled;
  pooled.setConstant(-std::numeric_limits<double>::infinity());
  for (int t : tokens) {
    for (Eigen::Index d = 0; d < embedding.cols(); ++d) {
      if (embedding(t, d) > pooled(d)) {
        pooled(d) = embedding(t, d);
        if (argmax) (*argmax)[static_cast<std::size_t>(d)] = t;
      }
    }
  }
  return pooled;
}

NnModel NnModel::initialize(std::size_t vocab_size, std::uint64_t seed) {
  if (vocab_size == 0) throw ValidationError("vocabulary is empty");
  Rng rng(derive_seed(seed, 0x1417));
  NnModel m;
  const auto v = static_cast<Eigen::Index>(vocab_size);
  m.embedding.resize(v, kEmbeddingDim);
  for (Eigen::Index i = 0; i < m.embedding.size(); ++i) m.embedding.data()[i] = rng.uniform(-0.05, 0.05);
  m.bn_gamma = Eigen::VectorXd::Ones(kEmbeddingDim);
  m.bn_beta = Eigen::VectorXd::Zero(kEmbeddingDim);
  m.bn_running_mean = Eigen::VectorXd::Zero(kEmbeddingDim);
  m.bn_running_var = Eigen::VectorXd::Ones(kEmbeddingDim);
  auto he_uniform = [&](Eigen::Index rows, Eigen::Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(cols));
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
    return w;
  };
  m.w1 = he_uniform(kHiddenDim, kEmbeddingDim);
  m.b1 = Eigen::VectorXd::Zero(kHiddenDim);
  m.w2 = he_uniform(kNumTopics, kHiddenDim);
  m.b2 = Eigen::VectorXd::Zero(kNumTopics);
  return m;
}

Eigen::VectorXd NnModel::forward(std::span<const int> tokens) const {
  check_tokens(*this, tokens);
  const Eigen::VectorXd pooled = max_pool(embedding, tokens);
  const Eigen::VectorXd bn =
      bn_gamma.array() * (pooled - bn_running_mean).array() /
          (bn_running_var.array() + bn_epsilon).sqrt() +
      bn_beta.array();
  const Eigen::VectorXd hidden = (w1 * bn + b1).cwiseMax(0.0);
  const Eigen::VectorXd logits = w2 * hidden + b2;
  return logits.unaryExpr([](double z) { return sigmoid(z); });
}

Eigen::MatrixXd NnModel::predict(std::span<const TokenIds> texts) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(texts.size()), kNumTopics);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = forward(texts[i]).transpose();
  }
  return out;
}

bool NnModel::all_finite() const {
  return embedding.allFinite() && bn_gamma.allFinite() && bn_beta.allFinite() &&
         bn_running_mean.allFinite() && bn_running_var.allFinite() && w1.allFinite() &&
         b1.allFinite() && w2.allFinite() && b2.allFinite();
}

json NnModel::to_json() const {
  return {{"embedding", matrix_json(embedding)},
          {"bn_gamma", matrix_json(bn_gamma)},
          {"bn_beta", matrix_json(bn_beta)},
          {"bn_running_mean", matrix_json(bn_running_mean)},
          {"bn_running_var", matrix_json(bn_running_var)},
          {"w1", matrix_json(w1)},
          {"b1", matrix_json(b1)},
          {"w2", matrix_json(w2)},
          {"b2", matrix_json(b2)},
          {"bn_momentum", bn_momentum},
          {"bn_epsilon", bn_epsilon}};
}

NnModel NnModel::from_json(const json& doc) {
  NnModel m;
  try {
    m.embedding = matrix_from_json(doc.at("embedding"));
    m.bn_gamma = matrix_from_json(doc.at("bn_gamma"));
    m.bn_beta = matrix_from_json(doc.at("bn_beta"));
    m.bn_running_mean = matrix_from_json(doc.at("bn_running_mean"));
    m.bn_running_var = matrix_from_json(doc.at("bn_running_var"));
    m.w1 = matrix_from_json(doc.at("w1"));
    m.b1 = matrix_from_json(doc.at("b1"));
    m.w2 = matrix_from_json(doc.at("w2"));
    m.b2 = matrix_from_json(doc.at("b2"));
    m.bn_momentum = doc.at("bn_momentum").get<double>();
    m.bn_epsilon = doc.at("bn_epsilon").get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model: ") + e.what());
  }
  if (m.embedding.cols() != kEmbeddingDim || m.w1.rows() != kHiddenDim ||
      m.w1.cols() != kEmbeddingDim || m.w2.rows() != kNumTopics || m.w2.cols() != kHiddenDim) {
    throw ValidationError("model tensors have unexpected shapes");
  }
  return m;
}

NnGradients NnGradients::zeros_like(const NnModel& m) {
  NnGradients g;
  g.embedding = Eigen::MatrixXd::Zero(m.embedding.rows(), m.embedding.cols());
  g.bn_gamma = Eigen::VectorXd::Zero(m.bn_gamma.size());
  g.bn_beta = Eigen::VectorXd::Zero(m.bn_beta.size());
  g.w1 = Eigen::MatrixXd::Zero(m.w1.rows(), m.w1.cols());
  g.b1 = Eigen::VectorXd::Zero(m.b1.size());
  g.w2 = Eigen::MatrixXd::Zero(m.w2.rows(), m.w2.cols());
  g.b2 = Eigen::VectorXd::Zero(m.b2.size());
  return g;
}

BatchPass forward_backward(const NnModel& m, std::span<const TokenIds> batch,
                           const Eigen::MatrixXd& targets) {
  check_targets(batch, targets);
  const Activations a = forward_train(m, batch);
  const auto b = static_cast<double>(batch.size());

  BatchPass pass;
  pass.loss = mean_bce(a.logits, targets);
  pass.batch_mean = a.mean;
  pass.batch_var = a.var;
  NnGradients& g = pass.grads;
  g = NnGradients::zeros_like(m);

  const Eigen::MatrixXd probs = a.logits.unaryExpr([](double z) { return sigmoid(z); });
  const Eigen::MatrixXd d_logits = (probs - targets) / static_cast<double>(a.logits.size());

  g.w2 = d_logits.transpose() * a.hidden;
  g.b2 = d_logits.colwise().sum().transpose();
  Eigen::MatrixXd d_hidden = d_logits * m.w2;
  d_hidden = d_hidden.array() * (a.hidden_pre.array() > 0.0).cast<double>();

  g.w1 = d_hidden.transpose() * a.bn_out;
  g.b1 = d_hidden.colwise().sum().transpose();
  const Eigen::MatrixXd d_bn = d_hidden * m.w1;

  g.bn_gamma = (d_bn.array() * a.normalized.array()).colwise().sum().transpose();
  g.bn_beta = d_bn.colwise().sum().transpose();

  // d pooled = gamma / (B sigma) * (B dxhat - sum dxhat - xhat * sum(dxhat xhat))
  const Eigen::ArrayXXd d_xhat = d_bn.array().rowwise() * m.bn_gamma.transpose().array();
  const Eigen::RowVectorXd sum_dx = d_xhat.colwise().sum().matrix();
  const Eigen::RowVectorXd sum_dx_xhat = (d_xhat * a.normalized.array()).colwise().sum().matrix();
  const Eigen::RowVectorXd inv_std = (a.var.array() + m.bn_epsilon).rsqrt().matrix().transpose();
  Eigen::ArrayXXd d_pooled = (b * d_xhat).rowwise() - sum_dx.array();
  d_pooled -= a.normalized.array().rowwise() * sum_dx_xhat.array();
  d_pooled = d_pooled.rowwise() * (inv_std.array() / b);

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& am = a.argmax[i];
    for (int d = 0; d < kEmbeddingDim; ++d) {
      const int tok = am[static_cast<std::size_t>(d)];
      if (tok >= 0) g.embedding(tok, d) += d_pooled(static_cast<Eigen::Index>(i), d);
    }
  }
  return pass;
}

double batch_loss(const NnModel& m, std::span<const TokenIds> batch,
                  const Eigen::MatrixXd& targets) {
  check_targets(batch, targets);
  return mean_bce(forward_train(m, batch).logits, targets);
}

Eigen::MatrixXd label_matrix(std::span<const LabelSet> labels) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), kNumTopics);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (TopicId t : labels[i].topics()) y(static_cast<Eigen::Index>(i), t) = 1.0;
  }
  return y;
}

namespace {

template <typename M>
std::span<double> view(M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename M>
std::span<const double> cview(const M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

std::vector<std::span<double>> parameter_views(NnModel& m) {
  return {view(m.embedding), view(m.bn_gamma), view(m.bn_beta), view(m.w1),
          view(m.b1),        view(m.w2),       view(m.b2)};
}

std::vector<std::span<const double>> gradient_views(const NnGradients& g) {
  return {cview(g.embedding), cview(g.bn_gamma), cview(g.bn_beta), cview(g.w1),
          cview(g.b1),        cview(g.w2),       cview(g.b2)};
}

}  // namespace adhoc
