#include "caprl/grpo/policy.hpp"

#include <cmath>

namespace caprl::grpo {

Eigen::VectorXd featurize(const std::string& text, int dim) {
  if (dim <= 0) throw ProtocolError("featurize: dim must be positive");
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(dim);
  for (const std::string& tok : tokenize(text))
    phi[static_cast<Eigen::Index>(fnv1a64(tok) % static_cast<std::uint64_t>(dim))] += 1.0;
  const double norm = phi.norm();
  if (norm > 0.0) phi /= norm;
  return phi;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  Eigen::VectorXd p = (z.array() - z.maxCoeff()).exp();
  return p / p.sum();
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& z) {
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  return z.array() - lse;
}

SoftmaxAdapterPolicy::SoftmaxAdapterPolicy(std::vector<std::string> vocab,
                                           Eigen::MatrixXd weights)
    : vocab_(std::move(vocab)), weights_(std::move(weights)) {
  if (vocab_.empty()) throw ProtocolError("policy vocab is empty");
  if (weights_.rows() != static_cast<Eigen::Index>(vocab_.size()))
    throw ProtocolError("policy weights rows != vocab size");
  if (weights_.cols() <= 0) throw ProtocolError("policy feature dim must be positive");
  for (int i = 0; i < static_cast<int>(vocab_.size()); ++i) {
    if (!index_.emplace(vocab_[i], i).second)
      throw ProtocolError("duplicate vocab token: " + vocab_[i]);
  }
}

std::optional<int> SoftmaxAdapterPolicy::token_index(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd SoftmaxAdapterPolicy::logits(const std::string& prompt) const {
  return weights_ * featurize(prompt, feature_dim());
}

double SoftmaxAdapterPolicy::logprob(const std::string& prompt, int token_index,
                                     double temperature) const {
  if (temperature <= 0.0) throw ProtocolError("logprob: temperature must be > 0");
  if (token_index < 0 || token_index >= static_cast<int>(vocab_.size()))
    throw ProtocolError("logprob: token index out of range");
  return log_softmax(logits(prompt) / temperature)[token_index];
}

std::string SoftmaxAdapterPolicy::act(const std::string& prompt,
                                      const env::DecodeParams& decode, Rng& rng) const {
  const Eigen::VectorXd z = logits(prompt);
  if (decode.temperature <= 1e-12) {
    Eigen::Index best = 0;
    z.maxCoeff(&best);  // first maximal index
    return vocab_[static_cast<std::size_t>(best)];
  }
  const Eigen::VectorXd p = softmax(z / decode.temperature);
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return vocab_[static_cast<std::size_t>(i)];
  }
  return vocab_.back();  // u landed in rounding slack
}

std::optional<std::map<std::string, double>> SoftmaxAdapterPolicy::label_scores(
    const std::string& prompt, const std::vector<std::string>& labels) const {
  std::map<std::string, double> out;
  const Eigen::VectorXd z = logits(prompt);
  for (const std::string& label : labels) {
    auto idx = token_index(label);
    if (!idx) return std::nullopt;
    out[label] = z[*idx];
  }
  return out;
}

SoftmaxAdapterPolicy SoftmaxAdapterPolicy::with_merged(
    const adapters::LoraAdapter& adapter) const {
  return SoftmaxAdapterPolicy(vocab_, adapters::merge(weights_, adapter));
}

SoftmaxAdapterPolicy make_zero_policy(std::vector<std::string> vocab, int feature_dim) {
  Eigen::MatrixXd w =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vocab.size()), feature_dim);
  return SoftmaxAdapterPolicy(std::move(vocab), std::move(w));
}

SoftmaxAdapterPolicy make_copy_policy(std::vector<std::string> vocab, int feature_dim,
                                      double strength) {
  Eigen::MatrixXd w =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vocab.size()), feature_dim);
  for (int v = 0; v < static_cast<int>(vocab.size()); ++v) {
    const auto bucket =
        static_cast<Eigen::Index>(fnv1a64(vocab[v]) % static_cast<std::uint64_t>(feature_dim));
    w(v, bucket) += strength;
  }
  return SoftmaxAdapterPolicy(std::move(vocab), std::move(w));
}

}  // namespace caprl::grpo
