#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "caprl/adapters/lora.hpp"
#include "caprl/common.hpp"
#include "caprl/env/env.hpp"

namespace caprl::grpo {

// Hashing-trick bag-of-tokens: lowercase alnum runs, each token counted into
// bucket fnv1a64(token) % dim, then l2-normalized so prompt length does not
// scale the logits. Empty text featurizes to the zero vector.
Eigen::VectorXd featurize(const std::string& text, int dim);

Eigen::VectorXd softmax(const Eigen::VectorXd& z);
Eigen::VectorXd log_softmax(const Eigen::VectorXd& z);

// The built-in trainable policy: a single linear map from prompt features to
// next-token logits over a small closed vocabulary,
//   p(a | h) = softmax((W + B*A) phi(h) / temperature).
// Episodes in the drill environments are one action long, so the
// per-trajectory likelihood ratio equals the per-token one and the policy
// gradient is exact and cheap. act() emits one vocab token per call.
class SoftmaxAdapterPolicy : public env::AgentPolicy {
 public:
  SoftmaxAdapterPolicy(std::vector<std::string> vocab, Eigen::MatrixXd weights);

  const std::vector<std::string>& vocab() const { return vocab_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  int feature_dim() const { return static_cast<int>(weights_.cols()); }
  std::optional<int> token_index(const std::string& token) const;

  Eigen::VectorXd logits(const std::string& prompt) const;
  // log p(token | prompt) at the given sampling temperature (> 0).
  double logprob(const std::string& prompt, int token_index, double temperature) const;

  // temperature <= 1e-12 degenerates to argmax (ties -> lowest index).
  std::string act(const std::string& prompt, const env::DecodeParams& decode,
                  Rng& rng) const override;

  // Raw logits restricted to the labels; nullopt unless every label is a
  // vocab token.
  std::optional<std::map<std::string, double>> label_scores(
      const std::string& prompt, const std::vector<std::string>& labels) const override;

  // Same vocab, weights W + B*A. The receiver is unchanged.
  SoftmaxAdapterPolicy with_merged(const adapters::LoraAdapter& adapter) const;

 private:
  std::vector<std::string> vocab_;
  Eigen::MatrixXd weights_;  // |vocab| x feature_dim
  std::map<std::string, int> index_;
};

// All-zero weights: uniform over the vocab at any temperature.
SoftmaxAdapterPolicy make_zero_policy(std::vector<std::string> vocab, int feature_dim);

// Echo prior: each vocab token gets weight `strength` on its own hash
// bucket, so the policy tends to repeat whichever vocab token appears in the
// prompt. The default puts a short say-exactly drill around 0.93 when echoing
// is the right move; prompts with no vocab token stay uniform.
SoftmaxAdapterPolicy make_copy_policy(std::vector<std::string> vocab, int feature_dim,
                                      double strength = 9.5);

}  // namespace caprl::grpo
