#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace caprl::adapters {

// Low-rank update to a frozen weight matrix, trained per capability and
// merged on demand as W' = W + B * A. B starts at zero (merge is the
// identity before training); A gets small random entries so B's gradient is
// nonzero from the first step.
struct LoraAdapter {
  std::string capability_id;
  int rank = 0;
  Eigen::MatrixXd B;  // d_out x rank
  Eigen::MatrixXd A;  // rank x d_in

  // Provenance / routing metadata.
  std::string skill_name;
  std::string skill_description;
  std::string train_env;
  std::uint64_t train_seed = 0;

  int d_out() const { return static_cast<int>(B.rows()); }
  int d_in() const { return static_cast<int>(A.cols()); }
  Eigen::MatrixXd delta() const { return B * A; }
  void validate() const;  // throws ProtocolError on inconsistent shapes
};

LoraAdapter init_lora(std::uint64_t seed, std::string capability_id, int d_out, int d_in,
                      int rank);

// W' = W + B*A. Throws ProtocolError on shape mismatch. The input is never
// modified.
Eigen::MatrixXd merge(const Eigen::MatrixXd& W, const LoraAdapter& adapter);

// JSON persistence (rank, dims, row-major factors, provenance fields).
void save_adapter(const std::filesystem::path& path, const LoraAdapter& adapter);
LoraAdapter load_adapter(const std::filesystem::path& path);

}  // namespace caprl::adapters
