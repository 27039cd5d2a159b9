#include "caprl/adapters/lora.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "caprl/common.hpp"

namespace caprl::adapters {

using nlohmann::json;

void LoraAdapter::validate() const {
  if (rank <= 0) throw ProtocolError("adapter rank must be positive");
  if (B.cols() != rank || A.rows() != rank)
    throw ProtocolError("adapter factor shapes disagree with rank");
  if (B.rows() <= 0 || A.cols() <= 0) throw ProtocolError("adapter has empty dimension");
  if (!B.allFinite() || !A.allFinite()) throw ProtocolError("adapter has non-finite entries");
}

LoraAdapter init_lora(std::uint64_t seed, std::string capability_id, int d_out, int d_in,
                      int rank) {
  if (d_out <= 0 || d_in <= 0 || rank <= 0) throw ProtocolError("init_lora: bad dimensions");
  LoraAdapter ad;
  ad.capability_id = std::move(capability_id);
  ad.rank = rank;
  ad.B = Eigen::MatrixXd::Zero(d_out, rank);
  ad.A.resize(rank, d_in);
  // A ~ N(0, 1/sqrt(d_in)); B = 0 keeps the merged weights at W until the
  // first update, while A != 0 means dL/dB = g * A^T is already nonzero.
  Rng rng(derive_seed("lora_init", {seed, fnv1a64(ad.capability_id)}));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_in));
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < d_in; ++j) ad.A(i, j) = rng.normal() * scale;
  return ad;
}

Eigen::MatrixXd merge(const Eigen::MatrixXd& W, const LoraAdapter& adapter) {
  adapter.validate();
  if (W.rows() != adapter.B.rows() || W.cols() != adapter.A.cols())
    throw ProtocolError("merge: base matrix is " + std::to_string(W.rows()) + "x" +
                        std::to_string(W.cols()) + " but adapter expects " +
                        std::to_string(adapter.B.rows()) + "x" + std::to_string(adapter.A.cols()));
  return W + adapter.B * adapter.A;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, int want_rows, int want_cols,
                                 const char* name) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != want_rows)
    throw ProtocolError(std::string("adapter file: bad row count for ") + name);
  Eigen::MatrixXd m(want_rows, want_cols);
  for (int i = 0; i < want_rows; ++i) {
    const json& row = rows.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != want_cols)
      throw ProtocolError(std::string("adapter file: bad column count for ") + name);
    for (int j = 0; j < want_cols; ++j) m(i, j) = row.at(j).get<double>();
  }
  return m;
}

}  // namespace

void save_adapter(const std::filesystem::path& path, const LoraAdapter& adapter) {
  adapter.validate();
  json j;
  j["capability_id"] = adapter.capability_id;
  j["rank"] = adapter.rank;
  j["d_out"] = adapter.d_out();
  j["d_in"] = adapter.d_in();
  j["B"] = matrix_to_json(adapter.B);
  j["A"] = matrix_to_json(adapter.A);
  j["skill_name"] = adapter.skill_name;
  j["skill_description"] = adapter.skill_description;
  j["train_env"] = adapter.train_env;
  j["train_seed"] = adapter.train_seed;
  std::ofstream out(path);
  if (!out) throw ProtocolError("cannot write adapter file: " + path.string());
  out << j.dump(2) << "\n";
}

LoraAdapter load_adapter(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProtocolError("cannot read adapter file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ProtocolError("adapter file is not valid JSON: " + std::string(e.what()));
  }
  LoraAdapter ad;
  try {
    ad.capability_id = j.at("capability_id").get<std::string>();
    ad.rank = j.at("rank").get<int>();
    const int d_out = j.at("d_out").get<int>();
    const int d_in = j.at("d_in").get<int>();
    ad.B = matrix_from_json(j.at("B"), d_out, ad.rank, "B");
    ad.A = matrix_from_json(j.at("A"), ad.rank, d_in, "A");
    ad.skill_name = j.value("skill_name", std::string{});
    ad.skill_description = j.value("skill_description", std::string{});
    ad.train_env = j.value("train_env", std::string{});
    ad.train_seed = j.value("train_seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ProtocolError("adapter file missing field: " + std::string(e.what()));
  }
  ad.validate();
  return ad;
}

}  // namespace caprl::adapters
