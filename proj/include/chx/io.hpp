#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chx/basis.hpp"
#include "chx/channel.hpp"
#include "chx/error.hpp"
#include "chx/memory.hpp"
#include "chx/root.hpp"

// JSON encodings. Matrices are flat row-major lists of [re, im] pairs;
// doubles are written in shortest round-trip form.

namespace chx::io {

using json = nlohmann::json;

inline json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back({m(i, j).real(), m(i, j).imag()});
  return out;
}

inline Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows * cols)
    throw Error(ErrorCode::parse_error, "matrix must be a list of " + std::to_string(rows * cols) + " entries");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) {
      const json& e = j[static_cast<std::size_t>(i * cols + k)];
      if (e.is_number()) {
        m(i, k) = e.get<double>();
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(i, k) = Complex(e[0].get<double>(), e[1].get<double>());
      } else {
        throw Error(ErrorCode::parse_error, "matrix entries must be numbers or [re, im] pairs");
      }
    }
  return m;
}

inline Matrix square_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::parse_error, "matrix must be a list");
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(j.size()))));
  if (n * n != static_cast<Eigen::Index>(j.size())) throw Error(ErrorCode::parse_error, "matrix is not square");
  return matrix_from_json(j, n, n);
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::parse_error, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("bad field '") + key + "': " + e.what());
  }
}

inline Picture picture_from_string(const std::string& s) {
  if (s == "heisenberg") return Picture::heisenberg;
  if (s == "schrodinger") return Picture::schrodinger;
  throw Error(ErrorCode::parse_error, "unknown picture '" + s + "'");
}

inline BasisKind basis_kind_from_string(const std::string& s) {
  if (s == "gellmann") return BasisKind::gellmann;
  if (s == "matrix-unit") return BasisKind::matrix_unit;
  if (s == "custom") return BasisKind::custom;
  throw Error(ErrorCode::parse_error, "unknown basis '" + s + "'");
}

inline json channel_to_json(const Channel& t) {
  json out;
  out["type"] = "channel";
  out["d_in"] = t.dim();
  out["d_out"] = t.dim();
  out["picture"] = std::string(to_string(t.picture()));
  out["basis"] = std::string(to_string(t.basis()->kind()));
  if (t.basis()->kind() == BasisKind::custom) {
    json el = json::array(), du = json::array();
    for (const auto& a : t.basis()->elements()) el.push_back(matrix_to_json(a));
    for (const auto& a : t.basis()->duals()) du.push_back(matrix_to_json(a));
    out["basis_elements"] = std::move(el);
    out["basis_duals"] = std::move(du);
  }
  out["matrix"] = matrix_to_json(t.matrix());
  return out;
}

inline Channel channel_from_json(const json& j) {
  const int d = field<int>(j, "d_in");
  if (field<int>(j, "d_out") != d)
    throw Error(ErrorCode::dimension_mismatch, "channels with d_in != d_out are not supported");
  if (d < 1) throw Error(ErrorCode::invalid_dimension, "d must be positive");
  const Picture picture = picture_from_string(field<std::string>(j, "picture"));
  const BasisKind kind = basis_kind_from_string(field<std::string>(j, "basis"));
  BasisPtr basis;
  if (kind == BasisKind::custom) {
    std::vector<Matrix> el, du;
    for (const auto& e : field<json>(j, "basis_elements")) el.push_back(matrix_from_json(e, d, d));
    if (j.contains("basis_duals")) {
      for (const auto& e : j.at("basis_duals")) du.push_back(matrix_from_json(e, d, d));
      basis = OperatorBasis::from_elements_and_duals(std::move(el), std::move(du));
    } else {
      basis = OperatorBasis::from_elements(std::move(el));
    }
    if (basis->dim() != d) throw Error(ErrorCode::dimension_mismatch, "basis_elements do not match d");
  } else {
    basis = basis_of_kind(kind, d);
  }
  return Channel(basis, picture, matrix_from_json(field<json>(j, "matrix"), d * d, d * d));
}

inline json kraus_to_json(const KrausSet& k) {
  json ops = json::array();
  for (const auto& m : k.operators()) ops.push_back(matrix_to_json(m));
  return {{"d", k.dim()}, {"operators", std::move(ops)}};
}

inline KrausSet kraus_from_json(const json& j) {
  const int d = field<int>(j, "d");
  std::vector<Matrix> ops;
  for (const auto& e : field<json>(j, "operators")) ops.push_back(matrix_from_json(e, d, d));
  return KrausSet(std::move(ops));
}

inline json memory_to_json(const MemoryChannel& t) {
  return {{"type", "memory-channel"}, {"dM", t.dm()},           {"dA", t.da()},
          {"dB", t.db()},             {"basis", "gellmann"},     {"matrix", matrix_to_json(t.matrix())}};
}

inline MemoryChannel memory_from_json(const json& j) {
  const int dm = field<int>(j, "dM"), da = field<int>(j, "dA"), db = field<int>(j, "dB");
  if (j.contains("basis") && j.at("basis") != "gellmann")
    throw Error(ErrorCode::invalid_basis, "memory channels use the Gell-Mann basis");
  if (dm < 2 || da < 2 || db < 2) throw Error(ErrorCode::invalid_dimension, "memory dimensions must be >= 2");
  return MemoryChannel(dm, da, db, matrix_from_json(field<json>(j, "matrix"), dm * dm * db * db, dm * dm * da * da));
}

inline bool is_memory_json(const json& j) { return j.contains("dM"); }

inline json forgetful_spec_to_json(const ForgetfulSpec& s) {
  json js = json::array();
  for (const auto& m : s.j) js.push_back(matrix_to_json(m));
  std::vector<double> v(s.v.data(), s.v.data() + s.v.size());
  return {{"dM", s.dm}, {"dA", s.da}, {"dB", s.db}, {"J", std::move(js)}, {"v", v}, {"eta", s.eta}};
}

inline ForgetfulSpec forgetful_spec_from_json(const json& j) {
  ForgetfulSpec s;
  s.dm = field<int>(j, "dM");
  s.da = field<int>(j, "dA");
  s.db = field<int>(j, "dB");
  if (s.dm < 2 || s.da < 2 || s.db < 2) throw Error(ErrorCode::invalid_dimension, "dimensions must be >= 2");
  const int t = s.dm * s.dm - 1;
  for (const auto& e : field<json>(j, "J")) s.j.push_back(matrix_from_json(e, t, t));
  const auto v = j.contains("v") ? field<std::vector<double>>(j, "v") : std::vector<double>(static_cast<std::size_t>(t), 0.0);
  s.v = Eigen::Map<const RealVector>(v.data(), static_cast<Eigen::Index>(v.size()));
  if (j.contains("eta")) s.eta = field<double>(j, "eta");
  return s;
}

inline json root_report_to_json(const RootReport& r) {
  return {{"root_order", r.order}, {"residuals", r.residuals}, {"jordan_block_sizes", r.jordan_block_sizes}};
}

inline json verdict_to_json(const ForgetfulnessVerdict& v) {
  json out;
  out["strictly_forgetful"] = v.strictly_forgetful;
  out["depth"] = v.memory_depth ? json(*v.memory_depth) : json(nullptr);
  out["triangularizing_basis"] = v.triangularizing_basis ? matrix_to_json(*v.triangularizing_basis) : json(nullptr);
  out["witness"] = v.witness;
  out["witness_power"] = v.witness_power;
  return out;
}

inline json error_to_json(const Error& e) {
  return {{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
}

}  // namespace chx::io
