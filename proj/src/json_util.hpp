#pragma once

// Checked accessors over nlohmann::json that report failures as FormatError
// with a JSON-pointer location.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spanrel/errors.hpp"
#include "spanrel/numerics.hpp"
#include "spanrel/repr.hpp"

namespace spanrel::detail {

using json = nlohmann::json;

inline std::string child(const std::string& where, const std::string& key) {
  return where + "/" + key;
}
inline std::string child(const std::string& where, std::size_t i) {
  return where + "/" + std::to_string(i);
}

inline const json& member(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw FormatError(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(where, "missing required field '" + key + "'");
  return *it;
}

inline const json& array_at(const json& obj, const std::string& key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_array()) throw FormatError(child(where, key), "expected an array");
  return v;
}

inline std::size_t as_index(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw FormatError(where, "expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

inline double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw FormatError(where, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw FormatError(where, "expected a finite number");
  return d;
}

inline std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw FormatError(where, "expected a string");
  return v.get<std::string>();
}

inline bool as_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw FormatError(where, "expected a boolean");
  return v.get<bool>();
}

inline std::vector<double> as_numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw FormatError(where, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], child(where, i)));
  return out;
}

inline std::vector<std::string> as_strings(const json& v, const std::string& where) {
  if (!v.is_array()) throw FormatError(where, "expected an array of strings");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_string(v[i], child(where, i)));
  return out;
}

inline json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline Matrix matrix_from_json(const json& v, const std::string& where) {
  const std::size_t rows = as_index(member(v, "rows", where), child(where, "rows"));
  const std::size_t cols = as_index(member(v, "cols", where), child(where, "cols"));
  auto data = as_numbers(member(v, "data", where), child(where, "data"));
  if (data.size() != rows * cols) {
    throw FormatError(child(where, "data"), "length " + std::to_string(data.size()) +
                                                " does not match " + std::to_string(rows) + "x" +
                                                std::to_string(cols));
  }
  return Matrix(rows, cols, std::move(data));
}

inline void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                         const std::string& where) {
  if (m.rows() != rows || m.cols() != cols) {
    throw FormatError(where, "shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                 ", expected " + std::to_string(rows) + "x" +
                                 std::to_string(cols));
  }
}

inline json bias_to_json(const BiasTable& b) {
  return json{{"phi_htr", b.phi_htr},
              {"phi_hr", matrix_to_json(b.phi_hr)},
              {"phi_tr", matrix_to_json(b.phi_tr)},
              {"phi_ht", matrix_to_json(b.phi_ht)}};
}

// Shapes are checked against the inventory sizes.
inline BiasTable bias_from_json(const json& v, const std::string& where, std::size_t entity_types,
                                std::size_t relation_types) {
  BiasTable b;
  b.num_entity_types = entity_types;
  b.num_relation_types = relation_types;
  b.phi_htr = as_numbers(member(v, "phi_htr", where), child(where, "phi_htr"));
  if (b.phi_htr.size() != entity_types * entity_types * relation_types) {
    throw FormatError(child(where, "phi_htr"),
                      "expected " + std::to_string(entity_types * entity_types * relation_types) +
                          " values, got " + std::to_string(b.phi_htr.size()));
  }
  b.phi_hr = matrix_from_json(member(v, "phi_hr", where), child(where, "phi_hr"));
  expect_shape(b.phi_hr, entity_types, relation_types, child(where, "phi_hr"));
  b.phi_tr = matrix_from_json(member(v, "phi_tr", where), child(where, "phi_tr"));
  expect_shape(b.phi_tr, entity_types, relation_types, child(where, "phi_tr"));
  b.phi_ht = matrix_from_json(member(v, "phi_ht", where), child(where, "phi_ht"));
  expect_shape(b.phi_ht, entity_types, entity_types, child(where, "phi_ht"));
  return b;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string(), "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

// Two-space indent plus trailing newline: stable, diff-friendly output.
inline std::string dump_json(const json& v) { return v.dump(2) + "\n"; }

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace spanrel::detail
