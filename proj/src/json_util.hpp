#pragma once

// Private helpers for reading scenario documents.

#include <json.hpp>
#include <string>
#include <string_view>

#include "mlivr/env.hpp"
#include "mlivr/error.hpp"
#include "mlivr/geometry.hpp"

namespace mlivr::detail {

using json = nlohmann::json;

inline json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line/column for the diagnostic.
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ", column " +
                                       std::to_string(col) + ": " + e.what());
  }
}

[[noreturn]] inline void invalid(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::kValidation, path + ": " + msg);
}

inline const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) invalid(path, std::string("missing field '") + key + "'");
  return j.at(key);
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) invalid(path, "expected a number");
  return j.get<double>();
}

inline double number_or(const json& j, const char* key, double fallback, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return as_number(j.at(key), path + "." + key);
}

inline bool bool_or(const json& j, const char* key, bool fallback, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) invalid(path + "." + key, "expected a boolean");
  return j.at(key).get<bool>();
}

inline std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) invalid(path, "expected a string");
  return j.get<std::string>();
}

template <int N>
Eigen::Matrix<double, N, 1> as_vec(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N))
    invalid(path, "expected an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = as_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

inline const json& array_field(const json& j, const char* key, const std::string& path) {
  static const json empty = json::array();
  if (!j.is_object() || !j.contains(key)) return empty;
  const json& a = j.at(key);
  if (!a.is_array()) invalid(path + "." + key, "expected an array");
  return a;
}

}  // namespace mlivr::detail

namespace mlivr {

// Reads the "environment" section of a scenario document (or a bare environment).
EnvironmentMap environment_from_json(const detail::json& doc);

}  // namespace mlivr
