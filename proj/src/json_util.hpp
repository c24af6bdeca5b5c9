// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dtloc/error.hpp"

#include <json.hpp>

#include <string>

namespace dtloc::detail {

inline std::string join_path(const std::string &parent, const std::string &key) {
  return parent.empty() ? key : parent + "." + key;
}

inline const nlohmann::json &member(const nlohmann::json &j, const std::string &key,
                                    const std::string &parent) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(join_path(parent, key) + ": missing field");
  }
  return j.at(key);
}

template <typename T> T as(const nlohmann::json &j, const std::string &path) {
  try {
    if constexpr (std::is_arithmetic_v<T>) {
      if (!j.is_number()) throw ParseError(path + ": expected a number");
      if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_integer()) throw ParseError(path + ": expected an integer");
      }
    }
    return j.get<T>();
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(path + ": " + e.what());
  }
}

template <typename T>
T field(const nlohmann::json &j, const std::string &key, const std::string &parent) {
  return as<T>(member(j, key, parent), join_path(parent, key));
}

} // namespace dtloc::detail
