#pragma once

#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "blindcal/altmin.hpp"
#include "blindcal/experiments.hpp"
#include "blindcal/sqlasso.hpp"

namespace blindcal::cli {

using Json = nlohmann::json;

/// Invalid or incomplete configuration document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Read access to one JSON object that remembers which keys were consumed so
/// that leftovers can be reported as unknown.
class Section {
 public:
  Section(const Json& node, std::string path);

  bool has(const std::string& key) const;
  /// Value of `key`, or `fallback` when absent.
  template <class T>
  T get(const std::string& key, const T& fallback);
  /// Value of `key`; a missing key is an error naming the full key path.
  template <class T>
  T require(const std::string& key);
  /// Nested object (an empty one when absent).
  Section child(const std::string& key);
  /// Rejects every key that was never consumed.
  void finish() const;

  std::string path_of(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  template <class T>
  T convert(const std::string& key, const Json& value) const;

  Json node_;
  std::string path_;
  std::set<std::string> used_;
};

Json load_config(const std::string& path);

SolverConfig parse_solver(Section section);
AltMinConfig parse_altmin(Section section);
/// delta_u given as a count or the string "M".
int parse_delta_u(const Json& value, const std::string& path);

/// Experiment coordinates shared by several subcommands.
ExperimentSpec parse_experiment(Section& root, bool require_methods);
Tomo2dSpec parse_tomo2d(Section& root);

template <class T>
T Section::get(const std::string& key, const T& fallback) {
  used_.insert(key);
  if (!node_.contains(key)) return fallback;
  return convert<T>(key, node_.at(key));
}

template <class T>
T Section::require(const std::string& key) {
  used_.insert(key);
  if (!node_.contains(key)) throw ConfigError("missing required key '" + path_of(key) + "'");
  return convert<T>(key, node_.at(key));
}

template <class T>
T Section::convert(const std::string& key, const Json& value) const {
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    if (!value.is_number_integer()) throw ConfigError("key '" + path_of(key) + "' must be an integer");
  }
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("key '" + path_of(key) + "' has the wrong type");
  }
}

}  // namespace blindcal::cli
