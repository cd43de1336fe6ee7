#pragma once

// Scenario files: named system descriptions plus an ordered task list.
// The format is documented in schema/scenario-v1.md.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qot/systems.hpp"

namespace qot {

using Json = nlohmann::json;

inline constexpr const char* kScenarioSchema = "qot-scenario/1";

struct Task {
  std::string kind;
  Json spec;  // the task object as written
};

struct Scenario {
  std::vector<std::pair<std::string, SystemVN>> systems;  // declaration order
  std::vector<Task> tasks;

  bool has(const std::string& name) const;
  /// Throws Schema for unknown names.
  const SystemVN& system(const std::string& name) const;
};

/// Complex entry: a number or [re, im].
cdouble parse_complex(const Json& j, const std::string& where);
/// Row-major nested array of complex entries.
Mat parse_matrix(const Json& j, const std::string& where);
Json matrix_to_json(const Mat& m);
Json element_to_json(const AlgElement& a);
Json coupling_to_json(const Coupling& c);
Json superop_to_json(const SuperOp& e);

/// System description to SystemVN. Schema errors name the offending field
/// under `where`; construction failures keep their ErrorKind and residual.
/// `seed` enters the engine of {"random": ...} descriptions.
SystemVN parse_system(const Json& j, const std::string& where, std::uint64_t seed = 0);
/// Canonical full form: blocks, state, dynamics as superops, reversing, coords.
Json serialize_system(const SystemVN& s);

Scenario parse_scenario(const Json& j, std::uint64_t seed = 0);
/// Reads and parses a file; unreadable or malformed JSON is a Schema error.
Scenario load_scenario(const std::string& path, std::uint64_t seed = 0);
/// Systems in canonical form plus the task objects.
Json serialize_scenario(const Scenario& s);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex_digest(std::uint64_t h);

}  // namespace qot
