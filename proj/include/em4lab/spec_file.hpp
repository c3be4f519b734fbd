#pragma once

// TOML manifold specs.
//
//   schema_version = 1
//   [manifold]  name, dim, coords, orientation ("positive" | "negative")
//   [params]    name = value
//   [metric]    g_i_j = "expr" for i <= j (1-based)
//   [form_F]    F_i_j = "expr" for i < j
//   [complex_structure]  J_i_j = "expr" (row i, column j; missing entries 0)
//   [domain]    coord = [lo, hi]
//   [integration]  vars, box, map, jacobian, excised_volume
//   [expected]  scalar, einstein_constant, volume, chi, tau

#include "em4lab/atlas.hpp"

#include <string>
#include <string_view>

namespace em4lab {

inline constexpr int kSpecSchemaVersion = 1;

/// Throws kIo when unreadable; kSyntax / kValidation with file positions.
ExampleManifold load_spec(const std::string& path);
ExampleManifold parse_spec(std::string_view text, const std::string& origin = "<string>");

/// Deterministic TOML text that parse_spec reads back to the same manifold.
std::string export_spec(const ExampleManifold& m);

}  // namespace em4lab
