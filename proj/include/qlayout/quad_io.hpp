#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlayout/geometry.hpp"

namespace qlayout {

/// Serialized normals may deviate from unit length by less than this; they are
/// re-normalised on load. Larger deviations are rejected.
inline constexpr double kNormalLoadTolerance = 1e-3;

nlohmann::ordered_json quad_to_json(const Quad& q);
nlohmann::ordered_json quads_to_json(const std::vector<Quad>& quads);

/// `where` prefixes diagnostics, e.g. "quads[2]".
Quad quad_from_json(const nlohmann::json& j, const std::string& where);
std::vector<Quad> quads_from_json(const nlohmann::json& j);

void save_quads(const std::filesystem::path& path, const std::vector<Quad>& quads);
std::vector<Quad> load_quads(const std::filesystem::path& path);

/// Reads a whole file as JSON, with the path in any parse diagnostic.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace qlayout
