#include "qlayout/quad_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qlayout {

namespace {

using nlohmann::json;

template <int N>
Eigen::Matrix<double, N, 1> read_vector(const json& obj, const char* key, const std::string& where) {
  const std::string field = where + "." + key;
  if (!obj.contains(key)) throw Error(field + ": missing");
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != N)
    throw Error(field + ": expected an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) {
    if (!v[i].is_number()) throw Error(field + "[" + std::to_string(i) + "]: expected a number");
    out[i] = v[i].get<double>();
    if (!std::isfinite(out[i])) throw Error(field + "[" + std::to_string(i) + "]: not finite");
  }
  return out;
}

}  // namespace

nlohmann::ordered_json quad_to_json(const Quad& q) {
  nlohmann::ordered_json j;
  j["center"] = {q.center.x(), q.center.y(), q.center.z()};
  j["normal"] = {q.normal.x(), q.normal.y(), q.normal.z()};
  j["half_size"] = {q.half_size.x(), q.half_size.y()};
  j["quadness"] = q.quadness;
  return j;
}

nlohmann::ordered_json quads_to_json(const std::vector<Quad>& quads) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& q : quads) arr.push_back(quad_to_json(q));
  return arr;
}

Quad quad_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error(where + ": expected an object");
  static const std::set<std::string> known{"center", "normal", "half_size", "quadness"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw Error(where + ": unknown field '" + key + "'");

  Quad q;
  q.center = read_vector<3>(j, "center", where);
  const Vec3 n = read_vector<3>(j, "normal", where);
  const double len = n.norm();
  if (std::abs(len - 1.0) >= kNormalLoadTolerance)
    throw Error(where + ".normal: norm " + std::to_string(len) + " is not within 1e-3 of 1");
  q.normal = n / len;
  q.half_size = read_vector<2>(j, "half_size", where);
  if (q.half_size.x() < 0.0 || q.half_size.y() < 0.0) throw Error(where + ".half_size: must be >= 0");
  if (!j.contains("quadness")) throw Error(where + ".quadness: missing");
  if (!j.at("quadness").is_number()) throw Error(where + ".quadness: expected a number");
  q.quadness = j.at("quadness").get<double>();
  if (!(q.quadness >= 0.0 && q.quadness <= 1.0))
    throw Error(where + ".quadness: " + std::to_string(q.quadness) + " is outside [0,1]");
  return q;
}

std::vector<Quad> quads_from_json(const json& j) {
  if (!j.is_array()) throw Error("quads: expected a JSON array");
  std::vector<Quad> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(quad_from_json(j[i], "quads[" + std::to_string(i) + "]"));
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void save_quads(const std::filesystem::path& path, const std::vector<Quad>& quads) {
  write_text_file(path, quads_to_json(quads).dump(2) + "\n");
}

std::vector<Quad> load_quads(const std::filesystem::path& path) {
  try {
    return quads_from_json(read_json_file(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace qlayout
