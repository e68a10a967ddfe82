#include "qlayout/ply.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qlayout {

static_assert(std::endian::native == std::endian::little,
              "binary PLY support assumes a little-endian host");

namespace {

enum class ScalarType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<ScalarType> parse_type(const std::string& t) {
  if (t == "char" || t == "int8") return ScalarType::kInt8;
  if (t == "uchar" || t == "uint8") return ScalarType::kUInt8;
  if (t == "short" || t == "int16") return ScalarType::kInt16;
  if (t == "ushort" || t == "uint16") return ScalarType::kUInt16;
  if (t == "int" || t == "int32") return ScalarType::kInt32;
  if (t == "uint" || t == "uint32") return ScalarType::kUInt32;
  if (t == "float" || t == "float32") return ScalarType::kFloat32;
  if (t == "double" || t == "float64") return ScalarType::kFloat64;
  return std::nullopt;
}

std::size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::kInt8:
    case ScalarType::kUInt8:
      return 1;
    case ScalarType::kInt16:
    case ScalarType::kUInt16:
      return 2;
    case ScalarType::kInt32:
    case ScalarType::kUInt32:
    case ScalarType::kFloat32:
      return 4;
    case ScalarType::kFloat64:
      return 8;
  }
  return 0;
}

template <class T>
double load_as(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return static_cast<double>(v);
}

double decode_scalar(ScalarType t, const char* p) {
  switch (t) {
    case ScalarType::kInt8:
      return load_as<std::int8_t>(p);
    case ScalarType::kUInt8:
      return load_as<std::uint8_t>(p);
    case ScalarType::kInt16:
      return load_as<std::int16_t>(p);
    case ScalarType::kUInt16:
      return load_as<std::uint16_t>(p);
    case ScalarType::kInt32:
      return load_as<std::int32_t>(p);
    case ScalarType::kUInt32:
      return load_as<std::uint32_t>(p);
    case ScalarType::kFloat32:
      return load_as<float>(p);
    case ScalarType::kFloat64:
      return load_as<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type;
  bool is_list = false;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;

  bool has_lists() const {
    for (const auto& p : properties)
      if (p.is_list) return true;
    return false;
  }
  std::size_t stride() const {
    std::size_t s = 0;
    for (const auto& p : properties) s += type_size(p.type);
    return s;
  }
  int index_of(const std::string& n) const {
    for (std::size_t i = 0; i < properties.size(); ++i)
      if (properties[i].name == n) return static_cast<int>(i);
    return -1;
  }
};

[[noreturn]] void fail(PlyErrorKind kind, const std::string& msg) {
  const char* prefix = kind == PlyErrorKind::kMalformedHeader     ? "malformed header: "
                       : kind == PlyErrorKind::kUnsupportedLayout ? "unsupported element layout: "
                       : kind == PlyErrorKind::kTruncatedPayload  ? "truncated payload: "
                                                                  : "i/o error: ";
  throw PlyError(kind, prefix + msg);
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

PlyError::PlyError(PlyErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}

PointCloud read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "ply") fail(PlyErrorKind::kMalformedHeader, "missing 'ply' magic");

  std::optional<PlyFormat> format;
  std::vector<Element> elements;
  bool ended = false;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key.empty() || key == "comment" || key == "obj_info") continue;
    if (key == "end_header") {
      ended = true;
      break;
    }
    if (key == "format") {
      std::string f, version;
      ls >> f >> version;
      if (f == "ascii") format = PlyFormat::kAscii;
      else if (f == "binary_little_endian") format = PlyFormat::kBinaryLittleEndian;
      else if (f == "binary_big_endian") fail(PlyErrorKind::kUnsupportedLayout, "big-endian payloads are not supported");
      else fail(PlyErrorKind::kMalformedHeader, "unknown format '" + f + "'");
    } else if (key == "element") {
      Element e;
      long long count = -1;
      ls >> e.name >> count;
      if (e.name.empty() || !ls || count < 0) fail(PlyErrorKind::kMalformedHeader, "bad element line '" + line + "'");
      e.count = static_cast<std::size_t>(count);
      elements.push_back(e);
    } else if (key == "property") {
      if (elements.empty()) fail(PlyErrorKind::kMalformedHeader, "property before any element");
      std::string type;
      ls >> type;
      Property p;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        if (!parse_type(count_type) || !parse_type(item_type))
          fail(PlyErrorKind::kMalformedHeader, "bad list property '" + line + "'");
        p.is_list = true;
        p.type = *parse_type(item_type);
      } else {
        const auto t = parse_type(type);
        if (!t) fail(PlyErrorKind::kMalformedHeader, "unknown property type '" + type + "'");
        p.type = *t;
        ls >> p.name;
      }
      if (p.name.empty()) fail(PlyErrorKind::kMalformedHeader, "property without a name");
      elements.back().properties.push_back(p);
    } else {
      fail(PlyErrorKind::kMalformedHeader, "unexpected header line '" + line + "'");
    }
  }
  if (!ended) fail(PlyErrorKind::kMalformedHeader, "missing end_header");
  if (!format) fail(PlyErrorKind::kMalformedHeader, "missing format line");

  std::size_t vertex = elements.size();
  for (std::size_t i = 0; i < elements.size(); ++i)
    if (elements[i].name == "vertex") {
      vertex = i;
      break;
    }
  if (vertex == elements.size()) fail(PlyErrorKind::kUnsupportedLayout, "no vertex element");
  const Element& ve = elements[vertex];
  if (ve.has_lists()) fail(PlyErrorKind::kUnsupportedLayout, "list property in vertex element");
  const int ix = ve.index_of("x"), iy = ve.index_of("y"), iz = ve.index_of("z");
  if (ix < 0 || iy < 0 || iz < 0) fail(PlyErrorKind::kUnsupportedLayout, "vertex element needs x, y and z");
  const int inx = ve.index_of("nx"), iny = ve.index_of("ny"), inz = ve.index_of("nz");
  const int normal_props = (inx >= 0) + (iny >= 0) + (inz >= 0);
  if (normal_props != 0 && normal_props != 3)
    fail(PlyErrorKind::kUnsupportedLayout, "vertex normals need all of nx, ny and nz");
  const bool with_normals = normal_props == 3;

  PointCloud cloud;
  cloud.points.reserve(ve.count);
  if (with_normals) cloud.normals.reserve(ve.count);

  if (*format == PlyFormat::kAscii) {
    for (std::size_t e = 0; e < vertex; ++e)
      for (std::size_t r = 0; r < elements[e].count; ++r)
        if (!std::getline(in, line)) fail(PlyErrorKind::kTruncatedPayload, "element '" + elements[e].name + "' ends early");
    std::vector<double> values(ve.properties.size());
    for (std::size_t r = 0; r < ve.count; ++r) {
      if (!std::getline(in, line))
        fail(PlyErrorKind::kTruncatedPayload, "expected " + std::to_string(ve.count) + " vertices, got " + std::to_string(r));
      std::istringstream ls(line);
      for (auto& v : values)
        if (!(ls >> v)) fail(PlyErrorKind::kTruncatedPayload, "vertex " + std::to_string(r) + " has too few values");
      cloud.points.emplace_back(values[ix], values[iy], values[iz]);
      if (with_normals) cloud.normals.emplace_back(values[inx], values[iny], values[inz]);
    }
    return cloud;
  }

  for (std::size_t e = 0; e < vertex; ++e) {
    if (elements[e].has_lists())
      fail(PlyErrorKind::kUnsupportedLayout, "list properties before the vertex element");
    in.ignore(static_cast<std::streamsize>(elements[e].count * elements[e].stride()));
    if (!in) fail(PlyErrorKind::kTruncatedPayload, "element '" + elements[e].name + "' ends early");
  }
  std::vector<std::size_t> offsets;
  std::size_t stride = 0;
  for (const auto& p : ve.properties) {
    offsets.push_back(stride);
    stride += type_size(p.type);
  }
  std::vector<char> row(stride);
  auto value = [&](int i) { return decode_scalar(ve.properties[i].type, row.data() + offsets[i]); };
  for (std::size_t r = 0; r < ve.count; ++r) {
    if (!in.read(row.data(), static_cast<std::streamsize>(stride)))
      fail(PlyErrorKind::kTruncatedPayload, "expected " + std::to_string(ve.count) + " vertices, got " + std::to_string(r));
    cloud.points.emplace_back(value(ix), value(iy), value(iz));
    if (with_normals) cloud.normals.emplace_back(value(inx), value(iny), value(inz));
  }
  return cloud;
}

PointCloud load_cloud(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(PlyErrorKind::kIo, "cannot open '" + path.string() + "'");
  return read_ply(in);
}

void write_ply(std::ostream& out, const PointCloud& cloud, PlyFormat format) {
  const bool normals = cloud.has_normals();
  out << "ply\n"
      << (format == PlyFormat::kAscii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n")
      << "element vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
  out << "end_header\n";

  if (format == PlyFormat::kAscii) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3& p = cloud.points[i];
      out << p.x() << ' ' << p.y() << ' ' << p.z();
      if (normals) {
        const Vec3& n = cloud.normals[i];
        out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
      }
      out << '\n';
    }
    return;
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    out.write(reinterpret_cast<const char*>(cloud.points[i].data()), 3 * sizeof(double));
    if (normals) out.write(reinterpret_cast<const char*>(cloud.normals[i].data()), 3 * sizeof(double));
  }
}

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud, PlyFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(PlyErrorKind::kIo, "cannot write '" + path.string() + "'");
  write_ply(out, cloud, format);
  if (!out) fail(PlyErrorKind::kIo, "write failed for '" + path.string() + "'");
}

}  // namespace qlayout
