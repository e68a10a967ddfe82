#pragma once

#include <filesystem>
#include <iosfwd>

#include "qlayout/geometry.hpp"

namespace qlayout {

enum class PlyFormat { kAscii, kBinaryLittleEndian };

enum class PlyErrorKind { kMalformedHeader, kUnsupportedLayout, kTruncatedPayload, kIo };

class PlyError : public Error {
 public:
  PlyError(PlyErrorKind kind, const std::string& what);
  PlyErrorKind kind() const { return kind_; }

 private:
  PlyErrorKind kind_;
};

/// Reads the `vertex` element (x, y, z and optionally nx, ny, nz) of an ASCII
/// or binary little-endian PLY stream, preserving point order.
PointCloud read_ply(std::istream& in);
PointCloud load_cloud(const std::filesystem::path& path);

/// Writes doubles; binary output round-trips bit-exactly through read_ply.
void write_ply(std::ostream& out, const PointCloud& cloud, PlyFormat format);
void save_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                PlyFormat format = PlyFormat::kBinaryLittleEndian);

}  // namespace qlayout
