#pragma once

#include "stochsplat/image.hpp"
#include "stochsplat/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stochsplat {

class PlyError : public std::runtime_error {
 public:
  enum class Kind { kIo, kMalformedHeader, kUnsupportedEncoding, kMissingProperty, kTruncatedPayload };

  PlyError(Kind kind, std::uint64_t offset, const std::string& what);
  Kind kind() const { return kind_; }
  /// Byte offset in the file where the problem was detected.
  std::uint64_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::uint64_t offset_;
};

/// Splat PLY (binary little endian). Values are stored raw, without
/// activation; ids are assigned in file order. The SH degree follows from the
/// number of f_rest_* properties (0, 9, 24 or 45).
Scene load_ply(const std::filesystem::path& path);
Scene parse_ply(std::string_view bytes);
void save_ply(const Scene& scene, const std::filesystem::path& path);
std::string serialize_ply(const Scene& scene);

struct CameraRecord {
  std::string id;
  Camera camera;
  std::string image_path;  // empty when absent
};

/// JSON array of {id, width, height, fx, fy, cx, cy, rotation (9, row-major),
/// translation (3), image_path?, near?, far?}. Errors carry the line number.
std::vector<CameraRecord> load_cameras(const std::filesystem::path& path);
std::vector<CameraRecord> parse_cameras(std::string_view text, std::string_view source = "<string>");
void save_cameras(const std::vector<CameraRecord>& cameras, const std::filesystem::path& path);

enum class ImageFormat { kPng8, kPfm };

/// Picks the format from the extension (.png / .pfm).
ImageFormat image_format_for(const std::filesystem::path& path);

/// PNG: clamp to [0, 1], sRGB encode, 8 bit. PFM: little-endian float RGB.
void write_image(const Image& img, const std::filesystem::path& path, ImageFormat format);
void write_image(const Image& img, const std::filesystem::path& path);
/// PNG input is decoded from sRGB to linear.
Image read_image(const std::filesystem::path& path);

void write_pfm(const Image& img, const std::filesystem::path& path);
Image read_pfm(const std::filesystem::path& path);
void write_png(const Image& img, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

double srgb_encode(double linear);
double srgb_decode(double encoded);
std::uint8_t srgb_to_byte(double linear);

}  // namespace stochsplat
