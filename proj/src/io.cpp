#include "stochsplat/io.hpp"

#include <json.hpp>
#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace stochsplat {

static_assert(std::endian::native == std::endian::little, "binary I/O assumes a little-endian host");

PlyError::PlyError(Kind kind, std::uint64_t offset, const std::string& what)
    : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), kind_(kind), offset_(offset) {}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

// ---- PLY ----

int ply_type_size(std::string_view t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

struct PlyProperty {
  std::string name;
  std::string type;
  int offset = 0;
};

struct PlyElement {
  std::string name;
  std::uint64_t count = 0;
  std::vector<PlyProperty> properties;
  int stride = 0;
};

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> rest_names(int count) {
  std::vector<std::string> names;
  for (int i = 0; i < count; ++i) names.push_back("f_rest_" + std::to_string(i));
  return names;
}

}  // namespace

Scene parse_ply(std::string_view bytes) {
  using K = PlyError::Kind;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= bytes.size()) return false;
    const std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) return false;
    line = bytes.substr(pos, end - pos);
    pos = end + 1;
    return true;
  };

  std::string_view line;
  if (!next_line(line) || split_words(line) != std::vector<std::string>{"ply"}) {
    throw PlyError(K::kMalformedHeader, 0, "missing 'ply' magic");
  }
  std::vector<PlyElement> elements;
  bool have_format = false;
  bool ended = false;
  while (!ended) {
    const std::size_t line_start = pos;
    if (!next_line(line)) throw PlyError(K::kMalformedHeader, line_start, "header ended without 'end_header'");
    const auto w = split_words(line);
    if (w.empty() || w[0] == "comment" || w[0] == "obj_info") continue;
    if (w[0] == "format") {
      if (w.size() != 3) throw PlyError(K::kMalformedHeader, line_start, "malformed format line");
      if (w[1] != "binary_little_endian") {
        throw PlyError(K::kUnsupportedEncoding, line_start, "unsupported encoding '" + w[1] + "'");
      }
      have_format = true;
    } else if (w[0] == "element") {
      if (w.size() != 3) throw PlyError(K::kMalformedHeader, line_start, "malformed element line");
      PlyElement e;
      e.name = w[1];
      try {
        std::size_t used = 0;
        e.count = std::stoull(w[2], &used);
        if (used != w[2].size()) throw std::invalid_argument("count");
      } catch (const std::exception&) {
        throw PlyError(K::kMalformedHeader, line_start, "bad element count '" + w[2] + "'");
      }
      elements.push_back(std::move(e));
    } else if (w[0] == "property") {
      if (elements.empty()) throw PlyError(K::kMalformedHeader, line_start, "property before any element");
      if (w.size() >= 2 && w[1] == "list") {
        throw PlyError(K::kMalformedHeader, line_start, "list properties are not supported");
      }
      if (w.size() != 3) throw PlyError(K::kMalformedHeader, line_start, "malformed property line");
      const int size = ply_type_size(w[1]);
      if (size == 0) throw PlyError(K::kMalformedHeader, line_start, "unknown property type '" + w[1] + "'");
      PlyElement& e = elements.back();
      e.properties.push_back({w[2], w[1], e.stride});
      e.stride += size;
    } else if (w[0] == "end_header") {
      ended = true;
    } else {
      throw PlyError(K::kMalformedHeader, line_start, "unexpected header keyword '" + w[0] + "'");
    }
  }
  if (!have_format) throw PlyError(K::kMalformedHeader, pos, "missing format line");

  const std::size_t header_end = pos;
  std::uint64_t data_offset = header_end;
  const PlyElement* vertex = nullptr;
  std::uint64_t vertex_offset = 0;
  for (const auto& e : elements) {
    if (e.name == "vertex") {
      vertex = &e;
      vertex_offset = data_offset;
    }
    data_offset += e.count * static_cast<std::uint64_t>(e.stride);
  }
  if (!vertex) throw PlyError(K::kMalformedHeader, header_end, "no 'vertex' element");

  auto find = [&](const std::string& name) -> const PlyProperty* {
    for (const auto& p : vertex->properties) {
      if (p.name == name) return &p;
    }
    return nullptr;
  };
  auto require = [&](const std::string& name) -> int {
    const PlyProperty* p = find(name);
    if (!p) throw PlyError(K::kMissingProperty, header_end, "missing required property '" + name + "'");
    if (p->type != "float" && p->type != "float32") {
      throw PlyError(K::kMalformedHeader, header_end, "property '" + name + "' must be float");
    }
    return p->offset;
  };

  int rest_count = 0;
  while (find("f_rest_" + std::to_string(rest_count))) ++rest_count;
  int degree = -1;
  for (int d = 0; d <= kMaxShDegree; ++d) {
    if (rest_count == 3 * (sh_coeff_count(d) - 1)) degree = d;
  }
  if (degree < 0) {
    throw PlyError(K::kMalformedHeader, header_end,
                   "f_rest property count " + std::to_string(rest_count) + " matches no SH degree");
  }
  const int rest_per_channel = sh_coeff_count(degree) - 1;

  const std::array<int, 3> pos_off{require("x"), require("y"), require("z")};
  const std::array<int, 3> dc_off{require("f_dc_0"), require("f_dc_1"), require("f_dc_2")};
  std::vector<int> rest_off;
  for (const auto& n : rest_names(rest_count)) rest_off.push_back(require(n));
  const int opacity_off = require("opacity");
  const std::array<int, 3> scale_off{require("scale_0"), require("scale_1"), require("scale_2")};
  const std::array<int, 4> rot_off{require("rot_0"), require("rot_1"), require("rot_2"), require("rot_3")};

  const std::uint64_t needed = vertex_offset + vertex->count * static_cast<std::uint64_t>(vertex->stride);
  if (needed > bytes.size()) {
    throw PlyError(K::kTruncatedPayload, bytes.size(),
                   "payload truncated: expected " + std::to_string(needed) + " bytes, file has " +
                       std::to_string(bytes.size()));
  }

  Scene scene;
  scene.sh_degree = degree;
  scene.gaussians.resize(vertex->count);
  for (std::uint64_t i = 0; i < vertex->count; ++i) {
    const char* rec = bytes.data() + vertex_offset + i * vertex->stride;
    auto f = [&](int off) {
      float v;
      std::memcpy(&v, rec + off, sizeof v);
      return static_cast<double>(v);
    };
    Gaussian3D& g = scene.gaussians[i];
    g.id = static_cast<std::uint32_t>(i);
    for (int c = 0; c < 3; ++c) {
      g.position[c] = f(pos_off[c]);
      g.sh[0][c] = f(dc_off[c]);
      g.log_scale[c] = f(scale_off[c]);
    }
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < rest_per_channel; ++k) g.sh[1 + k][c] = f(rest_off[c * rest_per_channel + k]);
    }
    g.opacity_logit = f(opacity_off);
    for (int c = 0; c < 4; ++c) g.rotation[c] = f(rot_off[c]);
  }
  return scene;
}

Scene load_ply(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const std::runtime_error& e) {
    throw PlyError(PlyError::Kind::kIo, 0, e.what());
  }
  return parse_ply(bytes);
}

std::string serialize_ply(const Scene& scene) {
  if (scene.sh_degree < 0 || scene.sh_degree > kMaxShDegree) throw std::invalid_argument("bad SH degree");
  const int rest_per_channel = sh_coeff_count(scene.sh_degree) - 1;
  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.size() << "\n";
  for (const char* n : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"}) {
    h << "property float " << n << "\n";
  }
  for (const auto& n : rest_names(3 * rest_per_channel)) h << "property float " << n << "\n";
  for (const char* n : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"}) {
    h << "property float " << n << "\n";
  }
  h << "end_header\n";
  std::string out = h.str();
  const std::size_t floats = 9 + 3 * static_cast<std::size_t>(rest_per_channel) + 8;
  std::vector<float> rec(floats);
  out.reserve(out.size() + scene.size() * floats * sizeof(float));
  for (const auto& g : scene.gaussians) {
    std::size_t k = 0;
    for (int c = 0; c < 3; ++c) rec[k++] = static_cast<float>(g.position[c]);
    for (int c = 0; c < 3; ++c) rec[k++] = 0.0f;
    for (int c = 0; c < 3; ++c) rec[k++] = static_cast<float>(g.sh[0][c]);
    for (int c = 0; c < 3; ++c) {
      for (int j = 0; j < rest_per_channel; ++j) rec[k++] = static_cast<float>(g.sh[1 + j][c]);
    }
    rec[k++] = static_cast<float>(g.opacity_logit);
    for (int c = 0; c < 3; ++c) rec[k++] = static_cast<float>(g.log_scale[c]);
    for (int c = 0; c < 4; ++c) rec[k++] = static_cast<float>(g.rotation[c]);
    out.append(reinterpret_cast<const char*>(rec.data()), floats * sizeof(float));
  }
  return out;
}

void save_ply(const Scene& scene, const std::filesystem::path& path) { write_file(path, serialize_ply(scene)); }

// ---- cameras ----

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

// Line number where each element of the top-level array starts.
std::vector<std::size_t> element_lines(std::string_view text) {
  std::vector<std::size_t> lines;
  int depth = 0;
  bool in_string = false, escape = false, expect_value = false;
  std::size_t line = 1;
  for (char ch : text) {
    if (ch == '\n') ++line;
    if (in_string) {
      if (escape) {
        escape = false;
      } else if (ch == '\\') {
        escape = true;
      } else if (ch == '"') {
        in_string = false;
      }
      continue;
    }
    if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') continue;
    if (depth == 1 && expect_value) {
      lines.push_back(line);
      expect_value = false;
    }
    if (ch == '"') {
      in_string = true;
    } else if (ch == '[' || ch == '{') {
      ++depth;
      if (depth == 1) expect_value = true;
    } else if (ch == ']' || ch == '}') {
      --depth;
    } else if (ch == ',' && depth == 1) {
      expect_value = true;
    }
  }
  return lines;
}

}  // namespace

std::vector<CameraRecord> parse_cameras(std::string_view text, std::string_view source) {
  using nlohmann::json;
  const std::string src(source);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(src + ":" + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) +
                             ": JSON parse error: " + e.what());
  }
  if (!doc.is_array()) throw std::runtime_error(src + ":1: camera file must be a JSON array");
  const auto lines = element_lines(text);
  std::vector<CameraRecord> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = src + ":" + std::to_string(i < lines.size() ? lines[i] : 1) + ": camera " +
                              std::to_string(i) + ": ";
    const json& j = doc[i];
    if (!j.is_object()) throw std::runtime_error(where + "expected an object");
    auto number = [&](const char* key) -> double {
      if (!j.contains(key)) throw std::runtime_error(where + "missing field '" + key + "'");
      if (!j[key].is_number()) throw std::runtime_error(where + "field '" + key + "' must be a number");
      return j[key].get<double>();
    };
    auto integer = [&](const char* key) -> int {
      if (!j.contains(key)) throw std::runtime_error(where + "missing field '" + key + "'");
      if (!j[key].is_number_integer()) throw std::runtime_error(where + "field '" + key + "' must be an integer");
      return j[key].get<int>();
    };
    auto array = [&](const char* key, std::size_t n) {
      if (!j.contains(key)) throw std::runtime_error(where + "missing field '" + key + "'");
      const json& a = j[key];
      if (!a.is_array() || a.size() != n) {
        throw std::runtime_error(where + "field '" + key + "' must be an array of " + std::to_string(n) + " numbers");
      }
      std::vector<double> v;
      for (const auto& x : a) {
        if (!x.is_number()) throw std::runtime_error(where + "field '" + key + "' must contain numbers");
        v.push_back(x.get<double>());
      }
      return v;
    };
    CameraRecord rec;
    if (j.contains("id")) {
      rec.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    } else {
      rec.id = std::to_string(i);
    }
    Camera& c = rec.camera;
    c.width = integer("width");
    c.height = integer("height");
    c.fx = number("fx");
    c.fy = number("fy");
    c.cx = number("cx");
    c.cy = number("cy");
    const auto r = array("rotation", 9);
    for (int k = 0; k < 9; ++k) c.rotation(k / 3, k % 3) = r[k];
    const auto t = array("translation", 3);
    c.translation = Vec3(t[0], t[1], t[2]);
    if (j.contains("near")) c.near_plane = number("near");
    if (j.contains("far")) c.far_plane = number("far");
    if (j.contains("image_path")) {
      if (!j["image_path"].is_string()) throw std::runtime_error(where + "field 'image_path' must be a string");
      rec.image_path = j["image_path"].get<std::string>();
    }
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(where + e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<CameraRecord> load_cameras(const std::filesystem::path& path) {
  return parse_cameras(read_file(path), path.string());
}

void save_cameras(const std::vector<CameraRecord>& cameras, const std::filesystem::path& path) {
  using nlohmann::json;
  json doc = json::array();
  for (const auto& rec : cameras) {
    const Camera& c = rec.camera;
    json j;
    j["id"] = rec.id;
    j["width"] = c.width;
    j["height"] = c.height;
    j["fx"] = c.fx;
    j["fy"] = c.fy;
    j["cx"] = c.cx;
    j["cy"] = c.cy;
    std::vector<double> r(9);
    for (int k = 0; k < 9; ++k) r[k] = c.rotation(k / 3, k % 3);
    j["rotation"] = r;
    j["translation"] = {c.translation.x(), c.translation.y(), c.translation.z()};
    j["near"] = c.near_plane;
    j["far"] = c.far_plane;
    if (!rec.image_path.empty()) j["image_path"] = rec.image_path;
    doc.push_back(std::move(j));
  }
  write_file(path, doc.dump(2) + "\n");
}

// ---- images ----

double srgb_encode(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double srgb_decode(double v) { return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4); }

std::uint8_t srgb_to_byte(double linear) {
  return static_cast<std::uint8_t>(std::lround(srgb_encode(linear) * 255.0));
}

ImageFormat image_format_for(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (ext == ".png") return ImageFormat::kPng8;
  if (ext == ".pfm") return ImageFormat::kPfm;
  throw std::invalid_argument("unknown image extension '" + ext + "' (use .png or .pfm)");
}

void write_image(const Image& img, const std::filesystem::path& path, ImageFormat format) {
  if (format == ImageFormat::kPfm) {
    write_pfm(img, path);
  } else {
    write_png(img, path);
  }
}

void write_image(const Image& img, const std::filesystem::path& path) {
  write_image(img, path, image_format_for(path));
}

Image read_image(const std::filesystem::path& path) {
  return image_format_for(path) == ImageFormat::kPfm ? read_pfm(path) : read_png(path);
}

void write_pfm(const Image& img, const std::filesystem::path& path) {
  std::string out = "PF\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(img.width()) * 3);
  for (int y = img.height() - 1; y >= 0; --y) {
    for (int x = 0; x < img.width(); ++x) {
      const Rgb c = img.at(x, y);
      for (int k = 0; k < 3; ++k) row[3 * x + k] = static_cast<float>(c[k]);
    }
    out.append(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
  }
  write_file(path, out);
}

Image read_pfm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  const std::string magic = token();
  if (magic != "PF") throw std::runtime_error("'" + path.string() + "': not an RGB PFM file");
  int w = 0, h = 0;
  double scale = 0.0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    scale = std::stod(token());
  } catch (const std::exception&) {
    throw std::runtime_error("'" + path.string() + "': malformed PFM header");
  }
  ++pos;  // single whitespace after the scale
  if (w <= 0 || h <= 0) throw std::runtime_error("'" + path.string() + "': bad PFM size");
  if (scale > 0.0) throw std::runtime_error("'" + path.string() + "': big-endian PFM is not supported");
  const std::size_t need = static_cast<std::size_t>(w) * h * 3 * sizeof(float);
  if (bytes.size() < pos + need) throw std::runtime_error("'" + path.string() + "': truncated PFM payload");
  Image img(w, h);
  const char* data = bytes.data() + pos;
  for (int y = h - 1, r = 0; y >= 0; --y, ++r) {
    for (int x = 0; x < w; ++x) {
      float v[3];
      std::memcpy(v, data + (static_cast<std::size_t>(r) * w + x) * 3 * sizeof(float), sizeof v);
      img.set(x, y, Rgb(v[0], v[1], v[2]));
    }
  }
  return img;
}

void write_png(const Image& img, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(img.pixel_count() * 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) pixels[3 * i + c] = srgb_to_byte(img.channel(i, c));
  }
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, pixels.data(), 0, nullptr)) {
    throw std::runtime_error("cannot write PNG '" + path.string() + "': " + image.message);
  }
}

Image read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw std::runtime_error("cannot read PNG '" + path.string() + "': " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw std::runtime_error("cannot decode PNG '" + path.string() + "': " + msg);
  }
  Image img(static_cast<int>(image.width), static_cast<int>(image.height));
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    img.set(i, Rgb(srgb_decode(pixels[3 * i] / 255.0), srgb_decode(pixels[3 * i + 1] / 255.0),
                   srgb_decode(pixels[3 * i + 2] / 255.0)));
  }
  return img;
}

}  // namespace stochsplat
