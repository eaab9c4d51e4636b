#include "mdepth/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <png.h>

#include "json.hpp"

namespace mdepth {

namespace fs = std::filesystem;

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

DepthFileFormat parse_depth_format(const std::string& name) {
  if (name == "pfm") return DepthFileFormat::Pfm;
  if (name == "png16" || name == "png") return DepthFileFormat::Png16;
  if (name == "rawf32" || name == "dkf") return DepthFileFormat::RawF32;
  throw UsageError("unknown depth format '" + name + "'");
}

DepthFileFormat depth_format_from_path(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".pfm") return DepthFileFormat::Pfm;
  if (ext == ".png") return DepthFileFormat::Png16;
  if (ext == ".dkf" || ext == ".raw") return DepthFileFormat::RawF32;
  throw UsageError("cannot infer depth format from '" + path.string() + "'");
}

namespace {

std::uint32_t load_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint32_t load_u32be(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[3]) | static_cast<std::uint32_t>(p[2]) << 8 |
         static_cast<std::uint32_t>(p[1]) << 16 | static_cast<std::uint32_t>(p[0]) << 24;
}

void store_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

float bits_to_float(std::uint32_t u) { return std::bit_cast<float>(u); }

std::uint32_t float_bits_for(double v, bool valid) {
  if (!valid && !std::isnan(v)) return std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
  return std::bit_cast<std::uint32_t>(static_cast<float>(v));
}

void check_dims(long long w, long long h, std::size_t offset) {
  if (w < 1 || h < 1 || w > kMaxDimension || h > kMaxDimension) {
    throw ParseError("implausible dimensions " + std::to_string(w) + "x" + std::to_string(h),
                     offset);
  }
}

bool usable_depth(double v) { return std::isfinite(v) && v > 0.0; }

// ---- PFM --------------------------------------------------------------

struct HeaderCursor {
  const std::vector<unsigned char>& bytes;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
  }
  std::string token() {
    skip_space();
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    if (start == pos) throw ParseError("PFM: truncated header", start);
    return {bytes.begin() + static_cast<std::ptrdiff_t>(start),
            bytes.begin() + static_cast<std::ptrdiff_t>(pos)};
  }
};

DepthMap decode_pfm(const std::vector<unsigned char>& bytes) {
  HeaderCursor cur{bytes};
  const auto magic = cur.token();
  if (magic != "Pf") throw ParseError("PFM: expected 'Pf' magic, got '" + magic + "'", 0);
  long long w = 0, h = 0;
  double scale = 0.0;
  std::size_t field = cur.pos;
  try {
    field = cur.pos;
    w = std::stoll(cur.token());
    field = cur.pos;
    h = std::stoll(cur.token());
    field = cur.pos;
    scale = std::stod(cur.token());
  } catch (const std::logic_error&) {
    throw ParseError("PFM: malformed header field", field);
  }
  check_dims(w, h, field);
  if (scale == 0.0 || !std::isfinite(scale)) throw ParseError("PFM: invalid scale", field);
  // Exactly one whitespace byte separates the header from the raster.
  if (cur.pos >= bytes.size() || !std::isspace(bytes[cur.pos])) {
    throw ParseError("PFM: missing separator after scale", cur.pos);
  }
  const std::size_t data = cur.pos + 1;
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 4;
  if (bytes.size() - data < need) {
    throw ParseError("PFM: truncated raster (need " + std::to_string(need) + " bytes)", bytes.size());
  }
  const bool little = scale < 0.0;
  DepthMap out(static_cast<int>(w), static_cast<int>(h));
  for (int row = 0; row < h; ++row) {
    const int y = static_cast<int>(h) - 1 - row;
    for (int x = 0; x < w; ++x) {
      const unsigned char* p = bytes.data() + data + (static_cast<std::size_t>(row) * w + x) * 4;
      const double v = bits_to_float(little ? load_u32le(p) : load_u32be(p));
      out.values(x, y) = v;
      out.mask(x, y) = usable_depth(v) ? 1 : 0;
    }
  }
  return out;
}

std::vector<unsigned char> encode_pfm(const DepthMap& map) {
  std::ostringstream header;
  header << "Pf\n" << map.width() << ' ' << map.height() << "\n-1\n";
  const auto h = header.str();
  std::vector<unsigned char> out(h.begin(), h.end());
  out.reserve(out.size() + map.values.size() * 4);
  for (int y = map.height() - 1; y >= 0; --y) {
    for (int x = 0; x < map.width(); ++x) store_u32le(out, float_bits_for(map.values(x, y), map.valid(x, y)));
  }
  return out;
}

// ---- RAWF32 -----------------------------------------------------------

DepthMap decode_raw(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 12) throw ParseError("RAWF32: truncated header", bytes.size());
  if (std::memcmp(bytes.data(), "DKF1", 4) != 0) throw ParseError("RAWF32: bad magic", 0);
  const auto w = load_u32le(bytes.data() + 4);
  const auto h = load_u32le(bytes.data() + 8);
  check_dims(w, h, 4);
  const std::size_t need = std::size_t{w} * h * 4;
  if (bytes.size() - 12 < need) {
    throw ParseError("RAWF32: truncated raster (need " + std::to_string(need) + " bytes)",
                     bytes.size());
  }
  if (bytes.size() - 12 > need) throw ParseError("RAWF32: trailing bytes after raster", 12 + need);
  DepthMap out(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double v = bits_to_float(load_u32le(bytes.data() + 12 + 4 * i));
    out.values[i] = v;
    out.mask[i] = usable_depth(v) ? 1 : 0;
  }
  return out;
}

std::vector<unsigned char> encode_raw(const DepthMap& map) {
  std::vector<unsigned char> out{'D', 'K', 'F', '1'};
  out.reserve(12 + map.values.size() * 4);
  store_u32le(out, static_cast<std::uint32_t>(map.width()));
  store_u32le(out, static_cast<std::uint32_t>(map.height()));
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    store_u32le(out, float_bits_for(map.values[i], map.mask[i] != 0));
  }
  return out;
}

// ---- PNG --------------------------------------------------------------

struct PngReadState {
  const std::vector<unsigned char>* bytes;
  std::size_t pos;
};

void png_read_bytes(png_structp png, png_bytep out, png_size_t n) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->pos + n > st->bytes->size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, st->bytes->data() + st->pos, n);
  st->pos += n;
}

void png_write_bytes(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_throw(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngReadState*>(png_get_error_ptr(png));
  throw ParseError(std::string("PNG: ") + msg, st ? st->pos : 0);
}

void png_warn(png_structp, png_const_charp msg) { warn(std::string("PNG: ") + msg); }

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;  // row-major, channel fastest
};

DecodedPng decode_png(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw ParseError("PNG: bad signature", 0);
  }
  PngReadState st{&bytes, 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &st, png_throw, png_warn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};
  png_set_read_fn(png, &st, png_read_bytes);
  png_read_info(png, info);
  DecodedPng d;
  const auto w = png_get_image_width(png, info);
  const auto h = png_get_image_height(png, info);
  check_dims(w, h, 16);
  d.width = static_cast<int>(w);
  d.height = static_cast<int>(h);
  d.bit_depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && d.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (d.bit_depth == 16) png_set_swap(png);  // host little endian
  png_read_update_info(png, info);
  d.channels = png_get_channels(png, info);
  d.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<unsigned char> raw(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  d.samples.resize(static_cast<std::size_t>(w) * h * d.channels);
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    if (d.bit_depth == 16) {
      std::uint16_t v;
      std::memcpy(&v, raw.data() + 2 * i, 2);
      d.samples[i] = v;
    } else {
      d.samples[i] = raw[i];
    }
  }
  return d;
}

std::vector<unsigned char> encode_png(int width, int height, int channels, int bit_depth,
                                      const std::vector<std::uint16_t>& samples) {
  std::vector<unsigned char> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  png_set_write_fn(png, &out, png_write_bytes, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int bytes_per = bit_depth / 8;
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels * bytes_per);
  for (int y = 0; y < height; ++y) {
    for (std::size_t k = 0; k < static_cast<std::size_t>(width) * channels; ++k) {
      const auto v = samples[static_cast<std::size_t>(y) * width * channels + k];
      if (bytes_per == 2) {
        row[2 * k] = static_cast<unsigned char>(v >> 8);  // PNG is big endian
        row[2 * k + 1] = static_cast<unsigned char>(v & 0xff);
      } else {
        row[k] = static_cast<unsigned char>(v);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  return out;
}

DepthMap decode_png16(const std::vector<unsigned char>& bytes, double scale) {
  const auto d = decode_png(bytes);
  if (d.channels != 1 || d.bit_depth != 16) {
    throw ParseError("PNG16: expected 16-bit grayscale", 0);
  }
  DepthMap out(d.width, d.height);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const auto v = d.samples[i];
    out.values[i] = v * scale;
    out.mask[i] = v != 0 ? 1 : 0;
  }
  return out;
}

std::vector<unsigned char> encode_png16(const DepthMap& map, double scale, WriteStats& stats) {
  std::vector<std::uint16_t> samples(map.values.size(), 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!map.mask[i] || !std::isfinite(map.values[i])) continue;
    const double units = std::round(map.values[i] / scale);
    if (units < 1.0 || units > 65535.0) ++stats.clipped;
    samples[i] = static_cast<std::uint16_t>(std::clamp(units, 1.0, 65535.0));
  }
  if (stats.clipped > 0) {
    warn("PNG16: clipped " + std::to_string(stats.clipped) + " values outside [scale, 65535*scale]");
  }
  return encode_png(map.width(), map.height(), 1, 16, samples);
}

}  // namespace

DepthMap decode_depth(const std::vector<unsigned char>& bytes, DepthFileFormat format,
                      double scale) {
  switch (format) {
    case DepthFileFormat::Pfm: return decode_pfm(bytes);
    case DepthFileFormat::RawF32: return decode_raw(bytes);
    case DepthFileFormat::Png16:
      if (!(scale > 0.0)) throw UsageError("PNG16: scale must be positive");
      return decode_png16(bytes, scale);
  }
  throw UsageError("unknown depth format");
}

std::vector<unsigned char> encode_depth(const DepthMap& map, DepthFileFormat format,
                                        double scale, WriteStats* stats) {
  WriteStats local;
  WriteStats& s = stats ? *stats : local;
  switch (format) {
    case DepthFileFormat::Pfm: return encode_pfm(map);
    case DepthFileFormat::RawF32: return encode_raw(map);
    case DepthFileFormat::Png16:
      if (!(scale > 0.0)) throw UsageError("PNG16: scale must be positive");
      return encode_png16(map, scale, s);
  }
  throw UsageError("unknown depth format");
}

DepthMap read_depth(const fs::path& path, DepthFileFormat format, double scale) {
  try {
    return decode_depth(read_file(path), format, scale);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

DepthMap read_depth(const fs::path& path) { return read_depth(path, depth_format_from_path(path)); }

WriteStats write_depth(const DepthMap& map, const fs::path& path, DepthFileFormat format,
                       double scale) {
  WriteStats stats;
  write_file(path, encode_depth(map, format, scale, &stats));
  return stats;
}

RgbImage read_rgb(const fs::path& path) {
  const auto d = decode_png(read_file(path));
  if (d.channels != 1 && d.channels != 3) throw ParseError("RGB PNG: unsupported channel count", 0);
  const double maxv = d.bit_depth == 16 ? 65535.0 : 255.0;
  RgbImage img(d.width, d.height);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (d.channels == 1) {
      img[i] = Eigen::Vector3d::Constant(d.samples[i] / maxv);
    } else {
      img[i] = Eigen::Vector3d(d.samples[3 * i], d.samples[3 * i + 1], d.samples[3 * i + 2]) / maxv;
    }
  }
  return img;
}

void write_rgb(const RgbImage& image, const fs::path& path) {
  std::vector<std::uint16_t> samples(image.size() * 3);
  for (std::size_t i = 0; i < image.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      samples[3 * i + c] =
          static_cast<std::uint16_t>(std::lround(std::clamp(image[i][c], 0.0, 1.0) * 255.0));
    }
  }
  write_file(path, encode_png(image.width(), image.height(), 3, 8, samples));
}

Grid<double> read_scalar_grid(const fs::path& path) {
  const auto d = decode_raw(read_file(path));
  return d.values;
}

void write_scalar_grid(const Grid<double>& grid, const fs::path& path) {
  DepthMap d;
  d.values = grid;
  d.mask = ValidityMask(grid.width(), grid.height(), 1);
  write_file(path, encode_raw(d));
}

// ---- camera -----------------------------------------------------------

Intrinsics parse_camera(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("camera: ") + e.what(), e.byte);
  }
  if (!j.is_object()) throw ParseError("camera: expected a JSON object", 0);
  const auto number = [&](const char* key) -> double {
    if (!j.contains(key)) throw ParseError(std::string("camera: missing field '") + key + "'", 0);
    if (!j[key].is_number()) throw ParseError(std::string("camera: field '") + key + "' is not a number", 0);
    return j[key].get<double>();
  };
  static const std::set<std::string> known{"fx", "fy", "cx", "cy", "width", "height", "K"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) warn("camera: ignoring unknown field '" + key + "'");
  }

  Intrinsics K;
  if (j.contains("K")) {
    std::vector<double> flat;
    const auto& m = j["K"];
    if (m.is_array() && m.size() == 3 && m[0].is_array()) {
      for (const auto& row : m) {
        if (!row.is_array() || row.size() != 3) throw ParseError("camera: field 'K' must be 3x3", 0);
        for (const auto& v : row) flat.push_back(v.get<double>());
      }
    } else if (m.is_array() && m.size() == 9) {
      for (const auto& v : m) flat.push_back(v.get<double>());
    } else {
      throw ParseError("camera: field 'K' must be 3x3", 0);
    }
    if (flat[1] != 0.0) warn("camera: ignoring skew in K");
    K.fx = flat[0];
    K.cx = flat[2];
    K.fy = flat[4];
    K.cy = flat[5];
  } else {
    K.fx = number("fx");
    K.fy = number("fy");
    K.cx = number("cx");
    K.cy = number("cy");
  }
  const double w = number("width");
  const double h = number("height");
  if (w != std::floor(w) || h != std::floor(h) || w > kMaxDimension || h > kMaxDimension) {
    throw ParseError("camera: width/height must be integers within range", 0);
  }
  K.width = static_cast<int>(w);
  K.height = static_cast<int>(h);
  K.validate();
  return K;
}

Intrinsics read_camera(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_camera(std::string(bytes.begin(), bytes.end()));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

void write_camera(const Intrinsics& K, const fs::path& path) {
  nlohmann::ordered_json j;
  j["fx"] = K.fx;
  j["fy"] = K.fy;
  j["cx"] = K.cx;
  j["cy"] = K.cy;
  j["width"] = K.width;
  j["height"] = K.height;
  const auto s = j.dump(2) + "\n";
  write_file(path, {s.begin(), s.end()});
}

// ---- manifest ---------------------------------------------------------

DatasetManifest parse_manifest(const std::string& text, const fs::path& base_dir) {
  DatasetManifest m;
  std::set<std::string> preds;
  std::size_t pos = 0;
  const auto resolve = [&](const std::string& field) -> fs::path {
    if (field.empty() || field == "-") return {};
    const fs::path p(field);
    return p.is_absolute() ? p : base_dir / p;
  };
  while (pos < text.size()) {
    const std::size_t line_start = pos;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    if (line[first] == '@') {
      std::istringstream is(line.substr(first + 1));
      std::string key;
      is >> key;
      if (key == "dataset") {
        std::getline(is >> std::ws, m.dataset);
      } else if (key == "max_depth") {
        if (!(is >> m.max_depth) || !(m.max_depth > 0.0)) {
          throw ParseError("manifest: max_depth must be a positive number", line_start);
        }
      } else {
        warn("manifest: ignoring unknown directive '@" + key + "'");
      }
      continue;
    }

    std::vector<std::string> fields;
    std::size_t s = 0;
    while (true) {
      const auto t = line.find('\t', s);
      fields.push_back(line.substr(s, t == std::string::npos ? std::string::npos : t - s));
      if (t == std::string::npos) break;
      s = t + 1;
    }
    if (fields.size() < 4 || fields.size() > 6) {
      throw ParseError("manifest: expected 4 to 6 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       line_start);
    }
    if (fields[1].empty() || fields[1] == "-" || fields[2].empty() || fields[2] == "-") {
      throw ParseError("manifest: pred and gt paths are required", line_start);
    }
    ManifestRecord r;
    r.rgb = resolve(fields[0]);
    r.pred = resolve(fields[1]);
    r.gt = resolve(fields[2]);
    r.camera = resolve(fields[3]);
    if (fields.size() > 4) r.uncertainty = resolve(fields[4]);
    if (fields.size() > 5) r.pred_camera = resolve(fields[5]);
    if (!preds.insert(r.pred.string()).second) {
      warn("manifest: duplicate prediction path '" + r.pred.string() + "'");
    }
    m.records.push_back(std::move(r));
  }
  if (!m.records.empty() && !(m.max_depth > 0.0)) {
    throw ParseError("manifest: '@max_depth' is required when records are present", 0);
  }
  return m;
}

DatasetManifest read_manifest(const fs::path& path) {
  const auto bytes = read_file(path);
  return parse_manifest(std::string(bytes.begin(), bytes.end()), path.parent_path());
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  std::ostringstream os;
  os << "# rgb\tpred\tgt\tcamera\tuncertainty\tpred_camera\n";
  if (!m.dataset.empty()) os << "@dataset " << m.dataset << '\n';
  os.precision(17);
  os << "@max_depth " << m.max_depth << '\n';
  const auto field = [](const fs::path& p) { return p.empty() ? std::string("-") : p.generic_string(); };
  for (const auto& r : m.records) {
    os << field(r.rgb) << '\t' << field(r.pred) << '\t' << field(r.gt) << '\t' << field(r.camera)
       << '\t' << field(r.uncertainty) << '\t' << field(r.pred_camera) << '\n';
  }
  const auto s = os.str();
  write_file(path, {s.begin(), s.end()});
}

}  // namespace mdepth
