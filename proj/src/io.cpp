#include "symvs/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "symvs/errors.hpp"

namespace symvs {
namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool parse_double(std::string_view s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T load_le(const char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

template <typename T>
void store_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

float load_float_le(const char* p) { return std::bit_cast<float>(load_le<std::uint32_t>(p)); }
double load_double_le(const char* p) { return std::bit_cast<double>(load_le<std::uint64_t>(p)); }

// Reads whitespace-separated header tokens of a binary format, skipping
// '#' comments, and leaves `pos` after the single whitespace byte that
// terminates the last token.
class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : b_(bytes) {}

  std::string token(const char* what) {
    for (;;) {
      while (pos_ < b_.size() && std::isspace(static_cast<unsigned char>(b_[pos_]))) ++pos_;
      if (pos_ < b_.size() && b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
        continue;
      }
      break;
    }
    const std::size_t start = pos_;
    while (pos_ < b_.size() && !std::isspace(static_cast<unsigned char>(b_[pos_]))) ++pos_;
    if (pos_ == start) throw ParseError(std::string("truncated header, expected ") + what, 0);
    return b_.substr(start, pos_ - start);
  }

  long integer(const char* what) {
    const std::string t = token(what);
    long v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || v <= 0)
      throw ParseError(std::string("bad ") + what + " '" + t + "'", 0);
    return v;
  }

  // Consumes the single whitespace byte that ends the header.
  std::size_t finish() {
    if (pos_ >= b_.size() || !std::isspace(static_cast<unsigned char>(b_[pos_])))
      throw ParseError("header not terminated by whitespace", 0);
    return pos_ + 1;
  }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

// ---- camera ---------------------------------------------------------------

CameraFile parse_camera(const std::string& text) {
  std::vector<std::pair<int, std::vector<std::string_view>>> lines;
  std::size_t start = 0;
  int number = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++number;
    auto tokens = split_ws(std::string_view(text).substr(start, end - start));
    if (!tokens.empty()) lines.emplace_back(number, std::move(tokens));
    start = end + 1;
  }
  std::size_t k = 0;
  auto expect_keyword = [&](const char* kw) {
    if (k >= lines.size()) throw ParseError(std::string("missing '") + kw + "'", number);
    const auto& [ln, t] = lines[k];
    if (t.size() != 1 || t[0] != kw) throw ParseError(std::string("expected '") + kw + "'", ln);
    ++k;
  };
  auto numbers = [&](std::size_t count, bool at_least) {
    if (k >= lines.size()) throw ParseError("unexpected end of camera file", number);
    const auto& [ln, t] = lines[k];
    if (at_least ? t.size() < count : t.size() != count)
      throw ParseError("expected " + std::to_string(count) + " numbers, found " +
                           std::to_string(t.size()), ln);
    std::vector<double> v(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
      if (!parse_double(t[i], v[i]) || !std::isfinite(v[i]))
        throw ParseError("bad number '" + std::string(t[i]) + "'", ln);
    ++k;
    return std::pair{ln, v};
  };

  CameraFile cam;
  expect_keyword("extrinsic");
  for (int r = 0; r < 3; ++r) {
    auto [ln, v] = numbers(4, false);
    for (int c = 0; c < 3; ++c) cam.R(r, c) = v[c];
    cam.t[r] = v[3];
  }
  {
    auto [ln, v] = numbers(4, false);
    if (v[0] != 0.0 || v[1] != 0.0 || v[2] != 0.0 || v[3] != 1.0)
      throw ParseError("extrinsic bottom row must be 0 0 0 1", ln);
  }
  expect_keyword("intrinsic");
  for (int r = 0; r < 3; ++r) {
    auto [ln, v] = numbers(3, false);
    for (int c = 0; c < 3; ++c) cam.K(r, c) = v[c];
  }
  {
    auto [ln, v] = numbers(2, true);
    cam.depth_min = v[0];
    cam.depth_interval = v[1];
  }
  if (k != lines.size()) throw ParseError("trailing content", lines[k].first);
  return cam;
}

std::string format_camera(const CameraFile& cam) {
  std::string s = "extrinsic\n";
  for (int r = 0; r < 3; ++r)
    s += fmt17(cam.R(r, 0)) + " " + fmt17(cam.R(r, 1)) + " " + fmt17(cam.R(r, 2)) + " " +
         fmt17(cam.t[r]) + "\n";
  s += "0 0 0 1\n\nintrinsic\n";
  for (int r = 0; r < 3; ++r)
    s += fmt17(cam.K(r, 0)) + " " + fmt17(cam.K(r, 1)) + " " + fmt17(cam.K(r, 2)) + "\n";
  s += "\n" + fmt17(cam.depth_min) + " " + fmt17(cam.depth_interval) + "\n";
  return s;
}

CameraFile read_camera(const fs::path& path) {
  try {
    return parse_camera(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void write_camera(const fs::path& path, const CameraFile& cam) { write_file(path, format_camera(cam)); }

// ---- PFM ------------------------------------------------------------------

DepthMap parse_pfm(const std::string& bytes) {
  HeaderReader h(bytes);
  const std::string magic = h.token("magic");
  if (magic == "PF") throw UnsupportedVariant("colour PFM is not supported");
  if (magic != "Pf") throw ParseError("not a PFM file", 1);
  const long cols = h.integer("width");
  const long rows = h.integer("height");
  const std::string scale_tok = h.token("scale");
  double scale = 0.0;
  if (!parse_double(scale_tok, scale) || scale == 0.0 || !std::isfinite(scale))
    throw ParseError("bad PFM scale '" + scale_tok + "'", 3);
  if (scale > 0.0) throw UnsupportedVariant("big-endian PFM is not supported");
  const std::size_t offset = h.finish();
  const std::size_t need = static_cast<std::size_t>(rows) * cols * 4;
  if (bytes.size() - offset < need) throw ParseError("PFM pixel data is truncated", 0);
  Plane v(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c)
      v(rows - 1 - r, c) = load_float_le(bytes.data() + offset + (r * cols + c) * 4);
  return DepthMap::from_values(std::move(v));
}

std::string format_pfm(const DepthMap& depth) {
  const int rows = depth.rows(), cols = depth.cols();
  std::string s = "Pf\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n-1.0\n";
  s.reserve(s.size() + static_cast<std::size_t>(rows) * cols * 4);
  for (int r = rows - 1; r >= 0; --r)
    for (int c = 0; c < cols; ++c) {
      const float f = depth.valid(r, c) ? static_cast<float>(depth.values(r, c)) : 0.0f;
      store_le(s, std::bit_cast<std::uint32_t>(f));
    }
  return s;
}

DepthMap read_pfm(const fs::path& path) {
  try {
    return parse_pfm(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void write_pfm(const fs::path& path, const DepthMap& depth) { write_file(path, format_pfm(depth)); }

// ---- PGM / PPM -------------------------------------------------------------

Image parse_pnm(const std::string& bytes) {
  HeaderReader h(bytes);
  const std::string magic = h.token("magic");
  int nc;
  if (magic == "P5")
    nc = 1;
  else if (magic == "P6")
    nc = 3;
  else if (magic.size() == 2 && magic[0] == 'P')
    throw UnsupportedVariant("only binary PGM (P5) and PPM (P6) are supported");
  else
    throw ParseError("not a PGM/PPM file", 1);
  const long cols = h.integer("width");
  const long rows = h.integer("height");
  const long maxval = h.integer("maxval");
  if (maxval > 65535) throw ParseError("maxval above 65535", 0);
  const std::size_t offset = h.finish();
  const int bps = maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(rows) * cols * nc * bps;
  if (bytes.size() - offset < need) throw ParseError("image pixel data is truncated", 0);
  Image img(static_cast<int>(rows), static_cast<int>(cols), nc);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c)
      for (int ch = 0; ch < nc; ++ch) {
        unsigned v = *p++;
        if (bps == 2) v = (v << 8) | *p++;  // big-endian samples
        img(static_cast<int>(r), static_cast<int>(c), ch) = static_cast<double>(v) / maxval;
      }
  return img;
}

Image read_pnm(const fs::path& path) {
  try {
    return parse_pnm(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

std::string format_pnm(const Image& image, int maxval) {
  const int nc = image.num_channels();
  if (nc != 1 && nc != 3) throw InvalidArgument("PGM/PPM images need one or three channels");
  if (maxval != 255 && maxval != 65535) throw InvalidArgument("maxval must be 255 or 65535");
  std::string s = std::string(nc == 1 ? "P5" : "P6") + "\n" + std::to_string(image.cols()) + " " +
                  std::to_string(image.rows()) + "\n" + std::to_string(maxval) + "\n";
  for (int r = 0; r < image.rows(); ++r)
    for (int c = 0; c < image.cols(); ++c)
      for (int ch = 0; ch < nc; ++ch) {
        const auto v = static_cast<unsigned>(std::lround(std::clamp(image(r, c, ch), 0.0, 1.0) * maxval));
        if (maxval > 255) s.push_back(static_cast<char>(v >> 8));
        s.push_back(static_cast<char>(v & 0xff));
      }
  return s;
}

void write_pnm(const fs::path& path, const Image& image, int maxval) {
  write_file(path, format_pnm(image, maxval));
}

void write_mask_pgm(const fs::path& path, const Mask& mask) {
  Image img(static_cast<int>(mask.rows()), static_cast<int>(mask.cols()), 1);
  img.channels[0] = mask.cast<double>();
  write_pnm(path, img, 255);
}

// ---- PLY ------------------------------------------------------------------

namespace {

struct PlyProperty {
  std::string name;
  std::string type;
  int size = 0;
};

int ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

double ply_load(const char* p, const std::string& t) {
  if (t == "char" || t == "int8") return static_cast<std::int8_t>(*p);
  if (t == "uchar" || t == "uint8") return static_cast<std::uint8_t>(*p);
  if (t == "short" || t == "int16") return static_cast<std::int16_t>(load_le<std::uint16_t>(p));
  if (t == "ushort" || t == "uint16") return load_le<std::uint16_t>(p);
  if (t == "int" || t == "int32") return static_cast<std::int32_t>(load_le<std::uint32_t>(p));
  if (t == "uint" || t == "uint32") return load_le<std::uint32_t>(p);
  if (t == "float" || t == "float32") return load_float_le(p);
  return load_double_le(p);
}

}  // namespace

PointCloud parse_ply(const std::string& bytes) {
  std::size_t pos = 0;
  int line_no = 0;
  auto next_line = [&]() {
    if (pos >= bytes.size()) throw ParseError("truncated PLY header", line_no);
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos) throw ParseError("truncated PLY header", line_no);
    std::string line = bytes.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    ++line_no;
    return line;
  };
  if (next_line() != "ply") throw ParseError("not a PLY file", 1);
  bool binary = false, in_vertex = false, seen_format = false;
  long count = -1;
  std::vector<PlyProperty> props;
  for (;;) {
    const std::string line = next_line();
    const auto t = split_ws(line);
    if (t.empty() || t[0] == "comment" || t[0] == "obj_info") continue;
    if (t[0] == "end_header") break;
    if (t[0] == "format") {
      if (t.size() < 2) throw ParseError("bad format line", line_no);
      if (t[1] == "ascii") binary = false;
      else if (t[1] == "binary_little_endian") binary = true;
      else throw UnsupportedVariant("PLY format '" + std::string(t[1]) + "' is not supported");
      seen_format = true;
    } else if (t[0] == "element") {
      if (t.size() != 3) throw ParseError("bad element line", line_no);
      if (t[1] == "vertex") {
        in_vertex = true;
        if (!std::from_chars(t[2].data(), t[2].data() + t[2].size(), count).ptr || count < 0)
          throw ParseError("bad vertex count", line_no);
      } else {
        long n = 0;
        std::from_chars(t[2].data(), t[2].data() + t[2].size(), n);
        if (n != 0) throw UnsupportedVariant("PLY elements other than vertex are not supported");
        in_vertex = false;
      }
    } else if (t[0] == "property") {
      if (!in_vertex) continue;
      if (t.size() != 3) throw UnsupportedVariant("list properties are not supported");
      const std::string type(t[1]);
      const int size = ply_type_size(type);
      if (size == 0) throw ParseError("unknown property type '" + type + "'", line_no);
      props.push_back({std::string(t[2]), type, size});
    } else {
      throw ParseError("unexpected header line", line_no);
    }
  }
  if (!seen_format || count < 0) throw ParseError("PLY header lacks format or vertex element", line_no);
  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (int k = 0; k < static_cast<int>(props.size()); ++k) {
    const std::string& n = props[k].name;
    if (n == "x") ix = k;
    if (n == "y") iy = k;
    if (n == "z") iz = k;
    if (n == "red") ir = k;
    if (n == "green") ig = k;
    if (n == "blue") ib = k;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("PLY vertex lacks x, y or z", line_no);
  const bool colored = ir >= 0 && ig >= 0 && ib >= 0;

  PointCloud cloud;
  std::vector<double> row(props.size());
  std::size_t record = 0;
  for (const auto& p : props) record += p.size;
  std::istringstream ascii(binary ? std::string() : bytes.substr(pos));
  for (long n = 0; n < count; ++n) {
    if (binary) {
      if (bytes.size() - pos < record) throw ParseError("PLY vertex data is truncated", 0);
      for (std::size_t k = 0; k < props.size(); ++k) {
        row[k] = ply_load(bytes.data() + pos, props[k].type);
        pos += props[k].size;
      }
    } else {
      for (std::size_t k = 0; k < props.size(); ++k) {
        std::string tok;
        if (!(ascii >> tok) || !parse_double(tok, row[k]))
          throw ParseError("bad or missing vertex value", line_no + 1 + static_cast<int>(n));
        // a float property holds a float even when written as decimal text
        if (props[k].size == 4 && (props[k].type == "float" || props[k].type == "float32"))
          row[k] = static_cast<float>(row[k]);
      }
    }
    cloud.points.emplace_back(row[ix], row[iy], row[iz]);
    if (colored) {
      const bool is_uchar = props[ir].type == "uchar" || props[ir].type == "uint8";
      const double s = is_uchar ? 255.0 : 1.0;
      cloud.colors.emplace_back(row[ir] / s, row[ig] / s, row[ib] / s);
    }
  }
  return cloud;
}

std::string format_ply(const PointCloud& cloud, PlyFormat format) {
  const bool colored = cloud.has_colors();
  if (colored && cloud.colors.size() != cloud.points.size())
    throw InvalidArgument("cloud colours do not match its points");
  std::string s = "ply\nformat ";
  s += format == PlyFormat::kAscii ? "ascii" : "binary_little_endian";
  s += " 1.0\nelement vertex " + std::to_string(cloud.size()) +
       "\nproperty float x\nproperty float y\nproperty float z\n";
  if (colored) s += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  s += "end_header\n";
  auto to_byte = [](double c) {
    return static_cast<unsigned>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
  };
  char buf[128];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3f p = cloud.points[i].cast<float>();
    if (format == PlyFormat::kAscii) {
      std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g", p.x(), p.y(), p.z());
      s += buf;
      if (colored) {
        std::snprintf(buf, sizeof buf, " %u %u %u", to_byte(cloud.colors[i].x()),
                      to_byte(cloud.colors[i].y()), to_byte(cloud.colors[i].z()));
        s += buf;
      }
      s += "\n";
    } else {
      for (int k = 0; k < 3; ++k) store_le(s, std::bit_cast<std::uint32_t>(p[k]));
      if (colored)
        for (int k = 0; k < 3; ++k) s.push_back(static_cast<char>(to_byte(cloud.colors[i][k])));
    }
  }
  return s;
}

PointCloud read_ply(const fs::path& path) {
  try {
    return parse_ply(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void write_ply(const fs::path& path, const PointCloud& cloud, PlyFormat format) {
  write_file(path, format_ply(cloud, format));
}

// ---- bundles --------------------------------------------------------------

std::string view_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08d", index);
  return buf;
}

Bundle read_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("bundle directory not found: " + dir.string());
  Bundle b;
  for (int i = 0;; ++i) {
    const fs::path img = dir / "images" / (view_stem(i) + ".ppm");
    const fs::path img_gray = dir / "images" / (view_stem(i) + ".pgm");
    const fs::path cam = dir / "cams" / (view_stem(i) + "_cam.txt");
    const bool has_img = fs::exists(img) || fs::exists(img_gray);
    if (!has_img) {
      if (fs::exists(cam)) throw IoError("missing image for camera file " + cam.string());
      break;
    }
    if (!fs::exists(cam)) throw IoError("missing camera file " + cam.string());
    const CameraFile cf = read_camera(cam);
    CameraView v{cf.K, cf.R, cf.t, read_pnm(fs::exists(img) ? img : img_gray)};
    validate(v);
    b.views.push_back(std::move(v));
    b.cameras.push_back(cf);
  }
  if (b.views.empty()) throw IoError("bundle has no images: " + (dir / "images").string());
  validate_same_shape(b.views);
  if (fs::exists(dir / "gt")) {
    for (int i = 0; i < static_cast<int>(b.views.size()); ++i) {
      const fs::path p = dir / "gt" / (view_stem(i) + ".pfm");
      if (!fs::exists(p)) throw IoError("missing ground-truth depth " + p.string());
      DepthMap d = read_pfm(p);
      if (d.rows() != b.views[i].rows() || d.cols() != b.views[i].cols())
        throw ShapeMismatch("ground-truth depth " + p.string() + " does not match its image");
      b.gt_depths.push_back(std::move(d));
    }
  }
  if (fs::exists(dir / "run.cfg")) b.run_config = dir / "run.cfg";
  return b;
}

void write_bundle(const fs::path& dir, const Bundle& b) {
  for (int i = 0; i < static_cast<int>(b.views.size()); ++i) {
    const CameraView& v = b.views[i];
    const bool gray = v.image.num_channels() == 1;
    write_pnm(dir / "images" / (view_stem(i) + (gray ? ".pgm" : ".ppm")), v.image, 65535);
    CameraFile cf = i < static_cast<int>(b.cameras.size()) ? b.cameras[i] : CameraFile{};
    cf.K = v.K;
    cf.R = v.R;
    cf.t = v.t;
    write_camera(dir / "cams" / (view_stem(i) + "_cam.txt"), cf);
  }
  for (int i = 0; i < static_cast<int>(b.gt_depths.size()); ++i)
    write_pfm(dir / "gt" / (view_stem(i) + ".pfm"), b.gt_depths[i]);
}

std::vector<DepthMap> read_depth_dir(const fs::path& dir) {
  std::vector<DepthMap> out;
  for (int i = 0;; ++i) {
    const fs::path p = dir / (view_stem(i) + ".pfm");
    if (!fs::exists(p)) break;
    out.push_back(read_pfm(p));
  }
  if (out.empty()) throw IoError("no depth maps (00000000.pfm, ...) in " + dir.string());
  return out;
}

void write_depth_dir(const fs::path& dir, const std::vector<DepthMap>& depths) {
  for (int i = 0; i < static_cast<int>(depths.size()); ++i)
    write_pfm(dir / (view_stem(i) + ".pfm"), depths[i]);
}

}  // namespace symvs
