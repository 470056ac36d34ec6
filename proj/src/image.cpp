#include "jsm/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace jsm {

Image::Image(int width, int height, double fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Image::Image(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("image data length does not match width*height");
}

bool Image::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

std::string ext_lower(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
bool next_token(std::istream& in, std::string& tok) {
  tok.clear();
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) break;
  }
  if (c == EOF) return false;
  tok.push_back(static_cast<char>(c));
  while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#') tok.push_back(static_cast<char>(in.get()));
  return true;
}

int header_int(std::istream& in, const std::filesystem::path& path, const char* what) {
  std::string tok;
  if (!next_token(in, tok)) throw IoError(path.string() + ": truncated PGM header (missing " + what + ")");
  try {
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PGM " + what + " '" + tok + "'");
  }
}

Image load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  if (!next_token(in, magic)) throw IoError(path.string() + ": empty file");
  if (magic != "P5" && magic != "P2") throw IoError(path.string() + ": not a grayscale PGM (magic " + magic + ")");
  const int w = header_int(in, path, "width");
  const int h = header_int(in, path, "height");
  const int maxval = header_int(in, path, "maxval");
  if (w <= 0 || h <= 0) throw IoError(path.string() + ": non-positive PGM dimensions");
  if (maxval <= 0 || maxval > 255) throw IoError(path.string() + ": unsupported PGM maxval " + std::to_string(maxval));
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const double scale = 255.0 / maxval;
  std::vector<double> data(n);
  if (magic == "P5") {
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw IoError(path.string() + ": truncated PGM pixel data");
    for (std::size_t i = 0; i < n; ++i) data[i] = bytes[i] * scale;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const int v = header_int(in, path, "pixel");
      if (v < 0 || v > maxval) throw IoError(path.string() + ": PGM sample out of range");
      data[i] = v * scale;
    }
  }
  return Image(w, h, std::move(data));
}

Image load_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw IoError(path.string() + ": " + img.message);
  const auto fmt = img.format;
  if (fmt != PNG_FORMAT_GRAY && fmt != PNG_FORMAT_RGB) {
    png_image_free(&img);
    throw IoError(path.string() + ": unsupported PNG layout (only 8-bit gray and 24-bit RGB)");
  }
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr))
    throw IoError(path.string() + ": " + img.message);
  const int w = static_cast<int>(img.width);
  const int h = static_cast<int>(img.height);
  std::vector<double> data(static_cast<std::size_t>(w) * h);
  if (fmt == PNG_FORMAT_GRAY) {
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = buf[i];
  } else {
    for (std::size_t i = 0; i < data.size(); ++i)
      data[i] = luminance_of(buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]);
  }
  return Image(w, h, std::move(data));
}

unsigned char to_byte(double v) {
  const double c = std::clamp(v, 0.0, 255.0);
  return static_cast<unsigned char>(std::floor(c + 0.5));
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  if (ext_lower(path) == ".png") return load_png(path);
  return load_pgm(path);
}

void save_image(const Image& img, const std::filesystem::path& path) {
  std::vector<unsigned char> bytes(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) bytes[i] = to_byte(img[i]);

  if (ext_lower(path) == ".png") {
    png_image out{};
    out.version = PNG_IMAGE_VERSION;
    out.width = static_cast<png_uint_32>(img.width());
    out.height = static_cast<png_uint_32>(img.height());
    out.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&out, path.string().c_str(), 0, bytes.data(), 0, nullptr))
      throw IoError("cannot write " + path.string() + ": " + out.message);
    return;
  }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

double mse(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("image dimensions differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

Image clamped(const Image& img, double lo, double hi) {
  Image out = img;
  for (double& v : out.data()) v = std::clamp(v, lo, hi);
  return out;
}

}  // namespace jsm
