#include "mlfx/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mlfx/common.hpp"

namespace mlfx {

namespace {

// Skips whitespace and '#' comment lines in a PNM header.
int next_header_int(std::istream& in, const std::string& path) {
  for (;;) {
    const int c = in.peek();
    if (c == EOF) throw IoError(path + ": truncated PNM header");
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else {
      break;
    }
  }
  int value = 0;
  if (!(in >> value)) throw IoError(path + ": malformed PNM header");
  return value;
}

std::uint16_t read_sample(std::istream& in, bool ascii, int maxval, const std::string& path) {
  if (ascii) {
    // Plain formats allow comments between samples too.
    try {
      return static_cast<std::uint16_t>(next_header_int(in, path));
    } catch (const IoError&) {
      throw IoError(path + ": truncated ASCII pixel data");
    }
  }
  if (maxval < 256) {
    const int c = in.get();
    if (c == EOF) throw IoError(path + ": truncated pixel data");
    return static_cast<std::uint16_t>(c);
  }
  const int hi = in.get();
  const int lo = in.get();
  if (hi == EOF || lo == EOF) throw IoError(path + ": truncated pixel data");
  return static_cast<std::uint16_t>((hi << 8) | lo);
}

void write_pnm(const Image& img, const std::string& path, bool color) {
  if (color && img.channels != 3) {
    throw ValidationError("PPM output requires a 3-channel image");
  }
  if (!color && img.channels != 1) {
    throw ValidationError("PGM output requires a single-channel image");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << (color ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n255\n";
  for (double v : img.pixels) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    out.put(static_cast<char>(std::lround(clamped * 255.0)));
  }
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace

Image Image::from_tensor(const Tensor& t) {
  if (t.shape().size() != 3) {
    throw ValidationError("image tensor must have shape [height, width, channels]");
  }
  Image img(t.shape()[0], t.shape()[1], t.shape()[2]);
  img.pixels = t.data();
  return img;
}

Image read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");

  char p = 0, kind = 0;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6')) {
    throw IoError(path + ": unsupported format (expected P2/P3/P5/P6)");
  }
  const bool ascii = (kind == '2' || kind == '3');
  const bool color = (kind == '3' || kind == '6');

  const int width = next_header_int(in, path);
  const int height = next_header_int(in, path);
  const int maxval = next_header_int(in, path);
  if (width <= 0 || height <= 0) throw IoError(path + ": non-positive dimensions");
  if (maxval <= 0 || maxval > 65535) throw IoError(path + ": maxval out of range");
  if (!ascii) in.get();  // single whitespace before binary samples

  Image img(static_cast<std::size_t>(height), static_cast<std::size_t>(width), color ? 3 : 1);
  for (double& v : img.pixels) {
    v = static_cast<double>(read_sample(in, ascii, maxval, path)) / maxval;
  }
  return img;
}

void write_pgm(const Image& img, const std::string& path) { write_pnm(img, path, false); }

void write_ppm(const Image& img, const std::string& path) { write_pnm(img, path, true); }

void write_label_pgm(const std::vector<std::uint32_t>& labels, std::size_t height,
                     std::size_t width, const std::string& path) {
  if (labels.size() != height * width) {
    throw ValidationError("label buffer does not match image dimensions");
  }
  std::uint32_t maxval = 1;
  for (std::uint32_t v : labels) maxval = std::max(maxval, v);
  if (maxval > 65535) throw ValidationError("too many regions for PGM label output");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "P5\n" << width << " " << height << "\n" << maxval << "\n";
  for (std::uint32_t v : labels) {
    if (maxval < 256) {
      out.put(static_cast<char>(v));
    } else {
      out.put(static_cast<char>(v >> 8));
      out.put(static_cast<char>(v & 0xff));
    }
  }
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace mlfx
