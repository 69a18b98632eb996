#include "keysvm/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace keysvm {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path,
                       const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

// PNM header token reader: skips whitespace and '#' comments.
class PnmParser {
 public:
  PnmParser(const std::vector<std::uint8_t>& bytes,
            const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  int next_int() {
    skip_separators();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      fail(path_, "malformed PNM header");
    }
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > 1 << 30) fail(path_, "PNM header value out of range");
    }
    return int(value);
  }

  // One whitespace byte separates the header from pixel data.
  std::size_t data_offset() { return pos_ + 1; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  void skip_separators() {
    while (pos_ < bytes_.size()) {
      const std::uint8_t c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 2;  // past the magic
};

ImageTensor read_pnm(const std::vector<std::uint8_t>& bytes,
                     const std::filesystem::path& path) {
  const int channels = bytes[1] == '5' ? 1 : 3;
  PnmParser parser(bytes, path);
  const int width = parser.next_int();
  const int height = parser.next_int();
  const int maxval = parser.next_int();
  if (width < 1 || height < 1) fail(path, "bad PNM dimensions");
  if (maxval != 255) {
    fail(path, "unsupported PNM maxval " + std::to_string(maxval));
  }
  const std::size_t expected =
      std::size_t(width) * height * channels;
  const std::size_t offset = parser.data_offset();
  if (bytes.size() < offset + expected) fail(path, "truncated PNM data");

  ImageTensor img = ImageTensor::zeros(height, width, channels);
  for (std::size_t t = 0; t < expected; ++t) {
    img.data[t] = double(bytes[offset + t]);
  }
  return img;
}

ImageTensor read_png_file(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    fail(path, std::string("PNG read failed: ") + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;

  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&png);
    fail(path, std::string("PNG decode failed: ") + png.message);
  }

  ImageTensor img =
      ImageTensor::zeros(int(png.height), int(png.width), channels);
  for (std::size_t t = 0; t < buffer.size(); ++t) {
    img.data[t] = double(buffer[t]);
  }
  return img;
}

std::vector<std::uint8_t> to_bytes(const ImageTensor& image,
                                   const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(image.size());
  for (std::size_t t = 0; t < image.size(); ++t) {
    const double v = image.data[t];
    if (!(v >= 0.0 && v <= 255.0) || std::floor(v) != v) {
      fail(path, "pixel value " + std::to_string(v) +
                     " is not an integer in [0, 255]");
    }
    bytes[t] = std::uint8_t(v);
  }
  return bytes;
}

}  // namespace

ImageTensor read_image(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' &&
      bytes[2] == 'N' && bytes[3] == 'G') {
    return read_png_file(path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' &&
      (bytes[1] == '5' || bytes[1] == '6')) {
    return read_pnm(bytes, path);
  }
  fail(path, "unrecognized image format (need PNG or binary PGM/PPM)");
}

void write_pnm(const ImageTensor& image, const std::filesystem::path& path) {
  if (image.channels != 1 && image.channels != 3) {
    fail(path, "PNM supports 1 or 3 channels, got " +
                   std::to_string(image.channels));
  }
  const std::vector<std::uint8_t> bytes = to_bytes(image, path);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << (image.channels == 1 ? "P5" : "P6") << "\n"
      << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) fail(path, "write failed");
}

void write_png(const ImageTensor& image, const std::filesystem::path& path) {
  if (image.channels != 1 && image.channels != 3) {
    fail(path, "PNG writer supports 1 or 3 channels, got " +
                   std::to_string(image.channels));
  }
  const std::vector<std::uint8_t> bytes = to_bytes(image, path);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = png_uint_32(image.width);
  png.height = png_uint_32(image.height);
  png.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, bytes.data(), 0,
                               nullptr)) {
    fail(path, std::string("PNG write failed: ") + png.message);
  }
}

ImageTensor to_grayscale(const ImageTensor& image) {
  if (image.channels == 1) return image;
  if (image.channels != 3) {
    throw std::invalid_argument("grayscale conversion expects 1 or 3 channels");
  }
  ImageTensor out = ImageTensor::zeros(image.height, image.width, 1);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      const double luma = 0.299 * image.at(r, c, 0) +
                          0.587 * image.at(r, c, 1) +
                          0.114 * image.at(r, c, 2);
      out.at(r, c, 0) = std::round(luma);
    }
  }
  return out;
}

}  // namespace keysvm
