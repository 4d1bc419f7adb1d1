#include "kfvio/dataset/image_io.hpp"

#include <png.h>

#include <cctype>
#include <fstream>
#include <string>
#include <vector>

#include "kfvio/core/error.hpp"

namespace kfvio {

namespace {

Frame load_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    fail(ErrorCode::kIo, "cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorCode::kParse, "cannot decode PNG " + path.string() + ": " + image.message);
  }
  return Frame(static_cast<int>(image.width), static_cast<int>(image.height), std::move(buffer));
}

std::string next_token(std::istream& in) {
  std::string tok;
  while (in) {
    int c = in.peek();
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  in >> tok;
  return tok;
}

Frame load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  if (next_token(in) != "P5") fail(ErrorCode::kParse, path.string() + ": only binary P5 PGM is supported");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    fail(ErrorCode::kParse, path.string() + ": malformed PGM header");
  }
  if (maxval != 255) fail(ErrorCode::kParse, path.string() + ": PGM must be 8-bit");
  in.get();  // single whitespace after maxval
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!in) fail(ErrorCode::kParse, path.string() + ": PGM pixel data truncated");
  return Frame(w, h, std::move(pixels));
}

}  // namespace

Frame load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kIo, "missing image " + path.string());
  const auto ext = path.extension().string();
  if (ext == ".pgm" || ext == ".PGM") return load_pgm(path);
  return load_png(path);
}

void save_png(const std::filesystem::path& path, const Frame& frame) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, frame.pixels().data(), 0, nullptr))
    fail(ErrorCode::kIo, "cannot write PNG " + path.string() + ": " + image.message);
}

void save_pgm(const std::filesystem::path& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << "P5\n" << frame.width() << " " << frame.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.pixels().data()),
            static_cast<std::streamsize>(frame.pixels().size()));
}

}  // namespace kfvio
