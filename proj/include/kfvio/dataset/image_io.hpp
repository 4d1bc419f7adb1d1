#pragma once

#include <filesystem>

#include "kfvio/framecodec/frame.hpp"

namespace kfvio {

/// Loads an 8-bit grayscale PNG or binary PGM (P5). Colour PNGs are converted
/// to gray. Throws kIo / kParse.
Frame load_image(const std::filesystem::path& path);

void save_png(const std::filesystem::path& path, const Frame& frame);
void save_pgm(const std::filesystem::path& path, const Frame& frame);

}  // namespace kfvio
