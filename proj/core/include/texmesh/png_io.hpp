#pragma once

#include "texmesh/image.hpp"

#include <filesystem>
#include <vector>

namespace texmesh {

ImageRgb8 read_png_rgb8(const std::filesystem::path& path);
void write_png_rgb8(const std::filesystem::path& path, const ImageRgb8& image);

// Indexed-color PNG with an explicit 256-entry palette. Entries beyond the
// palette vector are written as black; index 255 is conventionally the
// unlabeled/ignore class.
void write_png_indexed(const std::filesystem::path& path, const ImageU8& indices,
                       const std::vector<Rgb8>& palette);

// Reads a palette or grayscale PNG back as raw 8-bit indices.
ImageU8 read_png_indexed(const std::filesystem::path& path);

}  // namespace texmesh
