#pragma once

#include <filesystem>
#include <string>

#include "inscene/types.hpp"

namespace inscene {

// On-disk formats (binary NetPBM):
//   images  -> PPM P6, 8-bit RGB, v stored as round(v * 255) of the unit value
//   masks   -> PGM P5 maxval 255, values exactly {0, 255}
//   depths  -> PGM P5 maxval 65535, v in [-1, 1] stored as round((v+1)/2 * 65535)
// All writes go through a temp file + rename so readers never see partial files.

void write_image(const ImageRGB& img, const std::filesystem::path& path);
ImageRGB read_image(const std::filesystem::path& path);

void write_mask(const BinaryMask& mask, const std::filesystem::path& path);
BinaryMask read_mask(const std::filesystem::path& path);

void write_depth(const DepthMap& depth, const std::filesystem::path& path);
DepthMap read_depth(const std::filesystem::path& path, DepthNorm norm_tag);

// Writes `content` to `path` atomically (temp file in the same directory,
// then rename).
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

} // namespace inscene
