#pragma once

#include <string>
#include <vector>

#include "tensor.hpp"

namespace gi {

// Lossless binary PPM (P6, 3-channel) / PGM (P5, 1-channel) raster IO.
// Tensor pixel values live in [-1, 1]; files store 8-bit samples.

void save_image(const Tensor& image, const std::string& path);  // [C,H,W] or [1,C,H,W]
Tensor load_image(const std::string& path);                     // -> [C,H,W]

// Nearest-neighbour resize + channel adaptation to (c, h, w).
Tensor adapt_image(const Tensor& image, int c, int h, int w);

struct IngestSummary {
  int loaded = 0;
  int skipped = 0;
  std::vector<std::string> warnings;
};

// Decodes every readable raster in a directory, sorted by filename,
// resized to the target shape and mapped to [-1, 1]. Unreadable files
// are skipped with a warning; an empty result is an error.
Tensor ingest_image_dir(const std::string& path, int c, int h, int w,
                        IngestSummary* summary = nullptr);

// One method per column, one target per row, 2-pixel separators.
void emit_image_grid(const std::vector<std::string>& column_names,
                     const std::vector<std::vector<Tensor>>& columns,
                     const std::string& path);

}  // namespace gi
