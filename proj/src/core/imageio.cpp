#include "imageio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace gi {

namespace fs = std::filesystem;

static uint8_t to_byte(float v) {
  float u = (v + 1.0f) * 0.5f;  // [-1,1] -> [0,1]
  if (u < 0.0f) u = 0.0f;
  if (u > 1.0f) u = 1.0f;
  return static_cast<uint8_t>(std::lround(u * 255.0f));
}

static float from_byte(uint8_t b) {
  return static_cast<float>(b) / 255.0f * 2.0f - 1.0f;
}

void save_image(const Tensor& image, const std::string& path) {
  Tensor img = image;
  if (img.rank() == 4) {
    if (img.dim(0) != 1) throw ShapeError("save_image: batch must be 1");
    img.reshape({image.dim(1), image.dim(2), image.dim(3)});
  }
  if (img.rank() != 3 || (img.dim(0) != 1 && img.dim(0) != 3))
    throw ShapeError("save_image: expected [C,H,W] with C in {1,3}");
  int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  // Write to temp then rename so failures leave no partial file.
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + tmp);
    f << (c == 3 ? "P6" : "P5") << "\n" << w << " " << h << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(w) * c);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < c; ++ch)
          row[x * c + ch] = to_byte(img[(static_cast<size_t>(ch) * h + y) * w + x]);
      f.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw IoError("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

static void skip_ws_and_comments(std::istream& f) {
  for (;;) {
    int ch = f.peek();
    if (ch == '#') {
      std::string line;
      std::getline(f, line);
    } else if (std::isspace(ch)) {
      f.get();
    } else {
      return;
    }
  }
}

Tensor load_image(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open image: " + path);
  std::string magic(2, '\0');
  f.read(magic.data(), 2);
  int c;
  if (magic == "P6")
    c = 3;
  else if (magic == "P5")
    c = 1;
  else
    throw IoError("unsupported image format in " + path +
                  " (expected binary PPM/PGM)");
  int w = 0, h = 0, maxval = 0;
  skip_ws_and_comments(f);
  f >> w;
  skip_ws_and_comments(f);
  f >> h;
  skip_ws_and_comments(f);
  f >> maxval;
  if (!f || w < 1 || h < 1 || maxval != 255)
    throw IoError("bad raster header in " + path);
  f.get();  // single whitespace after maxval
  std::vector<uint8_t> raw(static_cast<size_t>(w) * h * c);
  f.read(reinterpret_cast<char*>(raw.data()),
         static_cast<std::streamsize>(raw.size()));
  if (!f) throw IoError("truncated raster data in " + path);
  Tensor img({c, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        img[(static_cast<size_t>(ch) * h + y) * w + x] =
            from_byte(raw[(static_cast<size_t>(y) * w + x) * c + ch]);
  return img;
}

Tensor adapt_image(const Tensor& image, int c, int h, int w) {
  if (image.rank() != 3) throw ShapeError("adapt_image: expected [C,H,W]");
  int sc = image.dim(0), sh = image.dim(1), sw = image.dim(2);
  Tensor out({c, h, w});
  for (int ch = 0; ch < c; ++ch) {
    // channel adaptation: replicate gray to RGB or average RGB to gray
    for (int y = 0; y < h; ++y) {
      int sy = std::min(sh - 1, y * sh / h);
      for (int x = 0; x < w; ++x) {
        int sx = std::min(sw - 1, x * sw / w);
        float v;
        if (sc == c) {
          v = image[(static_cast<size_t>(ch) * sh + sy) * sw + sx];
        } else if (sc == 1) {
          v = image[(static_cast<size_t>(sy)) * sw + sx];
        } else {
          float acc = 0.0f;
          for (int k = 0; k < sc; ++k)
            acc += image[(static_cast<size_t>(k) * sh + sy) * sw + sx];
          v = acc / sc;
        }
        out[(static_cast<size_t>(ch) * h + y) * w + x] = v;
      }
    }
  }
  return out;
}

Tensor ingest_image_dir(const std::string& path, int c, int h, int w,
                        IngestSummary* summary) {
  if (!fs::is_directory(path))
    throw IoError("not a directory: " + path);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(path))
    if (e.is_regular_file()) files.push_back(e.path().string());
  std::sort(files.begin(), files.end());

  std::vector<Tensor> images;
  IngestSummary local;
  IngestSummary& sum = summary ? *summary : local;
  for (const auto& file : files) {
    try {
      images.push_back(adapt_image(load_image(file), c, h, w));
      ++sum.loaded;
    } catch (const Error& e) {
      ++sum.skipped;
      sum.warnings.push_back(std::string("skipped ") + file + ": " + e.what());
    }
  }
  if (images.empty())
    throw IoError("no readable images in directory: " + path);
  Tensor batch({static_cast<int>(images.size()), c, h, w});
  const size_t img_sz = static_cast<size_t>(c) * h * w;
  for (size_t i = 0; i < images.size(); ++i)
    std::copy_n(images[i].data(), img_sz, batch.data() + i * img_sz);
  return batch;
}

void emit_image_grid(const std::vector<std::string>& column_names,
                     const std::vector<std::vector<Tensor>>& columns,
                     const std::string& path) {
  if (columns.empty() || columns[0].empty())
    throw ConfigError("emit_image_grid: no images");
  if (column_names.size() != columns.size())
    throw ConfigError("emit_image_grid: name/column count mismatch");
  const size_t rows = columns[0].size();
  const Tensor& first = columns[0][0];
  Tensor probe = first;
  if (probe.rank() == 4) probe.reshape({first.dim(1), first.dim(2), first.dim(3)});
  int c = probe.dim(0), h = probe.dim(1), w = probe.dim(2);
  for (const auto& col : columns) {
    if (col.size() != rows)
      throw ShapeError("emit_image_grid: ragged columns");
    for (const auto& img : col)
      if (img.size() != probe.size())
        throw ShapeError("emit_image_grid: image shape mismatch");
  }
  const int sep = 2;
  int gh = static_cast<int>(rows) * h + (static_cast<int>(rows) - 1) * sep;
  int gw = static_cast<int>(columns.size()) * w +
           (static_cast<int>(columns.size()) - 1) * sep;
  Tensor grid({c, gh, gw});
  grid.fill(1.0f);  // white separators
  for (size_t col = 0; col < columns.size(); ++col) {
    for (size_t row = 0; row < rows; ++row) {
      Tensor img = columns[col][row];
      if (img.rank() == 4) img.reshape({c, h, w});
      int oy = static_cast<int>(row) * (h + sep);
      int ox = static_cast<int>(col) * (w + sep);
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            grid[(static_cast<size_t>(ch) * gh + oy + y) * gw + ox + x] =
                img[(static_cast<size_t>(ch) * h + y) * w + x];
    }
  }
  try {
    save_image(grid, path);
  } catch (const Error& e) {
    throw IoError("emit_image_grid failed for " + path + ": " + e.what());
  }
}

}  // namespace gi
