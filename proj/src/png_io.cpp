#include <png.h>

#include <cmath>
#include <cstring>

#include "eseman/error.hpp"
#include "eseman/raster.hpp"

namespace eseman {

void export_png(const RasterGrid& grid, const std::filesystem::path& path) {
  if (grid.width == 0 || grid.height == 0) throw Error("cannot export an empty grid");
  std::vector<png_byte> pixels(grid.cells.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const double v = std::clamp(grid.cells[i], 0.0, 1.0);
    pixels[i] = static_cast<png_byte>(std::lround(v * 255.0));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());

  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = grid.width;
  image.height = grid.height;
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error("cannot write " + path.string() + ": " + msg);
  }
}

RasterGrid import_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error("cannot read " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error("cannot decode " + path.string() + ": " + msg);
  }
  RasterGrid g(image.width, image.height);
  for (std::size_t i = 0; i < g.cells.size(); ++i) g.cells[i] = pixels[i] / 255.0;
  return g;
}

}  // namespace eseman
