#include "core/background.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "core/error.hpp"

namespace synthdet {

namespace fs = std::filesystem;

BackgroundPool BackgroundPool::from_directory(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw Error(ErrorCode::kFileNotFound,
                "background directory not found: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    if (ext == ".ppm" || ext == ".pgm") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  BackgroundPool pool;
  for (const auto& p : paths) {
    Image8 img = read_image(p);
    if (img.channels == 1) {
      // Promote grayscale to RGB so the pool is uniform.
      Image8 rgb(img.width, img.height, 3);
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
          for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = img.at(x, y, 0);
      img = std::move(rgb);
    }
    pool.images_.push_back(std::move(img));
  }
  if (pool.images_.empty())
    throw Error(ErrorCode::kInvalidParam,
                "background directory has no .ppm/.pgm images: " + dir);
  return pool;
}

Image8 generate_procedural_background(int width, int height,
                                      const ProceduralBackgroundSpec& spec,
                                      Rng& rng) {
  Image8 img(width, height, 3);
  uint8_t base[3];
  for (auto& b : base) b = static_cast<uint8_t>(rng.uniform_int(256));
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = base[c];

  // Painter's-order random triangles.
  for (int k = 0; k < spec.polygon_count; ++k) {
    double ax = rng.uniform_real(0, width), ay = rng.uniform_real(0, height);
    double bx = rng.uniform_real(0, width), by = rng.uniform_real(0, height);
    double cx = rng.uniform_real(0, width), cy = rng.uniform_real(0, height);
    uint8_t col[3];
    for (auto& ch : col) ch = static_cast<uint8_t>(rng.uniform_int(256));
    int x0 = std::max(0, static_cast<int>(std::floor(std::min({ax, bx, cx}))));
    int x1 = std::min(width - 1,
                      static_cast<int>(std::ceil(std::max({ax, bx, cx}))));
    int y0 = std::max(0, static_cast<int>(std::floor(std::min({ay, by, cy}))));
    int y1 = std::min(height - 1,
                      static_cast<int>(std::ceil(std::max({ay, by, cy}))));
    auto edge = [](double px, double py, double qx, double qy, double rx,
                   double ry) {
      return (rx - px) * (qy - py) - (ry - py) * (qx - px);
    };
    double area = edge(ax, ay, bx, by, cx, cy);
    if (area == 0.0) continue;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        double px = x + 0.5, py = y + 0.5;
        double e0 = edge(ax, ay, bx, by, px, py);
        double e1 = edge(bx, by, cx, cy, px, py);
        double e2 = edge(cx, cy, ax, ay, px, py);
        bool inside = area > 0 ? (e0 >= 0 && e1 >= 0 && e2 >= 0)
                               : (e0 <= 0 && e1 <= 0 && e2 <= 0);
        if (!inside) continue;
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
      }
    }
  }

  // Bilinear value noise, one lattice per channel.
  int cell = std::max(2, spec.noise_cell);
  int gw = width / cell + 2, gh = height / cell + 2;
  std::vector<double> lattice(static_cast<size_t>(gw) * gh * 3);
  for (auto& v : lattice) v = rng.uniform_real(-1.0, 1.0);
  for (int y = 0; y < height; ++y) {
    double gy = static_cast<double>(y) / cell;
    int iy = static_cast<int>(gy);
    double fy = gy - iy;
    for (int x = 0; x < width; ++x) {
      double gx = static_cast<double>(x) / cell;
      int ix = static_cast<int>(gx);
      double fx = gx - ix;
      for (int c = 0; c < 3; ++c) {
        auto lat = [&](int lx, int ly) {
          return lattice[(static_cast<size_t>(ly) * gw + lx) * 3 + c];
        };
        double v = lat(ix, iy) * (1 - fx) * (1 - fy) +
                   lat(ix + 1, iy) * fx * (1 - fy) +
                   lat(ix, iy + 1) * (1 - fx) * fy +
                   lat(ix + 1, iy + 1) * fx * fy;
        img.at(x, y, c) = clamp_to_byte(img.at(x, y, c) +
                                        v * spec.noise_amplitude);
      }
    }
  }
  return img;
}

BackgroundPool BackgroundPool::procedural(const ProceduralBackgroundSpec& spec) {
  if (spec.count < 1)
    throw Error(ErrorCode::kInvalidParam,
                "procedural background count must be >= 1");
  if (spec.width < 1 || spec.height < 1)
    throw Error(ErrorCode::kInvalidParam,
                "procedural background size must be set");
  BackgroundPool pool;
  for (int i = 0; i < spec.count; ++i) {
    Rng rng = Rng::substream(spec.seed, static_cast<uint64_t>(i));
    pool.images_.push_back(
        generate_procedural_background(spec.width, spec.height, spec, rng));
  }
  return pool;
}

void BackgroundPool::validate_for_target(int target_width, int target_height,
                                         bool rotations_enabled) const {
  int need_w = target_width, need_h = target_height;
  if (rotations_enabled) {
    need_w = std::max(target_width, target_height);
    need_h = need_w;
  }
  for (size_t i = 0; i < images_.size(); ++i) {
    if (images_[i].width < need_w || images_[i].height < need_h)
      throw Error(ErrorCode::kBackgroundTooSmall,
                  "background image " + std::to_string(i) +
                      " is smaller than the required crop size");
  }
}

}  // namespace synthdet
