#include "core/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "core/error.hpp"

namespace synthdet {

uint8_t clamp_to_byte(double v) {
  long r = std::lround(v);
  if (r < 0) return 0;
  if (r > 255) return 255;
  return static_cast<uint8_t>(r);
}

void write_image(const Image8& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    throw Error(ErrorCode::kInvalidParam,
                "write_image: unsupported channel count " +
                    std::to_string(img.channels));
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::kIoError, "cannot open for write: " + path);
  char header[64];
  std::snprintf(header, sizeof(header), "P%c\n%d %d\n255\n",
                img.channels == 3 ? '6' : '5', img.width, img.height);
  out << header;
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) continue;
    tok.push_back(static_cast<char>(c));
    while ((c = in.peek()) != EOF && !std::isspace(c)) {
      tok.push_back(static_cast<char>(in.get()));
    }
    return tok;
  }
  return tok;
}

}  // namespace

Image8 read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "no such image: " + path);
  std::string magic = next_token(in);
  int channels;
  if (magic == "P6")
    channels = 3;
  else if (magic == "P5")
    channels = 1;
  else
    throw Error(ErrorCode::kParseError,
                path + ": unsupported raster format '" + magic +
                    "' (expected binary PPM/PGM)");
  int width, height, maxval;
  try {
    width = std::stoi(next_token(in));
    height = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParseError, path + ": malformed PNM header");
  }
  if (width < 1 || height < 1 || maxval != 255)
    throw Error(ErrorCode::kParseError,
                path + ": unsupported PNM header (need maxval 255)");
  in.get();  // single whitespace after maxval
  Image8 img(width, height, channels);
  in.read(reinterpret_cast<char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
    throw Error(ErrorCode::kParseError, path + ": truncated pixel data");
  return img;
}

}  // namespace synthdet
