#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "xgrasp/errors.hpp"

namespace xgrasp {

// Binary Netpbm readers/writers. PGM16 rasters are big-endian per the
// format; PGM8/PPM8 are single-byte samples.

namespace detail {

inline void skip_pnm_whitespace(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      in.get();
    } else {
      return;
    }
  }
}

inline int read_pnm_int(std::istream& in) {
  skip_pnm_whitespace(in);
  int v = 0;
  if (!(in >> v)) throw IoError("malformed PNM header");
  return v;
}

inline void read_pnm_header(std::istream& in, const char* magic, int& w, int& h, int& maxval) {
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (!in || m0 != magic[0] || m1 != magic[1]) {
    throw IoError(std::string("expected ") + magic + " image");
  }
  w = read_pnm_int(in);
  h = read_pnm_int(in);
  maxval = read_pnm_int(in);
  in.get();  // single whitespace before the raster
  if (w <= 0 || h <= 0) throw IoError("bad PNM dimensions");
}

}  // namespace detail

inline void write_pgm16(const std::filesystem::path& path, int width, int height,
                        const std::vector<std::uint16_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("pgm16 pixel count mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << width << " " << height << "\n65535\n";
  std::vector<char> raw(pixels.size() * 2);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    raw[2 * i] = static_cast<char>(pixels[i] >> 8);
    raw[2 * i + 1] = static_cast<char>(pixels[i] & 0xff);
  }
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("short write to " + path.string());
}

inline std::vector<std::uint16_t> read_pgm16(const std::filesystem::path& path, int& width,
                                             int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  int maxval = 0;
  detail::read_pnm_header(in, "P5", width, height, maxval);
  if (maxval != 65535) throw IoError("expected 16-bit PGM: " + path.string());
  std::vector<char> raw(static_cast<std::size_t>(width) * height * 2);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!in) throw IoError("truncated PGM raster: " + path.string());
  std::vector<std::uint16_t> pixels(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<std::uint16_t>((static_cast<unsigned char>(raw[2 * i]) << 8) |
                                           static_cast<unsigned char>(raw[2 * i + 1]));
  }
  return pixels;
}

inline void write_pgm8(const std::filesystem::path& path, int width, int height,
                       const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("pgm8 pixel count mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("short write to " + path.string());
}

inline std::vector<std::uint8_t> read_pgm8(const std::filesystem::path& path, int& width,
                                           int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  int maxval = 0;
  detail::read_pnm_header(in, "P5", width, height, maxval);
  if (maxval != 255) throw IoError("expected 8-bit PGM: " + path.string());
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!in) throw IoError("truncated PGM raster: " + path.string());
  return pixels;
}

// Interleaved RGB triples.
inline void write_ppm8(const std::filesystem::path& path, int width, int height,
                       const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height * 3) {
    throw DimensionError("ppm8 pixel count mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("short write to " + path.string());
}

inline std::vector<std::uint8_t> read_ppm8(const std::filesystem::path& path, int& width,
                                           int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  int maxval = 0;
  detail::read_pnm_header(in, "P6", width, height, maxval);
  if (maxval != 255) throw IoError("expected 8-bit PPM: " + path.string());
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height * 3);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!in) throw IoError("truncated PPM raster: " + path.string());
  return pixels;
}

inline std::uint8_t quantize8(double v) {
  if (v < 0.0) v = 0.0;
  if (v > 1.0) v = 1.0;
  return static_cast<std::uint8_t>(v * 255.0 + 0.5);  // round half up
}

}  // namespace xgrasp
