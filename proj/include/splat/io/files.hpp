#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>
#include <json.hpp>

#include "splat/core.hpp"
#include "splat/gir.hpp"

namespace splat {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw FormatError("cannot open: " + path);
  const std::streamsize n = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(n));
  in.read(reinterpret_cast<char*>(bytes.data()), n);
  if (!in) throw FormatError("read failed: " + path);
  return bytes;
}

inline void write_file(const std::string& path,
                       const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path);
}

// ---- camera --------------------------------------------------------------

inline json camera_to_json(const CameraModel& cam) {
  const Quat q(cam.rotation);
  return json{{"fx", cam.fx},
              {"fy", cam.fy},
              {"cx", cam.cx},
              {"cy", cam.cy},
              {"rotation", {q.w(), q.x(), q.y(), q.z()}},
              {"translation",
               {cam.translation.x(), cam.translation.y(), cam.translation.z()}},
              {"width", cam.width},
              {"height", cam.height},
              {"near", cam.near},
              {"far", cam.far}};
}

inline CameraModel camera_from_json(const json& j) {
  try {
    CameraModel cam;
    cam.fx = j.at("fx");
    cam.fy = j.at("fy");
    cam.cx = j.at("cx");
    cam.cy = j.at("cy");
    const auto& q = j.at("rotation");
    cam.rotation =
        Quat(q.at(0), q.at(1), q.at(2), q.at(3)).normalized().toRotationMatrix();
    const auto& t = j.at("translation");
    cam.translation = Vec3(t.at(0), t.at(1), t.at(2));
    cam.width = j.at("width");
    cam.height = j.at("height");
    cam.near = j.value("near", 0.01);
    cam.far = j.value("far", 1000.0);
    if (auto err = cam.check()) throw FormatError("camera: " + *err);
    return cam;
  } catch (const json::exception& e) {
    throw FormatError(std::string("camera: ") + e.what());
  }
}

inline void save_camera(const std::string& path, const CameraModel& cam) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path);
  out << camera_to_json(cam).dump(2) << "\n";
}

inline CameraModel load_camera(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return camera_from_json(j);
}

// ---- lossless float image ("FIM1") --------------------------------------
// Internal format for oracle comparisons and report export:
// magic | u32 width | u32 height | u32 channels | f32 data (row-major).

inline std::vector<std::uint8_t> serialize_float_image(const ImageF& img) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + img.data.size() * 4);
  detail::put_bytes(out, "FIM1", 4);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(img.width));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(img.height));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(img.channels));
  detail::put_bytes(out, img.data.data(), img.data.size() * 4);
  return out;
}

inline ImageF deserialize_float_image(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r{bytes};
  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, "FIM1", 4) != 0)
    throw FormatError("bad magic at offset 0, expected \"FIM1\"");
  const auto w = r.get<std::uint32_t>("width");
  const auto h = r.get<std::uint32_t>("height");
  const auto c = r.get<std::uint32_t>("channels");
  ImageF img(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
  r.read(img.data.data(), img.data.size() * 4, "pixel data");
  return img;
}

// ---- PNG (8-bit RGB, zlib-deflated) --------------------------------------

namespace detail {

inline void png_chunk(std::vector<std::uint8_t>& out, const char type[4],
                      const std::vector<std::uint8_t>& payload) {
  const std::uint32_t len = static_cast<std::uint32_t>(payload.size());
  for (int i = 3; i >= 0; --i) out.push_back((len >> (8 * i)) & 0xff);
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const auto crc = static_cast<std::uint32_t>(
      ::crc32(0, out.data() + crc_start, static_cast<uInt>(4 + payload.size())));
  for (int i = 3; i >= 0; --i) out.push_back((crc >> (8 * i)) & 0xff);
}

}  // namespace detail

/// Encodes an RGB float image (clamped to [0,1]) as an 8-bit PNG.
inline std::vector<std::uint8_t> encode_png(const ImageF& img) {
  if (img.channels != 3) throw InvariantError("encode_png expects 3 channels");
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (1 + img.width * 3));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter: none
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(img.at(x, y, c), 0.0f, 1.0f);
        raw.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
      }
  }
  uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> deflated(bound);
  if (::compress2(deflated.data(), &bound, raw.data(),
                  static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw std::runtime_error("png deflate failed");
  deflated.resize(bound);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  for (int i = 3; i >= 0; --i)
    ihdr.push_back((static_cast<std::uint32_t>(img.width) >> (8 * i)) & 0xff);
  for (int i = 3; i >= 0; --i)
    ihdr.push_back((static_cast<std::uint32_t>(img.height) >> (8 * i)) & 0xff);
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // interlace
  detail::png_chunk(out, "IHDR", ihdr);
  detail::png_chunk(out, "IDAT", deflated);
  detail::png_chunk(out, "IEND", {});
  return out;
}

inline void save_png(const std::string& path, const ImageF& img) {
  write_file(path, encode_png(img));
}

/// Decodes 8-bit truecolor non-interlaced PNG (the subset encode_png emits).
inline ImageF decode_png(std::span<const std::uint8_t> bytes) {
  static const std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSig, 8) != 0)
    throw FormatError("not a PNG file");
  std::size_t off = 8;
  std::uint32_t width = 0, height = 0;
  std::vector<std::uint8_t> idat;
  auto be32 = [&](std::size_t at) {
    return (std::uint32_t(bytes[at]) << 24) | (std::uint32_t(bytes[at + 1]) << 16) |
           (std::uint32_t(bytes[at + 2]) << 8) | std::uint32_t(bytes[at + 3]);
  };
  while (off + 8 <= bytes.size()) {
    const std::uint32_t len = be32(off);
    if (off + 12 + len > bytes.size())
      throw FormatError("PNG truncated at offset " + std::to_string(off));
    const char* type = reinterpret_cast<const char*>(bytes.data() + off + 4);
    const std::uint8_t* payload = bytes.data() + off + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      width = be32(off + 8);
      height = be32(off + 12);
      if (payload[8] != 8 || payload[9] != 2 || payload[12] != 0)
        throw FormatError("unsupported PNG variant (need 8-bit RGB)");
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    off += 12 + len;
  }
  if (width == 0 || height == 0 || idat.empty())
    throw FormatError("PNG missing IHDR/IDAT");

  const std::size_t stride = static_cast<std::size_t>(width) * 3;
  std::vector<std::uint8_t> raw((stride + 1) * height);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (::uncompress(raw.data(), &raw_len, idat.data(),
                   static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != raw.size())
    throw FormatError("PNG inflate failed");

  ImageF img(static_cast<int>(width), static_cast<int>(height), 3);
  std::vector<std::uint8_t> prev(stride, 0), cur(stride);
  for (std::uint32_t y = 0; y < height; ++y) {
    const std::uint8_t* row = raw.data() + y * (stride + 1);
    const std::uint8_t filter = row[0];
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= 3 ? cur[i - 3] : 0;
      const int b = prev[i];
      const int c = i >= 3 ? prev[i - 3] : 0;
      int pred = 0;
      switch (filter) {
        case 0: pred = 0; break;
        case 1: pred = a; break;
        case 2: pred = b; break;
        case 3: pred = (a + b) / 2; break;
        case 4: {
          const int p = a + b - c;
          const int pa = std::abs(p - a), pb = std::abs(p - b),
                    pc = std::abs(p - c);
          pred = (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
          break;
        }
        default:
          throw FormatError("bad PNG filter " + std::to_string(filter));
      }
      cur[i] = static_cast<std::uint8_t>((row[1 + i] + pred) & 0xff);
    }
    for (std::uint32_t x = 0; x < width; ++x)
      for (int ch = 0; ch < 3; ++ch)
        img.at(static_cast<int>(x), static_cast<int>(y), ch) =
            cur[x * 3 + ch] / 255.0f;
    std::swap(prev, cur);
  }
  return img;
}

inline ImageF load_png(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    return decode_png(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace splat
