#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

#include "websight/action_grammar.hpp"

namespace websight {

// Viewport capture. `encoded` holds lossless PNG bytes; only pixels and the
// URL ever leave the browser layer.
struct Screenshot {
  std::string encoded;
  int width = 0;
  int height = 0;
  std::chrono::system_clock::time_point captured_at{};
  std::string url;

  Extent extent() const { return {width, height}; }
};

// Reads width/height from a PNG or JPEG header without decoding pixels.
// Throws Error(kInvalidArgument) on anything else.
Extent image_dimensions(std::string_view encoded);

// "image/png" or "image/jpeg" by magic number; "application/octet-stream" otherwise.
std::string_view image_mime_type(std::string_view encoded);

// 64-bit average hash over an 8x8 grayscale thumbnail.
std::uint64_t perceptual_hash(std::string_view encoded);

// Loop-guard state fingerprint: FNV-1a over (URL, perceptual hash).
std::uint64_t state_fingerprint(const Screenshot& shot);

std::string sha256_hex(std::string_view bytes);
std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace websight
