#include "websight/raster.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <array>
#include <fstream>
#include <iterator>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <sstream>
#include <vector>

#include "websight/error.hpp"

namespace websight {
namespace {

constexpr std::string_view kPngMagic("\x89PNG\r\n\x1a\n", 8);

std::uint32_t read_be32(std::string_view s, std::size_t offset) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    v = (v << 8) | static_cast<unsigned char>(s[offset + i]);
  }
  return v;
}

cv::Mat decode(std::string_view encoded, int flags) {
  std::vector<unsigned char> buffer(encoded.begin(), encoded.end());
  cv::Mat image = cv::imdecode(buffer, flags);
  if (image.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot decode image");
  }
  return image;
}

void fnv1a(std::uint64_t& hash, std::string_view bytes) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
}

}  // namespace

Extent image_dimensions(std::string_view encoded) {
  if (encoded.size() >= 24 && encoded.substr(0, 8) == kPngMagic &&
      encoded.substr(12, 4) == "IHDR") {
    return Extent{static_cast<int>(read_be32(encoded, 16)),
                  static_cast<int>(read_be32(encoded, 20))};
  }
  if (image_mime_type(encoded) == "image/jpeg") {
    cv::Mat image = decode(encoded, cv::IMREAD_UNCHANGED);
    return Extent{image.cols, image.rows};
  }
  throw Error(ErrorCode::kInvalidArgument, "not a PNG or JPEG image");
}

std::string_view image_mime_type(std::string_view encoded) {
  if (encoded.substr(0, 8) == kPngMagic) return "image/png";
  if (encoded.size() >= 3 && static_cast<unsigned char>(encoded[0]) == 0xFF &&
      static_cast<unsigned char>(encoded[1]) == 0xD8 &&
      static_cast<unsigned char>(encoded[2]) == 0xFF) {
    return "image/jpeg";
  }
  return "application/octet-stream";
}

std::uint64_t perceptual_hash(std::string_view encoded) {
  cv::Mat gray = decode(encoded, cv::IMREAD_GRAYSCALE);
  cv::Mat thumb;
  cv::resize(gray, thumb, cv::Size(8, 8), 0, 0, cv::INTER_AREA);
  const double mean = cv::mean(thumb)[0];
  std::uint64_t hash = 0;
  for (int i = 0; i < 64; ++i) {
    if (thumb.at<unsigned char>(i / 8, i % 8) > mean) hash |= (1ULL << i);
  }
  return hash;
}

std::uint64_t state_fingerprint(const Screenshot& shot) {
  std::uint64_t hash = 14695981039346656037ULL;
  fnv1a(hash, shot.url);
  fnv1a(hash, std::string_view("\0", 1));
  const std::uint64_t phash = perceptual_hash(shot.encoded);
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((phash >> (8 * i)) & 0xFF);
  fnv1a(hash, std::string_view(bytes.data(), bytes.size()));
  return hash;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
         digest.data());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(digest.size() * 2);
  for (unsigned char c : digest) {
    out += kHex[c >> 4];
    out += kHex[c & 0xF];
  }
  return out;
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ') clean += c;
  }
  if (clean.size() % 4 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "base64 length not a multiple of 4");
  }
  std::string out(3 * clean.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw Error(ErrorCode::kInvalidArgument, "invalid base64");
  std::size_t padding = 0;
  if (!clean.empty() && clean.back() == '=') ++padding;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "short write to " + path);
}

}  // namespace websight
