#ifndef OCCFLOW_BINIO_HPP
#define OCCFLOW_BINIO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "occflow/errors.hpp"

namespace occflow {

// Little-endian serialization into a byte buffer. All on-disk formats go
// through these helpers so the byte layout never depends on host order.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) {
    buf_.push_back(static_cast<uint8_t>(v));
    buf_.push_back(static_cast<uint8_t>(v >> 8));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
  void bytes(const uint8_t* data, std::size_t n) {
    buf_.insert(buf_.end(), data, data + n);
  }
  void magic(const char tag[4]) {
    buf_.insert(buf_.end(), tag, tag + 4);
  }

  const std::vector<uint8_t>& data() const { return buf_; }

 private:
  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() {
    const uint8_t* p = take(2);
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
  }
  uint32_t u32() {
    const uint8_t* p = take(4);
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
  }
  float f32() { return std::bit_cast<float>(u32()); }

  void expect_magic(const char tag[4], const std::string& what) {
    const uint8_t* p = take(4);
    if (std::memcmp(p, tag, 4) != 0) {
      throw Error(ErrorCode::BadMagic, what + ": expected magic \"" +
                                           std::string(tag, 4) + "\"");
    }
  }

  const uint8_t* take(std::size_t n) {
    if (pos_ + n > size_) {
      throw Error(ErrorCode::TruncatedFile,
                  "need " + std::to_string(n) + " bytes at offset " +
                      std::to_string(pos_) + ", have " + std::to_string(size_ - pos_));
    }
    const uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }

  std::size_t remaining() const { return size_ - pos_; }
  std::size_t position() const { return pos_; }

 private:
  const uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

// Whole-file helpers. Throw IoFailure on filesystem trouble.
std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<uint8_t>& bytes);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace occflow

#endif  // OCCFLOW_BINIO_HPP
