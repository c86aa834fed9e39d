#include "occflow/binio.hpp"

#include <cstdio>
#include <memory>

namespace occflow {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

std::vector<uint8_t> read_file(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  if (std::fseek(f.get(), 0, SEEK_END) != 0)
    throw Error(ErrorCode::IoFailure, "cannot seek " + path);
  long size = std::ftell(f.get());
  if (size < 0) throw Error(ErrorCode::IoFailure, "cannot size " + path);
  std::rewind(f.get());
  std::vector<uint8_t> bytes(static_cast<std::size_t>(size));
  if (size > 0 &&
      std::fread(bytes.data(), 1, bytes.size(), f.get()) != bytes.size()) {
    throw Error(ErrorCode::IoFailure, "short read on " + path);
  }
  return bytes;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw Error(ErrorCode::IoFailure, "cannot create " + path);
  if (!bytes.empty() &&
      std::fwrite(bytes.data(), 1, bytes.size(), f.get()) != bytes.size()) {
    throw Error(ErrorCode::IoFailure, "short write on " + path);
  }
  if (std::fflush(f.get()) != 0)
    throw Error(ErrorCode::IoFailure, "flush failed on " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::vector<uint8_t> bytes(text.begin(), text.end());
  write_file(path, bytes);
}

std::string read_text_file(const std::string& path) {
  auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace occflow
