#include "occflow/occ_io.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <sstream>

#include "occflow/binio.hpp"

namespace occflow {

namespace {

constexpr uint16_t kOccvVersion = 1;
constexpr uint16_t kOccsVersion = 1;

OccGrid decode_grid_from(ByteReader& r, int num_classes) {
  r.expect_magic("OCCV", "occupancy grid");
  const uint16_t version = r.u16();
  if (version != kOccvVersion) {
    throw Error(ErrorCode::BadMagic,
                "unsupported OCCV version " + std::to_string(version));
  }
  const uint8_t label_bits = r.u8();
  if (label_bits != 8) {
    throw Error(ErrorCode::BadMagic,
                "unsupported label width " + std::to_string(label_bits));
  }
  r.u8();  // reserved
  OccGrid g;
  g.dims_x = r.u32();
  g.dims_y = r.u32();
  g.dims_z = r.u32();
  g.voxel_size_m = r.f32();
  if (g.dims_x == 0 || g.dims_y == 0 || g.dims_z == 0) {
    throw Error(ErrorCode::InvalidScenario, "OCCV header has zero dims");
  }
  const uint64_t count = static_cast<uint64_t>(g.dims_x) * g.dims_y * g.dims_z;
  if (count > (1ULL << 32)) {
    throw Error(ErrorCode::DimsOverflow,
                "dims product " + std::to_string(count) + " exceeds 2^32");
  }
  const uint8_t* payload = r.take(static_cast<std::size_t>(count));
  g.labels.assign(payload, payload + count);
  validate_grid(g, num_classes);
  return g;
}

}  // namespace

std::vector<uint8_t> encode_grid(const OccGrid& grid) {
  validate_grid(grid, 256);  // structural check; labels validated by caller's table
  ByteWriter w;
  w.magic("OCCV");
  w.u16(kOccvVersion);
  w.u8(8);  // label_bits
  w.u8(0);  // reserved
  w.u32(grid.dims_x);
  w.u32(grid.dims_y);
  w.u32(grid.dims_z);
  w.f32(grid.voxel_size_m);
  w.bytes(grid.labels.data(), grid.labels.size());
  return w.data();
}

OccGrid decode_grid(const std::vector<uint8_t>& bytes, int num_classes) {
  ByteReader r(bytes.data(), bytes.size());
  OccGrid g = decode_grid_from(r, num_classes);
  if (r.remaining() != 0) {
    throw Error(ErrorCode::SizeMismatch,
                std::to_string(r.remaining()) + " trailing bytes after payload");
  }
  return g;
}

void save_grid(const OccGrid& grid, const std::string& path) {
  write_file(path, encode_grid(grid));
}

OccGrid load_grid(const std::string& path, int num_classes) {
  return decode_grid(read_file(path), num_classes);
}

std::vector<uint8_t> encode_sequence(const OccSequence& seq) {
  validate_sequence(seq, 256);
  ByteWriter w;
  w.magic("OCCS");
  w.u16(kOccsVersion);
  w.u16(0);  // reserved
  w.u32(static_cast<uint32_t>(seq.frames.size()));
  w.f32(seq.frame_period_s);
  for (const OccGrid& frame : seq.frames) {
    const auto block = encode_grid(frame);
    w.bytes(block.data(), block.size());
  }
  return w.data();
}

OccSequence decode_sequence(const std::vector<uint8_t>& bytes,
                            int num_classes) {
  ByteReader r(bytes.data(), bytes.size());
  r.expect_magic("OCCS", "occupancy sequence");
  const uint16_t version = r.u16();
  if (version != kOccsVersion) {
    throw Error(ErrorCode::BadMagic,
                "unsupported OCCS version " + std::to_string(version));
  }
  r.u16();  // reserved
  const uint32_t frame_count = r.u32();
  OccSequence seq;
  seq.frame_period_s = r.f32();
  if (frame_count == 0) {
    throw Error(ErrorCode::EmptySequence, "OCCS container holds no frames");
  }
  seq.frames.reserve(frame_count);
  for (uint32_t i = 0; i < frame_count; ++i) {
    seq.frames.push_back(decode_grid_from(r, num_classes));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::SizeMismatch,
                std::to_string(r.remaining()) + " trailing bytes after frames");
  }
  validate_sequence(seq, num_classes);
  return seq;
}

void save_sequence(const OccSequence& seq, const std::string& path) {
  write_file(path, encode_sequence(seq));
}

OccSequence load_sequence(const std::string& dir_or_container,
                          int num_classes) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_directory(dir_or_container, ec)) {
    std::vector<std::string> frame_paths;
    for (const auto& entry : fs::directory_iterator(dir_or_container)) {
      if (entry.is_regular_file() && entry.path().extension() == ".occv") {
        frame_paths.push_back(entry.path().string());
      }
    }
    std::sort(frame_paths.begin(), frame_paths.end());
    if (frame_paths.empty()) {
      throw Error(ErrorCode::EmptySequence,
                  "no .occv frames in " + dir_or_container);
    }
    OccSequence seq;
    for (const auto& p : frame_paths) {
      seq.frames.push_back(load_grid(p, num_classes));
    }
    validate_sequence(seq, num_classes);
    return seq;
  }
  return decode_sequence(read_file(dir_or_container), num_classes);
}

OccGrid import_raw(const std::string& path, uint32_t dims_x, uint32_t dims_y,
                   uint32_t dims_z, int num_classes) {
  auto bytes = read_file(path);
  const uint64_t count = static_cast<uint64_t>(dims_x) * dims_y * dims_z;
  if (count > (1ULL << 32)) {
    throw Error(ErrorCode::DimsOverflow,
                "dims product " + std::to_string(count) + " exceeds 2^32");
  }
  if (bytes.size() != count) {
    throw Error(ErrorCode::SizeMismatch,
                "raw file holds " + std::to_string(bytes.size()) +
                    " bytes, dims demand " + std::to_string(count));
  }
  OccGrid g = make_grid(dims_x, dims_y, dims_z);
  g.labels.assign(bytes.begin(), bytes.end());
  validate_grid(g, num_classes);
  return g;
}

void save_sidecar(const OccGrid& grid, const ClassTable& classes,
                  const std::string& path) {
  std::ostringstream out;
  out.precision(17);
  out << "origin_x_m = " << grid.origin_m[0] << "\n";
  out << "origin_y_m = " << grid.origin_m[1] << "\n";
  out << "origin_z_m = " << grid.origin_m[2] << "\n";
  out << "num_classes = " << classes.num_classes() << "\n";
  for (int c = 0; c < classes.num_classes(); ++c) {
    out << "class_" << c << " = " << classes.names[static_cast<std::size_t>(c)]
        << (classes.evaluable[static_cast<std::size_t>(c)] ? "" : " !eval")
        << "\n";
  }
  write_text_file(path, out.str());
}

void load_sidecar(const std::string& path, OccGrid& grid,
                  ClassTable& classes) {
  std::istringstream in(read_text_file(path));
  std::string line;
  int num_classes = 0;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      s = (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    if (key == "origin_x_m") grid.origin_m[0] = std::stod(value);
    else if (key == "origin_y_m") grid.origin_m[1] = std::stod(value);
    else if (key == "origin_z_m") grid.origin_m[2] = std::stod(value);
    else if (key == "num_classes") {
      num_classes = std::stoi(value);
      classes.names.assign(static_cast<std::size_t>(num_classes), "");
      classes.evaluable.assign(static_cast<std::size_t>(num_classes), true);
    } else if (key.rfind("class_", 0) == 0) {
      const int c = std::stoi(key.substr(6));
      if (c < 0 || c >= num_classes) {
        throw Error(ErrorCode::ConfigInvalid,
                    "sidecar class id out of range: " + key);
      }
      bool eval = true;
      const auto bang = value.find(" !eval");
      if (bang != std::string::npos) {
        eval = false;
        value = value.substr(0, bang);
      }
      classes.names[static_cast<std::size_t>(c)] = value;
      classes.evaluable[static_cast<std::size_t>(c)] = eval;
    }
  }
}

}  // namespace occflow
