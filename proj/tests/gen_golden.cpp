// Regenerates the pinned artifacts under tests/golden. Run from anywhere:
//   gen_golden [output_dir]
// The default output directory is tests/golden next to this source file
// only when invoked from the repository root.

#include <filesystem>
#include <iostream>

#include "golden_fixtures.hpp"
#include "occflow/binio.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path out_dir =
      argc > 1 ? std::filesystem::path(argv[1])
               : std::filesystem::path("tests") / "golden";
  std::filesystem::create_directories(out_dir);

  const auto artifacts = testutil::golden_artifacts();
  for (const auto& artifact : artifacts) {
    const auto path = out_dir / artifact.name;
    occflow::write_file(path.string(), artifact.bytes);
    std::cout << path.string() << " (" << artifact.bytes.size() << " bytes)\n";
  }
  const std::string hashes = testutil::golden_hashes(artifacts);
  occflow::write_text_file((out_dir / "hashes.txt").string(), hashes);
  std::cout << (out_dir / "hashes.txt").string() << "\n" << hashes;
  return 0;
}
