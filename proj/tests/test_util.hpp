#ifndef AUGSEARCH_TESTS_TEST_UTIL_HPP
#define AUGSEARCH_TESTS_TEST_UTIL_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "augsearch/rng.hpp"

namespace augsearch::test {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    std::uint64_t s = static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)) ^ ++counter;
    path_ = std::filesystem::temp_directory_path() / ("augsearch_test_" + std::to_string(splitmix64(s)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Relative path -> file bytes for every regular file under `root`.
inline std::map<std::string, std::string> snapshot_directory(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) out[std::filesystem::relative(entry.path(), root).string()] = read_file(entry.path());
  }
  return out;
}

}  // namespace augsearch::test

#endif  // AUGSEARCH_TESTS_TEST_UTIL_HPP
