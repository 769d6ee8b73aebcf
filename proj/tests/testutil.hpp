#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

namespace testutil {

// Unique scratch directory under the system temp dir, removed on
// destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& stem) {
    auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    path_ = base / (stem + "_" + std::to_string(rd()) + "_" +
                    std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& rel = "") const {
    return rel.empty() ? path_.string() : (path_ / rel).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
