// Per-test scratch directories under the process temp root. A directory is
// wiped on acquisition, not on teardown, so failed runs leave evidence.
#pragma once

#include <filesystem>
#include <string>

inline std::string scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / "sdd-unit-tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}
