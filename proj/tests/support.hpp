#pragma once

#include "reef/audio_io.hpp"
#include "reef/rng.hpp"
#include "reef/timeutil.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>
#include <unistd.h>
#include <vector>

namespace reef::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("reef_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline AudioClip make_clip(std::vector<double> x, double fs) {
  AudioClip c;
  c.samples = std::move(x);
  c.sample_rate = fs;
  return c;
}

inline std::vector<double> sine(double f, double amp, double fs, std::size_t n, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  }
  return x;
}

inline std::vector<double> white(Rng& rng, double sd, std::size_t n) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal(0.0, sd);
  return x;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

inline Timestamp ts(const char* iso) { return *parse_iso8601(iso); }

}  // namespace reef::test
