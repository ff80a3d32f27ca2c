#pragma once

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "lkdn/rng.hpp"
#include "lkdn/tensor.hpp"

namespace testutil {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

template <typename T>
double max_rel_diff(const lkdn::TensorT<T>& a, const lkdn::TensorT<T>& b) {
  REQUIRE(a.same_shape(b));
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, rel_err(double(a.data[i]), double(b.data[i])));
  return m;
}

// Largest element difference relative to the tensors' own magnitude; robust
// where individual entries cancel to near zero.
template <typename T>
double scale_rel_diff(const lkdn::TensorT<T>& a, const lkdn::TensorT<T>& b) {
  REQUIRE(a.same_shape(b));
  double scale = 1e-12, diff = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    scale = std::max({scale, std::abs(double(a.data[i])), std::abs(double(b.data[i]))});
    diff = std::max(diff, std::abs(double(a.data[i]) - double(b.data[i])));
  }
  return diff / scale;
}

template <typename T = float>
lkdn::TensorT<T> rand_tensor(int n, int c, int h, int w, uint64_t seed, double lo = -1.0,
                             double hi = 1.0) {
  lkdn::Rng rng(seed);
  lkdn::TensorT<T> t(n, c, h, w);
  t.fill_uniform(rng, lo, hi);
  return t;
}

// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("lkdn-test-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  REQUIRE(out.good());
  out << content;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct CliResult {
  int code = -1;
  std::string out;
};

// Runs a command, capturing stdout+stderr.
inline CliResult run_cmd(const std::string& cmd) {
  CliResult r;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (size_t got = fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace testutil
