#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "pool.hpp"

namespace testutil {

// Self-cleaning scratch directory for device files.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    static std::atomic<uint64_t> counter{0};
    uint64_t tag = uint64_t(::getpid()) * 100000 + counter++;
    path = base / ("poolforge-test-" + std::to_string(tag));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::vector<std::string> make_device_files(const TempDir& dir, int n,
                                                  uint64_t capacity_sectors,
                                                  const std::string& prefix = "dev") {
  std::vector<std::string> paths;
  for (int i = 0; i < n; i++) {
    std::string p = dir.file(prefix + std::to_string(i));
    poolforge::Device::create(p, capacity_sectors);
    paths.push_back(p);
  }
  return paths;
}

inline std::vector<std::unique_ptr<poolforge::Device>> open_all(
    const std::vector<std::string>& paths) {
  std::vector<std::unique_ptr<poolforge::Device>> devs;
  for (const auto& p : paths) devs.push_back(poolforge::Device::open(p));
  return devs;
}

inline std::unique_ptr<poolforge::Pool> make_pool(const std::vector<std::string>& paths,
                                                  const std::string& name = "tank",
                                                  poolforge::PoolOptions opt = {}) {
  if (opt.guid_seed == 0) opt.guid_seed = 0x5eed;
  return poolforge::Pool::create(open_all(paths), name, opt);
}

inline std::unique_ptr<poolforge::Pool> import_pool(const std::vector<std::string>& paths) {
  return poolforge::Pool::import(open_all(paths));
}

inline std::vector<uint8_t> random_bytes(poolforge::Rng& rng, size_t n) {
  std::vector<uint8_t> out(n);
  for (size_t i = 0; i < n; i++) out[i] = uint8_t(rng.next());
  return out;
}

// compressible mix: runs of zeros interleaved with random spans
inline std::vector<uint8_t> lumpy_bytes(poolforge::Rng& rng, size_t n) {
  std::vector<uint8_t> out;
  out.reserve(n);
  while (out.size() < n) {
    size_t span = 1 + rng.next() % 700;
    bool zeros = rng.next() % 2 == 0;
    for (size_t i = 0; i < span && out.size() < n; i++)
      out.push_back(zeros ? 0 : uint8_t(rng.next()));
  }
  return out;
}

inline std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

inline void clobber_file_byte(const std::string& path, uint64_t offset, uint8_t xor_mask) {
  std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
  f.seekg(std::streamoff(offset));
  char c = 0;
  f.read(&c, 1);
  c = char(uint8_t(c) ^ xor_mask);
  f.seekp(std::streamoff(offset));
  f.write(&c, 1);
}

}  // namespace testutil
