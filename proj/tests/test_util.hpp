#pragma once

#include <unistd.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "warpband/dataset.hpp"

namespace testutil {

// Fresh scratch directory, removed when the guard dies.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("warpband_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }
  std::string str() const { return dir_.string(); }

 private:
  std::filesystem::path dir_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  f << content;
}

// Identity-coded domain: inputs already in [-1, 1].
inline std::vector<warpband::VariableSpec> coded_specs(int d) {
  std::vector<warpband::VariableSpec> specs;
  for (int k = 1; k <= d; ++k)
    specs.push_back({"x" + std::to_string(k), -1.0, 1.0});
  return specs;
}

inline double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1.0);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace testutil
