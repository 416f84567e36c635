#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "netlqr/decomposition.hpp"
#include "netlqr/simulator.hpp"

namespace netlqr {

// Shortest round-trip decimal form.
std::string format_number(double v);

// 0, stride, 2 stride, ... plus the final index count - 1.
std::vector<std::size_t> sample_indices(std::size_t count, std::size_t stride);

std::uint32_t crc32_of(const std::string& bytes);

// Collects every file written for a run so the manifest can list them.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);
  const std::filesystem::path& root() const { return root_; }
  void write(const std::string& name, const std::string& content);
  // manifest.json: name, size and CRC-32 of every file written so far.
  void write_manifest();
  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
  std::vector<std::pair<std::uint64_t, std::uint32_t>> meta_;
};

// time,node,kind,index,lambda,x1..,u1..; kind is raw, eigen or auxiliary.
std::string trajectory_csv(const Trajectory& traj, const SpectralHandle& spec, std::size_t stride);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

std::string svg_chart(const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series);

}  // namespace netlqr
