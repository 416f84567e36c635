#include "netlqr/report_io.hpp"

#include <boost/crc.hpp>
#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "netlqr/errors.hpp"

namespace netlqr {

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::size_t> sample_indices(std::size_t count, std::size_t stride) {
  std::vector<std::size_t> out;
  if (count == 0) return out;
  stride = std::max<std::size_t>(1, stride);
  for (std::size_t k = 0; k < count; k += stride) out.push_back(k);
  if (out.back() != count - 1) out.push_back(count - 1);
  return out;
}

std::uint32_t crc32_of(const std::string& bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) {
    throw Error(ErrorCode::ValidationError,
                "cannot create output directory '" + root_.string() + "': " + ec.message());
  }
}

void OutputDir::write(const std::string& name, const std::string& content) {
  const auto path = root_ / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorCode::ValidationError, "cannot write '" + path.string() + "'");
  files_.push_back(name);
  meta_.emplace_back(content.size(), crc32_of(content));
}

void OutputDir::write_manifest() {
  std::vector<std::size_t> order(files_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return files_[a] < files_[b]; });
  nlohmann::json entries = nlohmann::json::array();
  for (auto k : order) {
    char hex[9];
    std::snprintf(hex, sizeof hex, "%08x", meta_[k].second);
    entries.push_back({{"file", files_[k]}, {"bytes", meta_[k].first}, {"crc32", hex}});
  }
  const std::string text = nlohmann::json{{"files", entries}}.dump(2) + "\n";
  std::ofstream out(root_ / "manifest.json", std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::ValidationError, "cannot write manifest");
}

std::string trajectory_csv(const Trajectory& traj, const SpectralHandle& spec, std::size_t stride) {
  if (traj.state.empty()) return {};
  const Eigen::Index dx = traj.state.front().rows();
  const Eigen::Index du = traj.control.front().rows();
  std::ostringstream os;
  os << "time,node,kind,index,lambda";
  for (Eigen::Index r = 0; r < dx; ++r) os << ",x" << r + 1;
  for (Eigen::Index r = 0; r < du; ++r) os << ",u" << r + 1;
  os << "\n";
  auto row = [&](double t, Eigen::Index i, const char* kind, int index, double lambda,
                 const Matrix& x, const Matrix& u) {
    os << format_number(t) << "," << i + 1 << "," << kind << "," << index << ","
       << format_number(lambda);
    for (Eigen::Index r = 0; r < dx; ++r) os << "," << format_number(x(r, i));
    for (Eigen::Index r = 0; r < du; ++r) os << "," << format_number(u(r, i));
    os << "\n";
  };
  for (std::size_t k : sample_indices(traj.grid.size(), stride)) {
    const DecomposedField dx_k = decompose(traj.state[k], spec);
    const DecomposedField du_k = decompose(traj.control[k], spec);
    const double t = traj.grid[k];
    for (Eigen::Index i = 0; i < traj.state[k].cols(); ++i) {
      row(t, i, "raw", 0, 0.0, traj.state[k], traj.control[k]);
      for (int l = 0; l < spec->rank(); ++l) {
        row(t, i, "eigen", l + 1, spec->eigenvalues(l), dx_k.eigen[static_cast<std::size_t>(l)],
            du_k.eigen[static_cast<std::size_t>(l)]);
      }
      row(t, i, "auxiliary", 0, 0.0, dx_k.auxiliary, du_k.auxiliary);
    }
  }
  return os.str();
}

std::string svg_chart(const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series) {
  const double W = 720, H = 420, left = 70, right = 20, top = 40, bottom = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) {
      if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
  }
  if (!(x1 > x0)) x0 = 0, x1 = 1;
  if (!(y1 > y0)) {
    const double c = std::isfinite(y0) ? y0 : 0.0;
    y0 = c - 1, y1 = c + 1;
  }
  auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double v) { return H - bottom - (v - y0) / (y1 - y0) * (H - top - bottom); };
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
     << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right
     << "\" height=\"" << H - top - bottom << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">"
       << format_number(std::round(xv * 1e4) / 1e4) << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
       << format_number(std::round(yv * 1e4) / 1e4) << "</text>\n";
  }
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << x_label
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << H / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    os << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << palette[s % 10]
       << "\" points=\"";
    for (std::size_t k = 0; k < series[s].x.size() && k < series[s].y.size(); ++k) {
      if (!std::isfinite(series[s].y[k])) continue;
      os << px(series[s].x[k]) << "," << py(series[s].y[k]) << " ";
    }
    os << "\"><title>" << series[s].label << "</title></polyline>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace netlqr
