#pragma once

#include "drbrt/core/types.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace drbrt::cli {

using Polyline = std::vector<std::array<double, 2>>;

/// Boundary of the 2D ellipse {c + L u : |u| = 1} with L L^T = shape.
inline Polyline ellipse_outline(const Eigen::Vector2d& c, const Eigen::Matrix2d& shape, int segments = 96) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(shape);
  Eigen::Matrix2d L = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Polyline out;
  for (int i = 0; i <= segments; ++i) {
    double t = 2.0 * M_PI * i / segments;
    Eigen::Vector2d p = c + L * Eigen::Vector2d(std::cos(t), std::sin(t));
    out.push_back({p(0), p(1)});
  }
  return out;
}

/// Minimal SVG canvas in data coordinates; y points up.
class SvgPlot {
 public:
  void trajectory(Polyline pts) { paths_.push_back(std::move(pts)); }
  void outline(Polyline pts, std::string stroke) { outlines_.push_back({std::move(pts), std::move(stroke)}); }

  std::string render(int size = 800) const {
    double lo[2] = {INFINITY, INFINITY}, hi[2] = {-INFINITY, -INFINITY};
    auto grow = [&](const Polyline& p) {
      for (const auto& q : p)
        for (int d = 0; d < 2; ++d) lo[d] = std::min(lo[d], q[d]), hi[d] = std::max(hi[d], q[d]);
    };
    for (const auto& p : paths_) grow(p);
    for (const auto& o : outlines_) grow(o.pts);
    if (!std::isfinite(lo[0])) lo[0] = lo[1] = -1.0, hi[0] = hi[1] = 1.0;
    double span = std::max({hi[0] - lo[0], hi[1] - lo[1], 1e-9}) * 1.1;
    double cx = 0.5 * (lo[0] + hi[0]), cy = 0.5 * (lo[1] + hi[1]);
    auto map = [&](const std::array<double, 2>& q) {
      return std::array<double, 2>{(q[0] - cx) / span * size + size / 2.0, size / 2.0 - (q[1] - cy) / span * size};
    };
    auto points = [&](const Polyline& p) {
      std::ostringstream s;
      s.precision(6);
      for (std::size_t i = 0; i < p.size(); ++i) {
        auto m = map(p[i]);
        s << (i ? " " : "") << m[0] << "," << m[1];
      }
      return s.str();
    };
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 " << size
        << " " << size << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& p : paths_) {
      std::string pts = points(p);
      out << "<path d=\"M " << pts << "\" fill=\"none\" stroke=\"black\" stroke-opacity=\"0.3\" stroke-width=\"0.6\"/>\n";
    }
    for (const auto& o : outlines_)
      out << "<polygon points=\"" << points(o.pts) << "\" fill=\"none\" stroke=\"" << o.stroke << "\" stroke-width=\"1.5\"/>\n";
    out << "</svg>\n";
    return out.str();
  }

 private:
  struct Outline {
    Polyline pts;
    std::string stroke;
  };
  std::vector<Polyline> paths_;
  std::vector<Outline> outlines_;
};

}  // namespace drbrt::cli
