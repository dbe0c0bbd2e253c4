#pragma once

#include <span>
#include <vector>

#include "microloc/grid.hpp"

namespace microloc {

/// Quintic smoothstep s(t) = 6t^5 - 15t^4 + 10t^3 clamped to [0, 1]; C^2 at both ends.
inline double smoothstep5(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

/// Nonnegative patch weights chi_j on a grid with sum_j chi_j = 1 pointwise.
class PartitionOfUnity {
 public:
  PartitionOfUnity(Grid grid, std::vector<std::vector<double>> patches, std::vector<Vec> centers, double nominal_width)
      : grid_(std::move(grid)), patches_(std::move(patches)), centers_(std::move(centers)), nominal_width_(nominal_width) {}

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return patches_.size(); }
  const std::vector<double>& patch(std::size_t j) const { return patches_[j]; }
  const std::vector<std::vector<double>>& patches() const { return patches_; }
  const std::vector<Vec>& centers() const { return centers_; }
  double nominal_width() const { return nominal_width_; }

 private:
  Grid grid_;
  std::vector<std::vector<double>> patches_;
  std::vector<Vec> centers_;
  double nominal_width_;
};

/// Distance from x to c on the circle of length 2L.
inline double periodic_distance(double x, double c, double half_length) {
  const double period = 2.0 * half_length;
  double d = std::fmod(std::abs(x - c), period);
  return std::min(d, period - d);
}

/// Tensor-product quintic-smoothstep bumps, periodically tiled, normalized to sum to one.
///
/// Patch spacing is s = 2L / patches_per_axis. Each 1D bump equals 1 within
/// s(1 - overlap)/2 of its centre and ramps to 0 at s(1 + overlap)/2, which is
/// the nominal width.
inline PartitionOfUnity build_uniform(const Grid& grid, int patches_per_axis, double overlap) {
  if (patches_per_axis < 1) throw ValidationError("partition: patches_per_axis must be >= 1");
  if (!(overlap > 0.0 && overlap < 1.0)) throw ValidationError("partition: overlap must lie in (0, 1)");
  const double L = grid.half_length();
  const double spacing = 2.0 * L / patches_per_axis;
  const double band = overlap * spacing;
  const double plateau = 0.5 * spacing - 0.5 * band;
  const double width = 0.5 * spacing + 0.5 * band;
  const int n = grid.points_per_axis();

  std::vector<double> axis_centers(patches_per_axis);
  for (int j = 0; j < patches_per_axis; ++j) axis_centers[j] = -L + (j + 0.5) * spacing;

  // Raw 1D profiles per axis patch, sampled at the grid coordinates.
  std::vector<std::vector<double>> profile(patches_per_axis, std::vector<double>(n));
  for (int j = 0; j < patches_per_axis; ++j) {
    for (int i = 0; i < n; ++i) {
      if (patches_per_axis == 1) {
        profile[j][i] = 1.0;
        continue;
      }
      const double d = periodic_distance(grid.coordinate(i), axis_centers[j], L);
      profile[j][i] = 1.0 - smoothstep5((d - plateau) / band);
    }
  }

  std::vector<std::vector<double>> patches;
  std::vector<Vec> centers;
  if (grid.dim() == 1) {
    for (int j = 0; j < patches_per_axis; ++j) {
      patches.push_back(profile[j]);
      centers.push_back(Vec{axis_centers[j], 0.0});
    }
  } else {
    for (int a = 0; a < patches_per_axis; ++a)
      for (int b = 0; b < patches_per_axis; ++b) {
        std::vector<double> w(grid.size());
        for (std::size_t f = 0; f < w.size(); ++f) {
          auto [i, k] = grid.indices(f);
          w[f] = profile[a][i] * profile[b][k];
        }
        patches.push_back(std::move(w));
        centers.push_back(Vec{axis_centers[a], axis_centers[b]});
      }
  }

  for (std::size_t f = 0; f < grid.size(); ++f) {
    double total = 0.0;
    for (const auto& p : patches) total += p[f];
    if (!(total > 0.0))
      throw ValidationError("partition: coverage gap at grid point " + vec_to_string(grid.point(f), grid.dim()));
    for (auto& p : patches) p[f] /= total;
  }
  return PartitionOfUnity(grid, std::move(patches), std::move(centers), patches_per_axis == 1 ? L : width);
}

/// Per-patch integrals dx^n sum_x chi_j(x) w(x) of a nonnegative density.
inline std::vector<double> decompose(const PartitionOfUnity& pu, std::span<const double> density) {
  const Grid& g = pu.grid();
  if (density.size() != g.size()) throw ValidationError("decompose: density length does not match the partition grid");
  for (std::size_t f = 0; f < density.size(); ++f) {
    if (!std::isfinite(density[f])) throw ValidationError("decompose: non-finite density at " + detail::index_label(g, f));
    if (density[f] < -1e-12)
      throw ValidationError("decompose: negative density " + std::to_string(density[f]) + " at " +
                            detail::index_label(g, f));
  }
  std::vector<double> parts(pu.size(), 0.0);
  for (std::size_t j = 0; j < pu.size(); ++j) {
    const auto& chi = pu.patch(j);
    double s = 0.0;
    for (std::size_t f = 0; f < density.size(); ++f) s += chi[f] * density[f];
    parts[j] = s * g.cell_volume();
  }
  return parts;
}

/// |u|^2 sampled on the grid.
inline std::vector<double> energy_density(const Field& u) {
  std::vector<double> w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = std::norm(u[i]);
  return w;
}

}  // namespace microloc
