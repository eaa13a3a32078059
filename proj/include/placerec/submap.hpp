#pragma once

#include <cstddef>
#include <vector>

#include "placerec/geometry.hpp"

namespace placerec {

struct SubmapConfig {
    double r_max = 80.0;
    double theta_max = kPi / 2.0;
    double z_min = -1.0;
    double z_max = 3.0;
};

struct SubmapBounds {
    std::size_t start_index = 0;
    std::size_t center_index = 0;
    std::size_t end_index = 0;
};

/// Walks backward from the center pose and stops at the first pose that
/// violates either the travel-distance or the heading-change bound;
/// returns the last satisfying index (0 if the trajectory start is reached).
std::size_t search_backward_bound(const Trajectory& traj, std::size_t center,
                                  const SubmapConfig& cfg);

/// Mirror of search_backward_bound toward increasing indices.
std::size_t search_forward_bound(const Trajectory& traj, std::size_t center,
                                 const SubmapConfig& cfg);

SubmapBounds submap_bounds(const Trajectory& traj, std::size_t center,
                           const SubmapConfig& cfg);

/// Accumulates per-pose clouds (each in its own pose frame) into the center
/// pose frame, keeping points with z in [z_min, z_max] and planar range
/// <= r_max. clouds[i] is the scan captured at trajectory pose i; only the
/// clouds inside the bounds contribute.
PointCloud3D build_submap(const Trajectory& traj,
                          const std::vector<PointCloud3D>& clouds,
                          const SubmapBounds& bounds, const SubmapConfig& cfg);

}  // namespace placerec
