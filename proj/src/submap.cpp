#include "placerec/submap.hpp"

#include "placerec/io.hpp"

namespace placerec {

static bool satisfies(const Pose2D& center, const Pose2D& p, const SubmapConfig& cfg) {
    return center.planar_distance_to(p) <= cfg.r_max &&
           angular_difference(center.yaw, p.yaw) <= cfg.theta_max;
}

std::size_t search_backward_bound(const Trajectory& traj, std::size_t center,
                                  const SubmapConfig& cfg) {
    if (center >= traj.size())
        throw Error("submap center index out of range");
    const Pose2D& c = traj[center];
    std::size_t i = center;
    while (i > 0 && satisfies(c, traj[i - 1], cfg)) --i;
    return i;
}

std::size_t search_forward_bound(const Trajectory& traj, std::size_t center,
                                 const SubmapConfig& cfg) {
    if (center >= traj.size())
        throw Error("submap center index out of range");
    const Pose2D& c = traj[center];
    std::size_t i = center;
    while (i + 1 < traj.size() && satisfies(c, traj[i + 1], cfg)) ++i;
    return i;
}

SubmapBounds submap_bounds(const Trajectory& traj, std::size_t center,
                           const SubmapConfig& cfg) {
    return {search_backward_bound(traj, center, cfg), center,
            search_forward_bound(traj, center, cfg)};
}

PointCloud3D build_submap(const Trajectory& traj,
                          const std::vector<PointCloud3D>& clouds,
                          const SubmapBounds& bounds, const SubmapConfig& cfg) {
    if (bounds.start_index > bounds.center_index ||
        bounds.center_index > bounds.end_index || bounds.end_index >= traj.size())
        throw Error("inconsistent submap bounds");
    if (clouds.size() != traj.size())
        throw Error("expected one cloud per trajectory pose, got " +
                    std::to_string(clouds.size()) + " for " +
                    std::to_string(traj.size()) + " poses");

    const Pose2D& center = traj[bounds.center_index];
    PointCloud3D out;
    for (std::size_t i = bounds.start_index; i <= bounds.end_index; ++i) {
        const Pose2D& pose = traj[i];
        for (const Point3D& p : clouds[i].points) {
            const Point3D q = world_to_local(center, local_to_world(pose, p));
            if (q.z < cfg.z_min || q.z > cfg.z_max) continue;
            if (std::hypot(q.x, q.y) > cfg.r_max) continue;
            out.points.push_back(q);
        }
    }
    return out;
}

}  // namespace placerec
