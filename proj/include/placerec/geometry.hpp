#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace placerec {

inline constexpr double kPi = 3.14159265358979323846;

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi)
        a += 2.0 * kPi;
    else if (a > kPi)
        a -= 2.0 * kPi;
    return a;
}

/// Absolute angular difference wrapped to [0, pi].
inline double angular_difference(double a, double b) {
    double d = std::fabs(std::fmod(a - b, 2.0 * kPi));
    return d > kPi ? 2.0 * kPi - d : d;
}

/// Timestamped planar pose (world frame, yaw in (-pi, pi]).
struct Pose2D {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;

    double planar_distance_to(const Pose2D& o) const {
        return std::hypot(x - o.x, y - o.y);
    }
};

/// Ordered pose sequence with strictly increasing timestamps.
struct Trajectory {
    std::vector<Pose2D> poses;
    std::string session_id;

    std::size_t size() const { return poses.size(); }
    bool empty() const { return poses.empty(); }
    const Pose2D& operator[](std::size_t i) const { return poses[i]; }
};

struct Point3D {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// 3D points expressed in some pose's frame (or the world frame).
struct PointCloud3D {
    std::vector<Point3D> points;
};

/// Map a point from a pose's local frame into the world frame.
inline Point3D local_to_world(const Pose2D& pose, const Point3D& p) {
    const double c = std::cos(pose.yaw);
    const double s = std::sin(pose.yaw);
    return {pose.x + c * p.x - s * p.y, pose.y + s * p.x + c * p.y, p.z};
}

/// Map a world-frame point into a pose's local frame.
inline Point3D world_to_local(const Pose2D& pose, const Point3D& p) {
    const double c = std::cos(pose.yaw);
    const double s = std::sin(pose.yaw);
    const double dx = p.x - pose.x;
    const double dy = p.y - pose.y;
    return {c * dx + s * dy, -s * dx + c * dy, p.z};
}

}  // namespace placerec
