#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "placerec/geometry.hpp"
#include "placerec/io.hpp"
#include "placerec/rng.hpp"

namespace placerec {

struct Wall {
    Eigen::Vector2d p0 = Eigen::Vector2d::Zero();
    Eigen::Vector2d p1 = Eigen::Vector2d::Zero();
    double reflectivity = 1.0;
};

struct Pole {
    double x = 0.0;
    double y = 0.0;
    double radius = 0.3;
    double reflectivity = 1.0;
};

struct World {
    double extent = 400.0;
    std::vector<Wall> walls;
    std::vector<Pole> poles;
};

struct WorldConfig {
    double extent = 400.0;
    int wall_count = 60;
    int pole_count = 200;
    double reflectivity_min = 0.3;
    double reflectivity_max = 1.0;
    std::uint64_t seed = 0;
};

struct SensorConfig {
    int lidar_beams = 360;
    double lidar_range_sigma = 0.02;
    std::vector<double> lidar_z_levels = {-0.5, 0.0, 0.5, 1.0};
    double lidar_max_range = 80.0;
    int radar_azimuth_bins = 120;
    int radar_range_bins = 200;
    double radar_range_resolution = 0.5;
    double speckle_sigma = 0.05;
    double streak_probability = 0.1;
    double ghost_probability = 0.02;
};

/// Rejection-samples wall segments and pole disks that lie entirely inside
/// the centered extent x extent square. Deterministic given cfg.seed.
World generate_world(const WorldConfig& cfg);

/// A wobbled circle around the world center with consecutive poses at most
/// 0.5 m apart and headings along the path tangent. With a positive
/// revisit_fraction the circle closes exactly and the final poses retrace the
/// path start with jittered positions and a fresh uniform heading offset per
/// 50-pose segment; with revisit_fraction 0 the circle is left open so no
/// pose comes near a much earlier one.
Trajectory generate_trajectory(const World& world, int pose_count,
                               double revisit_fraction, std::uint64_t seed);

/// Every stride-th pose of a mapping trajectory with timestamps re-based and
/// a fresh uniform heading offset per 50-pose segment: the query-session
/// counterpart of a mapping run, revisiting the same places from different
/// orientations.
Trajectory make_query_trajectory(const Trajectory& map_trajectory, int stride,
                                 std::uint64_t seed);

struct RayHit {
    double range = std::numeric_limits<double>::infinity();
    double reflectivity = 0.0;

    bool valid() const { return range < std::numeric_limits<double>::infinity(); }
};

/// Nearest primitive along the ray. Poles act as point targets: a ray
/// passing within the radius of a pole center returns the distance to the
/// center itself.
RayHit cast_ray(const World& world, const Eigen::Vector2d& origin, double azimuth);

/// One horizontal sweep per configured beam, duplicated at every vertical
/// fan level with independent range noise; points come out in the sensor
/// frame and ranges at or beyond lidar_max_range are dropped.
PointCloud3D render_lidar(const World& world, const Pose2D& pose,
                          const SensorConfig& cfg, Rng& rng);

/// Polar intensity image: each azimuth bin casts one ray along its leading
/// edge (every third lidar beam direction at the defaults); a hit deposits
/// its reflectivity at the hit range bin with a three-bin Gaussian spread and
/// may spawn a half-strength ghost echo at doubled range. Nonzero bins then
/// get multiplicative speckle, at most one random azimuth row saturates per
/// scan, and everything clamps to [0, 1].
RadarPolarScan render_radar(const World& world, const Pose2D& pose,
                            const SensorConfig& cfg, Rng& rng);

}  // namespace placerec
