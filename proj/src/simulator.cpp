#include "placerec/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace placerec {

namespace {

constexpr int kHeadingSegment = 50;
constexpr double kPoseSpacing = 0.4;
constexpr double kRevisitJitter = 0.02;
constexpr double kRangeSpreadSigmaBins = 0.25;

void validate_world_config(const WorldConfig& cfg) {
    if (cfg.extent <= 0.0) throw Error("world extent must be positive");
    if (cfg.wall_count < 0 || cfg.pole_count < 0)
        throw Error("primitive counts must be non-negative");
    if (!(cfg.reflectivity_min > 0.0 && cfg.reflectivity_min <= cfg.reflectivity_max &&
          cfg.reflectivity_max <= 1.0))
        throw Error("reflectivity range must satisfy 0 < min <= max <= 1");
}

void validate_sensor_config(const SensorConfig& cfg) {
    if (cfg.lidar_beams < 1 || cfg.radar_azimuth_bins < 1 || cfg.radar_range_bins < 1)
        throw Error("sensor bin counts must be >= 1");
    if (cfg.lidar_z_levels.empty()) throw Error("lidar needs at least one fan level");
    if (cfg.lidar_range_sigma < 0.0 || cfg.speckle_sigma < 0.0)
        throw Error("noise sigmas must be non-negative");
    if (cfg.lidar_max_range <= 0.0 || cfg.radar_range_resolution <= 0.0)
        throw Error("ranges and resolutions must be positive");
    if (cfg.streak_probability < 0.0 || cfg.streak_probability > 1.0 ||
        cfg.ghost_probability < 0.0 || cfg.ghost_probability > 1.0)
        throw Error("probabilities must lie in [0, 1]");
}

}  // namespace

World generate_world(const WorldConfig& cfg) {
    validate_world_config(cfg);
    World world;
    world.extent = cfg.extent;
    const double half = cfg.extent / 2.0;
    Rng rng = Rng::keyed(cfg.seed, streams::world);

    world.walls.reserve(cfg.wall_count);
    for (int i = 0; i < cfg.wall_count; ++i) {
        Wall wall;
        while (true) {
            const double cx = rng.uniform(-half, half);
            const double cy = rng.uniform(-half, half);
            const double angle = rng.uniform(0.0, kPi);
            const double len = rng.uniform(6.0, 30.0);
            const Eigen::Vector2d arm =
                0.5 * len * Eigen::Vector2d(std::cos(angle), std::sin(angle));
            wall.p0 = Eigen::Vector2d(cx, cy) - arm;
            wall.p1 = Eigen::Vector2d(cx, cy) + arm;
            if (wall.p0.cwiseAbs().maxCoeff() <= half &&
                wall.p1.cwiseAbs().maxCoeff() <= half)
                break;
        }
        wall.reflectivity = rng.uniform(cfg.reflectivity_min, cfg.reflectivity_max);
        world.walls.push_back(wall);
    }

    world.poles.reserve(cfg.pole_count);
    for (int i = 0; i < cfg.pole_count; ++i) {
        Pole pole;
        pole.radius = rng.uniform(0.2, 0.6);
        pole.x = rng.uniform(-half + pole.radius, half - pole.radius);
        pole.y = rng.uniform(-half + pole.radius, half - pole.radius);
        pole.reflectivity = rng.uniform(cfg.reflectivity_min, cfg.reflectivity_max);
        world.poles.push_back(pole);
    }
    return world;
}

Trajectory generate_trajectory(const World& world, int pose_count,
                               double revisit_fraction, std::uint64_t seed) {
    if (pose_count < 2) throw Error("pose_count must be >= 2");
    if (revisit_fraction < 0.0 || revisit_fraction > 1.0)
        throw Error("revisit_fraction must lie in [0, 1]");

    int revisit = static_cast<int>(revisit_fraction * pose_count);
    int main_count = pose_count - revisit;
    if (main_count < 2) {
        main_count = 2;
        revisit = pose_count - 2;
    }

    // With a revisit tail the circle closes after main_count steps so the
    // tail continues seamlessly from the start; without one, extra arc is
    // reserved to leave a gap between the last pose and the first.
    const int angle_steps = revisit > 0 ? main_count : main_count + 40;
    const double dphi = 2.0 * kPi / angle_steps;
    const double nominal_radius = kPoseSpacing * angle_steps / (2.0 * kPi);
    const double radius = std::min(nominal_radius, 0.45 * world.extent - 2.0);
    if (radius <= 0.0) throw Error("world extent too small for a trajectory");
    // Keeps the radial wobble slow enough that consecutive poses stay
    // within the 0.5 m spacing bound.
    const double wobble_amp = std::min(2.0, angle_steps / 126.0);
    const int wobble_cycles = 4;

    Rng rng = Rng::keyed(seed, streams::trajectory);
    const double phi0 = rng.uniform(0.0, 2.0 * kPi);
    const double wobble_phase = rng.uniform(0.0, 2.0 * kPi);

    const auto position = [&](int i) {
        const double along = i * dphi;
        const double r = radius + wobble_amp * std::sin(wobble_cycles * along + wobble_phase);
        return Eigen::Vector2d(r * std::cos(phi0 + along), r * std::sin(phi0 + along));
    };

    Trajectory traj;
    traj.poses.reserve(pose_count);
    for (int i = 0; i < main_count; ++i) {
        const Eigen::Vector2d p = position(i);
        const Eigen::Vector2d ahead = position(i + 1) - p;
        Pose2D pose;
        pose.t = 0.1 * i;
        pose.x = p.x();
        pose.y = p.y();
        pose.yaw = std::atan2(ahead.y(), ahead.x());
        traj.poses.push_back(pose);
    }

    double segment_offset = 0.0;
    for (int t = 0; t < revisit; ++t) {
        if (t % kHeadingSegment == 0) segment_offset = rng.uniform(-kPi, kPi);
        const double jitter_angle = rng.uniform(0.0, 2.0 * kPi);
        const double jitter_mag = rng.uniform(0.0, kRevisitJitter);
        const Pose2D& base = traj.poses[t % main_count];
        Pose2D pose;
        pose.t = 0.1 * (main_count + t);
        pose.x = base.x + jitter_mag * std::cos(jitter_angle);
        pose.y = base.y + jitter_mag * std::sin(jitter_angle);
        pose.yaw = wrap_angle(base.yaw + segment_offset);
        traj.poses.push_back(pose);
    }
    return traj;
}

Trajectory make_query_trajectory(const Trajectory& map_trajectory, int stride,
                                 std::uint64_t seed) {
    if (stride < 1) throw Error("stride must be >= 1");
    if (map_trajectory.empty()) throw Error("empty map trajectory");
    Rng rng = Rng::keyed(seed, streams::trajectory);
    Trajectory traj;
    double segment_offset = 0.0;
    int out = 0;
    for (std::size_t i = 0; i < map_trajectory.size(); i += stride, ++out) {
        if (out % kHeadingSegment == 0) segment_offset = rng.uniform(-kPi, kPi);
        Pose2D pose = map_trajectory[i];
        pose.t = 0.1 * out;
        pose.yaw = wrap_angle(pose.yaw + segment_offset);
        traj.poses.push_back(pose);
    }
    return traj;
}

RayHit cast_ray(const World& world, const Eigen::Vector2d& origin, double azimuth) {
    const Eigen::Vector2d dir(std::cos(azimuth), std::sin(azimuth));
    const auto cross = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return a.x() * b.y() - a.y() * b.x();
    };

    RayHit best;
    for (const Wall& w : world.walls) {
        const Eigen::Vector2d edge = w.p1 - w.p0;
        const double denom = cross(dir, edge);
        if (std::abs(denom) < 1e-12) continue;
        const Eigen::Vector2d f = w.p0 - origin;
        const double t = cross(f, edge) / denom;
        const double u = cross(f, dir) / denom;
        if (t > 1e-9 && u >= 0.0 && u <= 1.0 && t < best.range)
            best = {t, w.reflectivity};
    }
    for (const Pole& p : world.poles) {
        const Eigen::Vector2d rel(p.x - origin.x(), p.y - origin.y());
        const double proj = rel.dot(dir);
        if (proj <= 0.0) continue;
        const double center_sq = rel.squaredNorm();
        if (center_sq - proj * proj > p.radius * p.radius) continue;
        const double range = std::sqrt(center_sq);
        if (range < best.range) best = {range, p.reflectivity};
    }
    return best;
}

PointCloud3D render_lidar(const World& world, const Pose2D& pose,
                          const SensorConfig& cfg, Rng& rng) {
    validate_sensor_config(cfg);
    const Eigen::Vector2d origin(pose.x, pose.y);
    PointCloud3D cloud;
    for (int b = 0; b < cfg.lidar_beams; ++b) {
        const double azimuth = -kPi + b * (2.0 * kPi / cfg.lidar_beams);
        const RayHit hit = cast_ray(world, origin, pose.yaw + azimuth);
        if (!hit.valid()) continue;
        for (double z : cfg.lidar_z_levels) {
            const double range = hit.range + cfg.lidar_range_sigma * rng.normal();
            if (range <= 0.0 || range >= cfg.lidar_max_range) continue;
            cloud.points.push_back(
                {range * std::cos(azimuth), range * std::sin(azimuth), z});
        }
    }
    return cloud;
}

namespace {

void deposit_return(RadarPolarScan& scan, int azimuth_bin, double range,
                    double reflectivity) {
    const double u = range / scan.range_resolution;
    const int k = static_cast<int>(std::floor(u));
    if (k < 0 || k >= scan.n_range) return;
    for (int m = k - 1; m <= k + 1; ++m) {
        if (m < 0 || m >= scan.n_range) continue;
        const double dist = m - k;
        const double value =
            reflectivity *
            std::exp(-dist * dist / (2.0 * kRangeSpreadSigmaBins * kRangeSpreadSigmaBins));
        float& cell = scan.intensities(azimuth_bin, m);
        cell = std::max(cell, static_cast<float>(value));
    }
}

}  // namespace

RadarPolarScan render_radar(const World& world, const Pose2D& pose,
                            const SensorConfig& cfg, Rng& rng) {
    validate_sensor_config(cfg);
    RadarPolarScan scan;
    scan.n_azimuth = cfg.radar_azimuth_bins;
    scan.n_range = cfg.radar_range_bins;
    scan.range_resolution = cfg.radar_range_resolution;
    scan.intensities = Eigen::MatrixXf::Zero(cfg.radar_azimuth_bins, cfg.radar_range_bins);

    const Eigen::Vector2d origin(pose.x, pose.y);
    const double bin_width = 2.0 * kPi / cfg.radar_azimuth_bins;

    // One cast per bin along its leading edge; at the default bin counts that
    // is every third lidar beam direction, so the radar sees the same world
    // through a three-times-coarser angular grid.
    for (int a = 0; a < cfg.radar_azimuth_bins; ++a) {
        const double azimuth = -kPi + a * bin_width;
        const RayHit hit = cast_ray(world, origin, pose.yaw + azimuth);
        if (!hit.valid()) continue;
        deposit_return(scan, a, hit.range, hit.reflectivity);
        if (rng.bernoulli(cfg.ghost_probability))
            deposit_return(scan, a, 2.0 * hit.range, 0.5 * hit.reflectivity);
    }

    for (int a = 0; a < cfg.radar_azimuth_bins; ++a)
        for (int k = 0; k < cfg.radar_range_bins; ++k) {
            float& cell = scan.intensities(a, k);
            if (cell != 0.0f)
                cell = static_cast<float>(cell * (1.0 + cfg.speckle_sigma * rng.normal()));
        }

    if (rng.bernoulli(cfg.streak_probability)) {
        const int row = static_cast<int>(rng.uniform_index(cfg.radar_azimuth_bins));
        scan.intensities.row(row).setConstant(1.0f);
    }

    scan.intensities = scan.intensities.cwiseMax(0.0f).cwiseMin(1.0f);
    return scan;
}

}  // namespace placerec
