#pragma once

#include <cstdint>
#include <vector>

#include "placerec/descriptor.hpp"
#include "placerec/network.hpp"
#include "placerec/signature.hpp"
#include "placerec/simulator.hpp"
#include "placerec/submap.hpp"
#include "placerec/training.hpp"

namespace placerec {

struct Session {
    Trajectory trajectory;
    std::vector<PointCloud3D> clouds;
    std::vector<RadarPolarScan> scans;
};

/// Renders both sensors at every trajectory pose. Each render draws from its
/// own stream keyed by (seed, sensor, pose index), so outputs are independent
/// of rendering order.
Session render_session(const World& world, const Trajectory& trajectory,
                       const SensorConfig& cfg, std::uint64_t seed);

/// One lidar descriptor per pose, each built from the submap aggregated
/// around that pose.
std::vector<PolarDescriptor> session_lidar_descriptors(const Session& session,
                                                       const SubmapConfig& submap_cfg,
                                                       const DescriptorConfig& cfg);

/// One radar descriptor per pose, each from the single scan at that pose.
std::vector<PolarDescriptor> session_radar_descriptors(const Session& session,
                                                       const DescriptorConfig& cfg);

/// Signature of a descriptor pushed through the embedding network.
Eigen::MatrixXd embed_signature(const NetParams& params, const PolarDescriptor& desc);

/// Signature of the raw descriptor itself, no network in front.
Eigen::MatrixXd identity_signature(const PolarDescriptor& desc);

/// Pairs up per-pose descriptors of both modalities into training locations.
TrainSet make_train_set(const Trajectory& trajectory,
                        const std::vector<PolarDescriptor>& lidar,
                        const std::vector<PolarDescriptor>& radar);

}  // namespace placerec
