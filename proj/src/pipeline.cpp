#include "placerec/pipeline.hpp"

namespace placerec {

Session render_session(const World& world, const Trajectory& trajectory,
                       const SensorConfig& cfg, std::uint64_t seed) {
    Session session;
    session.trajectory = trajectory;
    session.clouds.reserve(trajectory.size());
    session.scans.reserve(trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        Rng lidar_rng = Rng::keyed(seed, streams::lidar, i);
        Rng radar_rng = Rng::keyed(seed, streams::radar, i);
        session.clouds.push_back(render_lidar(world, trajectory[i], cfg, lidar_rng));
        session.scans.push_back(render_radar(world, trajectory[i], cfg, radar_rng));
    }
    return session;
}

std::vector<PolarDescriptor> session_lidar_descriptors(const Session& session,
                                                       const SubmapConfig& submap_cfg,
                                                       const DescriptorConfig& cfg) {
    std::vector<PolarDescriptor> descriptors;
    descriptors.reserve(session.trajectory.size());
    for (std::size_t i = 0; i < session.trajectory.size(); ++i) {
        const SubmapBounds bounds = submap_bounds(session.trajectory, i, submap_cfg);
        const PointCloud3D submap =
            build_submap(session.trajectory, session.clouds, bounds, submap_cfg);
        descriptors.push_back(lidar_descriptor(submap, cfg));
    }
    return descriptors;
}

std::vector<PolarDescriptor> session_radar_descriptors(const Session& session,
                                                       const DescriptorConfig& cfg) {
    std::vector<PolarDescriptor> descriptors;
    descriptors.reserve(session.scans.size());
    for (const RadarPolarScan& scan : session.scans)
        descriptors.push_back(radar_descriptor(scan, cfg));
    return descriptors;
}

Eigen::MatrixXd embed_signature(const NetParams& params, const PolarDescriptor& desc) {
    return signature_of(net_forward(params, desc.values.cast<double>()));
}

Eigen::MatrixXd identity_signature(const PolarDescriptor& desc) {
    return signature_of(desc.values.cast<double>());
}

TrainSet make_train_set(const Trajectory& trajectory,
                        const std::vector<PolarDescriptor>& lidar,
                        const std::vector<PolarDescriptor>& radar) {
    if (lidar.size() != trajectory.size() || radar.size() != trajectory.size())
        throw Error("descriptor lists must match the trajectory length");
    TrainSet set;
    set.locations.reserve(trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i)
        set.locations.push_back({lidar[i], radar[i], trajectory[i]});
    return set;
}

}  // namespace placerec
