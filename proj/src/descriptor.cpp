#include "placerec/descriptor.hpp"

#include <cmath>

namespace placerec {

static void check_config(const DescriptorConfig& cfg) {
    if (cfg.rings < 1 || cfg.sectors < 1 || cfg.r_max <= 0.0)
        throw Error("descriptor config requires rings, sectors >= 1 and r_max > 0");
}

static int sector_of(double azimuth, const DescriptorConfig& cfg) {
    const double width = 2.0 * kPi / cfg.sectors;
    int s = static_cast<int>(std::floor((azimuth + kPi) / width));
    if (s >= cfg.sectors) s = 0;  // azimuth == +pi wraps onto -pi
    if (s < 0) s = 0;
    return s;
}

PolarDescriptor lidar_descriptor(const PointCloud3D& cloud, const DescriptorConfig& cfg) {
    check_config(cfg);
    PolarDescriptor desc;
    desc.modality = Modality::lidar;
    desc.values = Eigen::MatrixXf::Zero(cfg.rings, cfg.sectors);
    const double ring_width = cfg.r_max / cfg.rings;
    for (const Point3D& p : cloud.points) {
        const double r = std::hypot(p.x, p.y);
        if (r >= cfg.r_max) continue;
        const int ring = static_cast<int>(std::floor(r / ring_width));
        const int sector = sector_of(std::atan2(p.y, p.x), cfg);
        desc.values(ring, sector) = 1.0f;
    }
    return desc;
}

PolarDescriptor radar_descriptor(const RadarPolarScan& scan, const DescriptorConfig& cfg) {
    check_config(cfg);
    if (scan.n_range * scan.range_resolution < cfg.r_max)
        throw Error("radar scan covers " +
                    std::to_string(scan.n_range * scan.range_resolution) +
                    " m, less than the descriptor r_max");
    PolarDescriptor desc;
    desc.modality = Modality::radar;
    desc.values = Eigen::MatrixXf::Zero(cfg.rings, cfg.sectors);
    const double ring_width = cfg.r_max / cfg.rings;
    for (int a = 0; a < scan.n_azimuth; ++a) {
        const double azimuth = -kPi + (a + 0.5) * 2.0 * kPi / scan.n_azimuth;
        const int sector = sector_of(azimuth, cfg);
        for (int k = 0; k < scan.n_range; ++k) {
            const double range = (k + 0.5) * scan.range_resolution;
            if (range >= cfg.r_max) break;
            const int ring = static_cast<int>(std::floor(range / ring_width));
            float& cell = desc.values(ring, sector);
            cell = std::max(cell, scan.intensities(a, k));
        }
    }
    return desc;
}

template <typename M>
static M rotate_impl(const M& m, int k) {
    const int w = static_cast<int>(m.cols());
    k = ((k % w) + w) % w;
    M out(m.rows(), w);
    out.leftCols(w - k) = m.rightCols(w - k);
    out.rightCols(k) = m.leftCols(k);
    return out;
}

Eigen::MatrixXf rotate_columns(const Eigen::MatrixXf& m, int k) {
    return rotate_impl(m, k);
}
Eigen::MatrixXd rotate_columns(const Eigen::MatrixXd& m, int k) {
    return rotate_impl(m, k);
}

}  // namespace placerec
