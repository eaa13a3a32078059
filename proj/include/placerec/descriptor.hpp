#pragma once

#include "placerec/geometry.hpp"
#include "placerec/io.hpp"

namespace placerec {

struct DescriptorConfig {
    int rings = 40;
    int sectors = 120;
    double r_max = 80.0;
};

/// Binary occupancy: cell (i,j) = 1 iff at least one point with planar
/// range < r_max falls in ring i, sector j. Input in the center pose frame,
/// z already filtered upstream.
PolarDescriptor lidar_descriptor(const PointCloud3D& cloud, const DescriptorConfig& cfg);

/// Max-pools native (azimuth, range) intensities into ring x sector cells
/// by bin-center position; native bins at or beyond r_max are ignored.
PolarDescriptor radar_descriptor(const RadarPolarScan& scan, const DescriptorConfig& cfg);

/// Result column j takes column (j + k) mod width; a vehicle yaw increase
/// of k sector widths transforms a descriptor exactly this way.
Eigen::MatrixXf rotate_columns(const Eigen::MatrixXf& m, int k);
Eigen::MatrixXd rotate_columns(const Eigen::MatrixXd& m, int k);

}  // namespace placerec
