#include <cmath>

#include "doctest.h"
#include "placerec/descriptor.hpp"
#include "placerec/rng.hpp"
#include "support.hpp"

using namespace placerec;

namespace {

PointCloud3D random_cloud(Rng& rng, std::size_t n, double spread) {
    PointCloud3D cloud;
    for (std::size_t i = 0; i < n; ++i)
        cloud.points.push_back({rng.uniform(-spread, spread),
                                rng.uniform(-spread, spread), rng.uniform(-1.0, 3.0)});
    return cloud;
}

}  // namespace

TEST_SUITE("descriptor") {

TEST_CASE("single point lands in ring 0, sector 60") {
    PointCloud3D cloud;
    cloud.points.push_back({1.0, 0.0, 0.0});
    const PolarDescriptor d = lidar_descriptor(cloud, DescriptorConfig{});
    CHECK(d.modality == Modality::lidar);
    REQUIRE(d.rings() == 40);
    REQUIRE(d.sectors() == 120);
    CHECK(d.values(0, 60) == 1.0f);
    CHECK(d.values.sum() == 1.0f);
}

TEST_CASE("empty cloud gives the zero descriptor") {
    CHECK(lidar_descriptor(PointCloud3D{}, DescriptorConfig{}).values.isZero(0.0f));
}

TEST_CASE("occupancy matches a per-point binning oracle") {
    Rng rng(1);
    const DescriptorConfig cfg;
    for (int trial = 0; trial < 10; ++trial) {
        const PointCloud3D cloud = random_cloud(rng, 1000, 100.0);
        CHECK(lidar_descriptor(cloud, cfg).values ==
              testsupport::naive_lidar_binning(cloud, cfg));
    }
}

TEST_CASE("points at or beyond r_max are dropped") {
    PointCloud3D cloud;
    cloud.points.push_back({80.0, 0.0, 0.0});
    cloud.points.push_back({0.0, -123.0, 0.0});
    CHECK(lidar_descriptor(cloud, DescriptorConfig{}).values.isZero(0.0f));
}

TEST_CASE("azimuth exactly +pi wraps into sector 0") {
    PointCloud3D cloud;
    cloud.points.push_back({-5.0, 0.0, 0.0});  // atan2(0, -5) = +pi
    const PolarDescriptor d = lidar_descriptor(cloud, DescriptorConfig{});
    CHECK(d.values(2, 0) == 1.0f);
    CHECK(d.values.sum() == 1.0f);
}

TEST_CASE("descriptor ignores point order and duplicates") {
    Rng rng(2);
    const DescriptorConfig cfg;
    PointCloud3D cloud = random_cloud(rng, 200, 70.0);
    PointCloud3D shuffled = cloud;
    for (std::size_t i = shuffled.points.size(); i > 1; --i)
        std::swap(shuffled.points[i - 1], shuffled.points[rng.uniform_index(i)]);
    shuffled.points.push_back(shuffled.points.front());
    CHECK(lidar_descriptor(cloud, cfg).values ==
          lidar_descriptor(shuffled, cfg).values);
}

TEST_CASE("rotating points by whole sectors shifts descriptor columns") {
    const DescriptorConfig cfg;
    const double sector_width = 2.0 * kPi / cfg.sectors;
    Rng rng(3);
    PointCloud3D cloud;
    // bin-center placement keeps the rotation exact
    for (int i = 0; i < 300; ++i) {
        const double r = (rng.uniform_index(cfg.rings) + 0.5) * (cfg.r_max / cfg.rings);
        const double az = -kPi + (rng.uniform_index(cfg.sectors) + 0.5) * sector_width;
        cloud.points.push_back({r * std::cos(az), r * std::sin(az), 0.0});
    }
    const int k = 17;
    PointCloud3D rotated;
    for (const Point3D& p : cloud.points) {
        const double c = std::cos(k * sector_width);
        const double s = std::sin(k * sector_width);
        rotated.points.push_back({c * p.x - s * p.y, s * p.x + c * p.y, p.z});
    }
    const Eigen::MatrixXf base = lidar_descriptor(cloud, cfg).values;
    const Eigen::MatrixXf rot = lidar_descriptor(rotated, cfg).values;
    // column j of the rotated descriptor holds what column j-k held
    CHECK(rot == rotate_columns(base, cfg.sectors - k));
}

TEST_CASE("radar pooling matches the exhaustive oracle") {
    Rng rng(4);
    const DescriptorConfig cfg;
    for (int trial = 0; trial < 5; ++trial) {
        RadarPolarScan scan;
        scan.n_azimuth = 120;
        scan.n_range = 200;
        scan.range_resolution = 0.5;
        scan.intensities.resize(scan.n_azimuth, scan.n_range);
        for (int a = 0; a < scan.n_azimuth; ++a)
            for (int k = 0; k < scan.n_range; ++k)
                scan.intensities(a, k) = static_cast<float>(rng.uniform01());
        const PolarDescriptor d = radar_descriptor(scan, cfg);
        CHECK(d.modality == Modality::radar);
        CHECK(d.values == testsupport::naive_radar_pooling(scan, cfg));
    }
}

TEST_CASE("single radar bin lands at ring 5, sector 60 with its intensity") {
    RadarPolarScan scan;
    scan.n_azimuth = 120;
    scan.n_range = 200;
    scan.range_resolution = 0.5;
    scan.intensities = Eigen::MatrixXf::Zero(120, 200);
    // azimuth bin 60 covers [0, 3deg); range bin 20 centers at 10.25 m
    scan.intensities(60, 20) = 0.7f;
    const PolarDescriptor d = radar_descriptor(scan, DescriptorConfig{});
    CHECK(d.values(5, 60) == 0.7f);
    CHECK(d.values.sum() == 0.7f);
}

TEST_CASE("radar pooling is monotone in native intensity") {
    Rng rng(5);
    RadarPolarScan scan;
    scan.n_azimuth = 40;
    scan.n_range = 180;
    scan.range_resolution = 0.5;
    scan.intensities.resize(40, 180);
    for (int a = 0; a < 40; ++a)
        for (int k = 0; k < 180; ++k)
            scan.intensities(a, k) = static_cast<float>(rng.uniform01() * 0.9);
    const DescriptorConfig cfg;
    const Eigen::MatrixXf before = radar_descriptor(scan, cfg).values;
    scan.intensities(7, 33) = 1.0f;
    const Eigen::MatrixXf after = radar_descriptor(scan, cfg).values;
    CHECK((after - before).minCoeff() >= 0.0f);
}

TEST_CASE("scan covering less range than r_max is rejected") {
    RadarPolarScan scan;
    scan.n_azimuth = 120;
    scan.n_range = 100;  // 100 bins x 0.5 m = 50 m < 80 m
    scan.range_resolution = 0.5;
    scan.intensities = Eigen::MatrixXf::Zero(120, 100);
    CHECK_THROWS_AS(radar_descriptor(scan, DescriptorConfig{}), Error);
}

TEST_CASE("rotate_columns composes and inverts") {
    Rng rng(6);
    Eigen::MatrixXf m(5, 12);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 12; ++j) m(i, j) = static_cast<float>(rng.normal());
    CHECK(rotate_columns(m, 0) == m);
    CHECK(rotate_columns(m, 12) == m);
    CHECK(rotate_columns(rotate_columns(m, 5), 7) == m);
    // result column j holds input column (j + k) mod w
    const Eigen::MatrixXf r = rotate_columns(m, 3);
    CHECK(r.col(0) == m.col(3));
    CHECK(r.col(11) == m.col(2));
}

}  // TEST_SUITE
