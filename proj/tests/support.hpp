#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "placerec/descriptor.hpp"
#include "placerec/geometry.hpp"
#include "placerec/retrieval.hpp"
#include "placerec/rng.hpp"
#include "placerec/simulator.hpp"
#include "placerec/submap.hpp"

// Naive reference implementations the tests compare the library against.
// Everything here is written straight from the definitions, brute force on
// purpose, and shares no code with the implementations under test.
namespace testsupport {

// Full O((h*w)^2) 2D DFT, magnitude sqrt(re^2 + im^2 + 1e-12), zero
// frequency moved to (h/2, w/2), central 32x32 block, flattened L2 norm.
inline Eigen::MatrixXd naive_signature(const Eigen::MatrixXd& x) {
    const int h = static_cast<int>(x.rows());
    const int w = static_cast<int>(x.cols());
    if (x.isZero(0.0)) return Eigen::MatrixXd::Zero(32, 32);

    Eigen::MatrixXd centered(h, w);
    for (int k = 0; k < h; ++k) {
        for (int l = 0; l < w; ++l) {
            std::complex<double> acc(0.0, 0.0);
            for (int m = 0; m < h; ++m)
                for (int n = 0; n < w; ++n) {
                    const double phase = -2.0 * placerec::kPi *
                                         (static_cast<double>(k) * m / h +
                                          static_cast<double>(l) * n / w);
                    acc += x(m, n) * std::complex<double>(std::cos(phase),
                                                          std::sin(phase));
                }
            const double mag =
                std::sqrt(acc.real() * acc.real() + acc.imag() * acc.imag() + 1e-12);
            centered((k + h / 2) % h, (l + w / 2) % w) = mag;
        }
    }
    Eigen::MatrixXd crop = centered.block(h / 2 - 16, w / 2 - 16, 32, 32);
    return crop / crop.norm();
}

// Per-point binning straight from the half-open bin definitions.
inline Eigen::MatrixXf naive_lidar_binning(const placerec::PointCloud3D& cloud,
                                           const placerec::DescriptorConfig& cfg) {
    Eigen::MatrixXf out = Eigen::MatrixXf::Zero(cfg.rings, cfg.sectors);
    for (const placerec::Point3D& p : cloud.points) {
        const double r = std::hypot(p.x, p.y);
        if (r >= cfg.r_max) continue;
        const int ring = static_cast<int>(r / (cfg.r_max / cfg.rings));
        double az = std::atan2(p.y, p.x);
        int sector = static_cast<int>((az + placerec::kPi) /
                                      (2.0 * placerec::kPi / cfg.sectors));
        if (sector >= cfg.sectors) sector = 0;  // +pi wraps around
        if (ring >= 0 && ring < cfg.rings) out(ring, sector) = 1.0f;
    }
    return out;
}

// Exhaustive max-pool of native polar bins into descriptor cells, keyed by
// bin centers.
inline Eigen::MatrixXf naive_radar_pooling(const placerec::RadarPolarScan& scan,
                                           const placerec::DescriptorConfig& cfg) {
    Eigen::MatrixXf out = Eigen::MatrixXf::Zero(cfg.rings, cfg.sectors);
    const double az_width = 2.0 * placerec::kPi / scan.n_azimuth;
    for (int a = 0; a < scan.n_azimuth; ++a) {
        for (int k = 0; k < scan.n_range; ++k) {
            const double r = (k + 0.5) * scan.range_resolution;
            if (r >= cfg.r_max) continue;
            double az = -placerec::kPi + (a + 0.5) * az_width;
            const int ring = static_cast<int>(r / (cfg.r_max / cfg.rings));
            int sector = static_cast<int>((az + placerec::kPi) /
                                          (2.0 * placerec::kPi / cfg.sectors));
            if (sector >= cfg.sectors) sector = 0;
            if (ring < 0 || ring >= cfg.rings) continue;
            out(ring, sector) = std::max(out(ring, sector), scan.intensities(a, k));
        }
    }
    return out;
}

// Mean column cosine distance at every shift of b, smallest shift wins ties.
inline std::pair<double, int> naive_sc_distance(const placerec::PolarDescriptor& a,
                                                const placerec::PolarDescriptor& b) {
    const int w = static_cast<int>(a.values.cols());
    double best = std::numeric_limits<double>::infinity();
    int best_shift = 0;
    for (int s = 0; s < w; ++s) {
        double total = 0.0;
        for (int j = 0; j < w; ++j) {
            const Eigen::VectorXd ca = a.values.col(j).cast<double>();
            const Eigen::VectorXd cb = b.values.col((j + s) % w).cast<double>();
            const double na = ca.norm();
            const double nb = cb.norm();
            if (na == 0.0 && nb == 0.0) continue;
            if (na == 0.0 || nb == 0.0)
                total += 1.0;
            else
                total += 1.0 - ca.dot(cb) / (na * nb);
        }
        const double d = total / w;
        if (d < best) {
            best = d;
            best_shift = s;
        }
    }
    return {best, best_shift};
}

// First-violation submap bound: tests every candidate window in full rather
// than walking greedily.
inline std::pair<std::size_t, std::size_t> naive_submap_bounds(
    const placerec::Trajectory& traj, std::size_t center,
    const placerec::SubmapConfig& cfg) {
    const auto satisfies = [&](std::size_t i) {
        const double d = traj[center].planar_distance_to(traj[i]);
        const double dyaw =
            std::abs(placerec::wrap_angle(traj[center].yaw - traj[i].yaw));
        return d <= cfg.r_max && dyaw <= cfg.theta_max;
    };
    const auto window_ok = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i <= hi; ++i)
            if (!satisfies(i)) return false;
        return true;
    };
    std::size_t start = center;
    while (start > 0 && window_ok(start - 1, center)) --start;
    std::size_t end = center;
    while (end + 1 < traj.size() && window_ok(center, end + 1)) ++end;
    return {start, end};
}

// Nearest primitive along a ray, re-derived with linear solves instead of
// the cross-product form used by the simulator.
inline placerec::RayHit naive_cast_ray(const placerec::World& world,
                                       const Eigen::Vector2d& origin, double azimuth) {
    const Eigen::Vector2d dir(std::cos(azimuth), std::sin(azimuth));
    placerec::RayHit hit;
    for (const placerec::Wall& wall : world.walls) {
        Eigen::Matrix2d A;
        A.col(0) = dir;
        A.col(1) = wall.p0 - wall.p1;
        if (std::abs(A.determinant()) < 1e-12) continue;
        const Eigen::Vector2d tu = A.fullPivLu().solve(wall.p0 - origin);
        if (tu(0) > 1e-9 && tu(1) >= 0.0 && tu(1) <= 1.0 && tu(0) < hit.range) {
            hit.range = tu(0);
            hit.reflectivity = wall.reflectivity;
        }
    }
    for (const placerec::Pole& pole : world.poles) {
        const Eigen::Vector2d rel = Eigen::Vector2d(pole.x, pole.y) - origin;
        const double along = rel.dot(dir);
        if (along <= 0.0) continue;
        const double perp = (rel - along * dir).norm();
        if (perp > pole.radius) continue;
        const double range = rel.norm();
        if (range < hit.range) {
            hit.range = range;
            hit.reflectivity = pole.reflectivity;
        }
    }
    return hit;
}

// Descending-similarity helpers for the metric oracles: recall@1 and a PR
// sweep recomputed from scratch.
inline double naive_recall_at_1(const std::vector<placerec::RankedMatch>& top1,
                                const std::vector<placerec::Pose2D>& query_poses,
                                const std::vector<placerec::Pose2D>& db_poses,
                                double d) {
    int correct = 0;
    for (std::size_t i = 0; i < top1.size(); ++i)
        if (query_poses[i].planar_distance_to(db_poses[top1[i].id]) <= d) ++correct;
    return top1.empty() ? 0.0 : 100.0 * correct / static_cast<double>(top1.size());
}

struct NaivePr {
    std::vector<double> thresholds, precisions, recalls;
    double max_f1 = 0.0;
};

inline NaivePr naive_pr(const std::vector<placerec::RankedMatch>& top1,
                        const Eigen::MatrixXi& gt, int threshold_count) {
    NaivePr out;
    const int n = static_cast<int>(top1.size());
    int positives = 0;
    for (int i = 0; i < static_cast<int>(gt.rows()); ++i)
        if (gt.row(i).sum() > 0) ++positives;
    double d_min = std::numeric_limits<double>::infinity();
    double d_max = -std::numeric_limits<double>::infinity();
    for (const placerec::RankedMatch& m : top1) {
        d_min = std::min(d_min, m.distance);
        d_max = std::max(d_max, m.distance);
    }
    for (int t = 0; t < threshold_count; ++t) {
        const double tau = threshold_count == 1
                               ? d_max
                               : d_min + (d_max - d_min) * t / (threshold_count - 1);
        int tp = 0, fp = 0;
        for (int i = 0; i < n; ++i) {
            if (top1[i].distance > tau) continue;
            if (gt(i, top1[i].id) == 1)
                ++tp;
            else
                ++fp;
        }
        const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 1.0;
        const double recall = positives > 0 ? static_cast<double>(tp) / positives : 0.0;
        out.thresholds.push_back(tau);
        out.precisions.push_back(precision);
        out.recalls.push_back(recall);
        if (precision + recall > 0.0)
            out.max_f1 = std::max(out.max_f1, 2.0 * precision * recall /
                                                  (precision + recall));
    }
    return out;
}

inline placerec::PolarDescriptor random_descriptor(placerec::Rng& rng,
                                                   placerec::Modality modality,
                                                   int rings = 40, int sectors = 120) {
    placerec::PolarDescriptor d;
    d.modality = modality;
    d.values.resize(rings, sectors);
    for (int i = 0; i < rings; ++i)
        for (int j = 0; j < sectors; ++j)
            d.values(i, j) = modality == placerec::Modality::lidar
                                 ? (rng.bernoulli(0.25) ? 1.0f : 0.0f)
                                 : static_cast<float>(rng.uniform01());
    return d;
}

// Scratch directory under the build tree, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("placerec_" + tag + "_" + std::to_string(++counter));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

}  // namespace testsupport
