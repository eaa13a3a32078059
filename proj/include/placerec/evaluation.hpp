#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "placerec/geometry.hpp"
#include "placerec/retrieval.hpp"

namespace placerec {

struct EvalConfig {
    double distance_threshold = 3.0;
    int pr_threshold_count = 200;
    int exclusion_window = 50;
};

/// Binary matrix with entry (i, j) = 1 iff query pose i and database pose j
/// are within d meters in the plane.
Eigen::MatrixXi ground_truth_matrix(const std::vector<Pose2D>& query_poses,
                                    const std::vector<Pose2D>& db_poses, double d);

/// Percentage of queries whose top-1 retrieval lies within d of the query
/// pose. Every query counts in the denominator, matchless ones included.
double recall_at_1(const std::vector<RankedMatch>& top1,
                   const std::vector<Pose2D>& query_poses,
                   const std::vector<Pose2D>& db_poses, double d);

struct PrPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

struct PrCurve {
    std::vector<PrPoint> points;
    double max_f1 = 0.0;
};

/// Sweeps pr_threshold_count thresholds over the observed range of top-1
/// distances; a query predicts a match when its top-1 distance is at or
/// below the threshold. Precision is TP/(TP+FP), defined as 1 with no
/// predictions; recall divides by the number of queries that have at least
/// one true within-d database entry. Queries without any possible true match
/// still count as false positives when they predict.
PrCurve pr_curve(const std::vector<RankedMatch>& top1, const Eigen::MatrixXi& gt,
                 const EvalConfig& cfg);

/// Loop closures of a session against itself: pairs (i, j) with
/// j <= i - exclusion_window whose similarity reaches the threshold, in
/// row-major scan order.
std::vector<std::pair<int, int>> detect_loops(const SimilarityMatrix& sim,
                                              double threshold, int exclusion_window);

}  // namespace placerec
