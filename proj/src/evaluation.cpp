#include "placerec/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace placerec {

Eigen::MatrixXi ground_truth_matrix(const std::vector<Pose2D>& query_poses,
                                    const std::vector<Pose2D>& db_poses, double d) {
    if (d <= 0.0) throw Error("distance threshold must be positive");
    Eigen::MatrixXi gt(query_poses.size(), db_poses.size());
    for (Eigen::Index i = 0; i < gt.rows(); ++i)
        for (Eigen::Index j = 0; j < gt.cols(); ++j)
            gt(i, j) = query_poses[i].planar_distance_to(db_poses[j]) <= d ? 1 : 0;
    return gt;
}

namespace {

void check_top1(const std::vector<RankedMatch>& top1, std::size_t query_count,
                std::size_t db_count) {
    if (top1.size() != query_count)
        throw Error("expected one top-1 result per query");
    for (const RankedMatch& m : top1)
        if (m.id < 0 || static_cast<std::size_t>(m.id) >= db_count)
            throw Error("top-1 id " + std::to_string(m.id) +
                        " is outside the database");
}

}  // namespace

double recall_at_1(const std::vector<RankedMatch>& top1,
                   const std::vector<Pose2D>& query_poses,
                   const std::vector<Pose2D>& db_poses, double d) {
    check_top1(top1, query_poses.size(), db_poses.size());
    if (top1.empty()) throw Error("recall needs at least one query");
    int correct = 0;
    for (std::size_t i = 0; i < top1.size(); ++i)
        if (query_poses[i].planar_distance_to(db_poses[top1[i].id]) <= d) ++correct;
    return 100.0 * correct / static_cast<double>(top1.size());
}

PrCurve pr_curve(const std::vector<RankedMatch>& top1, const Eigen::MatrixXi& gt,
                 const EvalConfig& cfg) {
    check_top1(top1, gt.rows(), gt.cols());
    if (top1.empty()) throw Error("PR curve needs at least one query");
    if (cfg.pr_threshold_count < 1) throw Error("pr_threshold_count must be >= 1");

    const std::size_t n = top1.size();
    std::vector<bool> correct(n);
    int positives = 0;
    double d_min = top1[0].distance, d_max = top1[0].distance;
    for (std::size_t i = 0; i < n; ++i) {
        correct[i] = gt(i, top1[i].id) != 0;
        if (gt.row(i).any()) ++positives;
        d_min = std::min(d_min, top1[i].distance);
        d_max = std::max(d_max, top1[i].distance);
    }

    PrCurve curve;
    const int count = cfg.pr_threshold_count;
    curve.points.reserve(count);
    for (int t = 0; t < count; ++t) {
        const double tau =
            count == 1 ? d_max : d_min + (d_max - d_min) * t / (count - 1);
        int tp = 0, fp = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (top1[i].distance > tau) continue;
            if (correct[i])
                ++tp;
            else
                ++fp;
        }
        const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 1.0;
        const double recall = positives > 0 ? static_cast<double>(tp) / positives : 0.0;
        curve.points.push_back({tau, precision, recall});
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        curve.max_f1 = std::max(curve.max_f1, f1);
    }
    return curve;
}

std::vector<std::pair<int, int>> detect_loops(const SimilarityMatrix& sim,
                                              double threshold, int exclusion_window) {
    if (sim.values.rows() != sim.values.cols())
        throw Error("loop detection expects a square self-similarity matrix");
    if (exclusion_window < 0) throw Error("exclusion window must be non-negative");
    std::vector<std::pair<int, int>> loops;
    const int n = static_cast<int>(sim.values.rows());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i - exclusion_window; ++j)
            if (sim.values(i, j) >= threshold) loops.emplace_back(i, j);
    return loops;
}

}  // namespace placerec
