#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "placerec/descriptor.hpp"
#include "placerec/geometry.hpp"
#include "placerec/io.hpp"
#include "placerec/signature.hpp"

namespace placerec {

struct SignatureEntry {
    int id = 0;
    Eigen::MatrixXd signature;
    Pose2D pose;
    std::string session;
};

struct SignatureDatabase {
    std::vector<SignatureEntry> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
};

struct RankedMatch {
    int id = 0;
    double distance = 0.0;
};

/// The k nearest database signatures by Euclidean distance, ascending, ties
/// broken towards the lower id.
std::vector<RankedMatch> query_top_k(const SignatureDatabase& db,
                                     const Eigen::MatrixXd& query, int k);

struct SimilarityMatrix {
    std::vector<int> query_ids;
    std::vector<int> db_ids;
    Eigen::MatrixXd values;  // (i, j) = -distance(query i, db entry j)
};

SimilarityMatrix similarity_matrix(const SignatureDatabase& queries,
                                   const SignatureDatabase& db);

struct ScMatch {
    double distance = 0.0;
    int shift = 0;
};

/// Alignment-based descriptor distance: the minimum over all circular column
/// shifts of b of the mean column-wise cosine distance. A zero column paired
/// with a nonzero one contributes 1, two zero columns contribute 0. The
/// returned shift is the rotation rotate_columns(b, shift) that best aligns b
/// with a; ties resolve to the smallest shift. Exactly symmetric in (a, b):
/// the per-shift sum is accumulated in canonical column-pair order so the
/// result is bitwise identical with the arguments swapped.
ScMatch sc_distance(const PolarDescriptor& a, const PolarDescriptor& b);

/// Per-ring mean of the descriptor cells, the coarse pre-filter key.
Eigen::VectorXd ring_key(const PolarDescriptor& d);

struct DescriptorMatch {
    int index = 0;
    double distance = 0.0;
    int shift = 0;
};

/// Two-stage search: rank the database by Euclidean ring-key distance, keep
/// ceil(candidate_frac * N) candidates (at least one), then return the
/// sc_distance argmin among them (ties to the smallest index).
DescriptorMatch coarse_to_fine_query(const std::vector<PolarDescriptor>& db,
                                     const PolarDescriptor& query,
                                     double candidate_frac);

}  // namespace placerec
