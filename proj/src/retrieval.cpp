#include "placerec/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace placerec {

std::vector<RankedMatch> query_top_k(const SignatureDatabase& db,
                                     const Eigen::MatrixXd& query, int k) {
    if (db.empty()) throw Error("query against an empty signature database");
    if (k < 1 || static_cast<std::size_t>(k) > db.size())
        throw Error("k must be between 1 and the database size");
    std::vector<RankedMatch> ranked;
    ranked.reserve(db.size());
    for (const SignatureEntry& e : db.entries)
        ranked.push_back({e.id, signature_distance(query, e.signature)});
    std::sort(ranked.begin(), ranked.end(), [](const RankedMatch& x, const RankedMatch& y) {
        return x.distance != y.distance ? x.distance < y.distance : x.id < y.id;
    });
    ranked.resize(k);
    return ranked;
}

SimilarityMatrix similarity_matrix(const SignatureDatabase& queries,
                                   const SignatureDatabase& db) {
    if (queries.empty() || db.empty())
        throw Error("similarity matrix requires non-empty query and database sets");
    SimilarityMatrix sim;
    sim.values.resize(queries.size(), db.size());
    sim.query_ids.reserve(queries.size());
    sim.db_ids.reserve(db.size());
    for (const SignatureEntry& e : queries.entries) sim.query_ids.push_back(e.id);
    for (const SignatureEntry& e : db.entries) sim.db_ids.push_back(e.id);
    for (Eigen::Index i = 0; i < sim.values.rows(); ++i)
        for (Eigen::Index j = 0; j < sim.values.cols(); ++j)
            sim.values(i, j) = -signature_distance(queries.entries[i].signature,
                                                   db.entries[j].signature);
    return sim;
}

ScMatch sc_distance(const PolarDescriptor& a, const PolarDescriptor& b) {
    if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols())
        throw Error("descriptor shapes differ");
    const int w = static_cast<int>(a.values.cols());
    if (w == 0 || a.values.rows() == 0) throw Error("empty descriptor");

    const Eigen::MatrixXd av = a.values.cast<double>();
    const Eigen::MatrixXd bv = b.values.cast<double>();
    Eigen::VectorXd na(w), nb(w);
    for (int j = 0; j < w; ++j) {
        na[j] = av.col(j).norm();
        nb[j] = bv.col(j).norm();
    }

    const auto term = [&](int ja, int jb) -> double {
        if (na[ja] == 0.0 && nb[jb] == 0.0) return 0.0;
        if (na[ja] == 0.0 || nb[jb] == 0.0) return 1.0;
        return 1.0 - av.col(ja).dot(bv.col(jb)) / (na[ja] * nb[jb]);
    };

    ScMatch best{std::numeric_limits<double>::infinity(), 0};
    for (int s = 0; s < w; ++s) {
        // Shift s pairs column ja of a with column (ja + s) % w of b. Summing
        // the pair terms ordered by their unordered column-index key makes the
        // total independent of which argument came first; the lone key that
        // occurs twice (s == w/2) is folded with a single commutative add.
        double total = 0.0;
        for (int m = 0; m < w; ++m) {
            const bool low = m < w - s;  // pair (m, m + s)
            const bool high = m < s;     // pair (m + w - s, m)
            if (low && high) {
                const double t_low = term(m, m + s);
                const double t_high = term(m + w - s, m);
                if (2 * s < w) {
                    total += t_low;
                    total += t_high;
                } else if (2 * s > w) {
                    total += t_high;
                    total += t_low;
                } else {
                    total += t_low + t_high;
                }
            } else if (low) {
                total += term(m, m + s);
            } else if (high) {
                total += term(m + w - s, m);
            }
        }
        const double d = total / w;
        if (d < best.distance) best = {d, s};
    }
    return best;
}

Eigen::VectorXd ring_key(const PolarDescriptor& d) {
    if (d.values.size() == 0) throw Error("empty descriptor");
    return d.values.cast<double>().rowwise().mean();
}

DescriptorMatch coarse_to_fine_query(const std::vector<PolarDescriptor>& db,
                                     const PolarDescriptor& query,
                                     double candidate_frac) {
    if (db.empty()) throw Error("query against an empty descriptor database");
    if (!(candidate_frac > 0.0 && candidate_frac <= 1.0))
        throw Error("candidate_frac must be in (0, 1]");
    const int n = static_cast<int>(db.size());
    const int keep = std::max(1, static_cast<int>(std::ceil(candidate_frac * n)));

    const Eigen::VectorXd qkey = ring_key(query);
    std::vector<std::pair<double, int>> coarse;
    coarse.reserve(n);
    for (int i = 0; i < n; ++i) coarse.emplace_back((ring_key(db[i]) - qkey).norm(), i);
    std::sort(coarse.begin(), coarse.end());

    std::vector<int> candidates;
    candidates.reserve(keep);
    for (int i = 0; i < keep && i < n; ++i) candidates.push_back(coarse[i].second);
    std::sort(candidates.begin(), candidates.end());

    DescriptorMatch best{-1, std::numeric_limits<double>::infinity(), 0};
    for (int idx : candidates) {
        const ScMatch m = sc_distance(query, db[idx]);
        if (m.distance < best.distance) best = {idx, m.distance, m.shift};
    }
    return best;
}

}  // namespace placerec
