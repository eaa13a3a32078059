#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "placerec/retrieval.hpp"
#include "placerec/rng.hpp"
#include "support.hpp"

using namespace placerec;

namespace {

SignatureDatabase random_db(Rng& rng, int n) {
    SignatureDatabase db;
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd sig(32, 32);
        for (int r = 0; r < 32; ++r)
            for (int c = 0; c < 32; ++c) sig(r, c) = rng.normal();
        sig /= sig.norm();
        db.entries.push_back({i, sig,
                              {0.1 * i, rng.uniform(-100.0, 100.0),
                               rng.uniform(-100.0, 100.0), 0.0},
                              "db"});
    }
    return db;
}

}  // namespace

TEST_SUITE("retrieval") {

TEST_CASE("query_top_k matches a full sort") {
    Rng rng(1);
    const SignatureDatabase db = random_db(rng, 40);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd q(32, 32);
        for (int r = 0; r < 32; ++r)
            for (int c = 0; c < 32; ++c) q(r, c) = rng.normal();
        q /= q.norm();

        std::vector<std::pair<double, int>> all;
        for (const SignatureEntry& e : db.entries)
            all.emplace_back((e.signature - q).norm(), e.id);
        std::sort(all.begin(), all.end());

        const int k = 1 + static_cast<int>(rng.uniform_index(40));
        const std::vector<RankedMatch> got = query_top_k(db, q, k);
        REQUIRE(static_cast<int>(got.size()) == k);
        for (int i = 0; i < k; ++i) {
            CHECK(got[i].id == all[i].second);
            CHECK(got[i].distance == doctest::Approx(all[i].first).epsilon(1e-13));
        }
    }
}

TEST_CASE("query_top_k breaks distance ties toward the lower id") {
    SignatureDatabase db;
    Eigen::MatrixXd sig = Eigen::MatrixXd::Constant(32, 32, 0.03125);
    db.entries.push_back({7, sig, {}, "db"});
    db.entries.push_back({3, sig, {}, "db"});
    db.entries.push_back({5, sig, {}, "db"});
    const std::vector<RankedMatch> got = query_top_k(db, sig, 3);
    CHECK(got[0].id == 3);
    CHECK(got[1].id == 5);
    CHECK(got[2].id == 7);
    CHECK(got[0].distance == 0.0);
}

TEST_CASE("query_top_k rejects bad k and empty databases") {
    Rng rng(2);
    const SignatureDatabase db = random_db(rng, 5);
    const Eigen::MatrixXd q = db.entries[0].signature;
    CHECK_THROWS_AS(query_top_k(db, q, 0), Error);
    CHECK_THROWS_AS(query_top_k(db, q, 6), Error);
    CHECK_THROWS_AS(query_top_k(SignatureDatabase{}, q, 1), Error);
}

TEST_CASE("similarity matrix is negated distance with labeled axes") {
    Rng rng(3);
    const SignatureDatabase queries = random_db(rng, 6);
    const SignatureDatabase db = random_db(rng, 9);
    const SimilarityMatrix sim = similarity_matrix(queries, db);
    REQUIRE(sim.values.rows() == 6);
    REQUIRE(sim.values.cols() == 9);
    CHECK(sim.query_ids.size() == 6);
    CHECK(sim.db_ids.size() == 9);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 9; ++j) {
            const double d =
                (queries.entries[i].signature - db.entries[j].signature).norm();
            CHECK(sim.values(i, j) == doctest::Approx(-d).epsilon(1e-13));
            CHECK(sim.values(i, j) <= 0.0);
            CHECK(sim.values(i, j) >= -2.0 - 1e-9);
        }
}

TEST_CASE("sc_distance matches the exhaustive shift oracle") {
    Rng rng(4);
    for (int trial = 0; trial < 6; ++trial) {
        const PolarDescriptor a =
            testsupport::random_descriptor(rng, Modality::lidar, 10, 24);
        const PolarDescriptor b =
            testsupport::random_descriptor(rng, Modality::radar, 10, 24);
        const auto [want_d, want_s] = testsupport::naive_sc_distance(a, b);
        const ScMatch got = sc_distance(a, b);
        CHECK(got.distance == doctest::Approx(want_d).epsilon(1e-12));
        CHECK(got.shift == want_s);
    }
}

TEST_CASE("sc_distance recovers a pure column rotation") {
    Rng rng(5);
    PolarDescriptor a = testsupport::random_descriptor(rng, Modality::lidar);
    for (int k : {0, 1, 31, 119}) {
        PolarDescriptor b = a;
        b.values = rotate_columns(a.values, 120 - k);  // b holds a rotated by k
        const ScMatch m = sc_distance(a, b);
        CHECK(m.distance < 1e-12);
        CHECK(m.shift == k);
        // rotate_columns(b, shift) aligns b with a
        CHECK(rotate_columns(b.values, m.shift) == a.values);
    }
}

TEST_CASE("sc_distance is bitwise symmetric") {
    Rng rng(6);
    for (int trial = 0; trial < 8; ++trial) {
        PolarDescriptor a = testsupport::random_descriptor(rng, Modality::radar, 8, 30);
        PolarDescriptor b = testsupport::random_descriptor(rng, Modality::radar, 8, 30);
        if (trial % 2 == 0) {
            a.values.col(3).setZero();  // exercise the zero-column rules
            b.values.col(7).setZero();
        }
        const ScMatch ab = sc_distance(a, b);
        const ScMatch ba = sc_distance(b, a);
        CHECK(ab.distance == ba.distance);  // exactly, not approximately
    }
}

TEST_CASE("sc_distance zero-column conventions") {
    PolarDescriptor a, b;
    a.modality = b.modality = Modality::lidar;
    a.values = Eigen::MatrixXf::Zero(4, 6);
    b.values = Eigen::MatrixXf::Zero(4, 6);
    CHECK(sc_distance(a, b).distance == 0.0);  // all columns pair zero-zero

    b.values(1, 2) = 1.0f;  // one nonzero column against an all-zero descriptor
    const ScMatch m = sc_distance(a, b);
    CHECK(m.distance == doctest::Approx(1.0 / 6.0));

    // identical descriptors at shift 0
    a.values(1, 2) = 1.0f;
    b = a;
    const ScMatch self = sc_distance(a, b);
    CHECK(self.distance == 0.0);
    CHECK(self.shift == 0);
}

TEST_CASE("ring_key is the per-ring mean") {
    Rng rng(7);
    const PolarDescriptor d = testsupport::random_descriptor(rng, Modality::radar);
    const Eigen::VectorXd key = ring_key(d);
    REQUIRE(key.size() == 40);
    for (int i = 0; i < 40; ++i)
        CHECK(key(i) ==
              doctest::Approx(d.values.row(i).cast<double>().mean()).epsilon(1e-12));
}

TEST_CASE("coarse_to_fine matches a two-stage oracle") {
    Rng rng(8);
    std::vector<PolarDescriptor> db;
    for (int i = 0; i < 50; ++i)
        db.push_back(testsupport::random_descriptor(rng, Modality::lidar, 10, 24));
    for (int trial = 0; trial < 5; ++trial) {
        const PolarDescriptor q =
            testsupport::random_descriptor(rng, Modality::lidar, 10, 24);
        const double frac = 0.1;

        // oracle: rank ring keys, keep ceil(frac*n), best sc among them
        std::vector<std::pair<double, int>> coarse;
        for (int i = 0; i < 50; ++i)
            coarse.emplace_back((ring_key(db[i]) - ring_key(q)).norm(), i);
        std::sort(coarse.begin(), coarse.end());
        const int keep = static_cast<int>(std::ceil(frac * 50));
        int best_idx = -1;
        double best_d = std::numeric_limits<double>::infinity();
        std::vector<int> kept;
        for (int i = 0; i < keep; ++i) kept.push_back(coarse[i].second);
        std::sort(kept.begin(), kept.end());
        for (int idx : kept) {
            const double d = testsupport::naive_sc_distance(db[idx], q).first;
            if (d < best_d) {
                best_d = d;
                best_idx = idx;
            }
        }

        const DescriptorMatch got = coarse_to_fine_query(db, q, frac);
        CHECK(got.index == best_idx);
        CHECK(got.distance == doctest::Approx(best_d).epsilon(1e-12));
    }
}

TEST_CASE("coarse_to_fine finds an exact copy even at tiny fractions") {
    Rng rng(9);
    std::vector<PolarDescriptor> db;
    for (int i = 0; i < 200; ++i)
        db.push_back(testsupport::random_descriptor(rng, Modality::lidar, 10, 24));
    const DescriptorMatch got = coarse_to_fine_query(db, db[137], 0.01);
    CHECK(got.index == 137);
    // identical columns leave sqrt-rounding residue in the cosine terms
    CHECK(std::abs(got.distance) <= 1e-12);
    CHECK(got.shift == 0);
}

}  // TEST_SUITE
