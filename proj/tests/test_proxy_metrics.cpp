#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "serendip/proxy_metrics.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace serendip;
using namespace serendip::proxy;
using BruteForce = testutil::BruteForceFeatures;

namespace {

// Four users; the target covers half of them, and both the history item and
// the batch item sit at Jaccard distance 0.5 from it. Every component equals
// exactly 0.5.
Dataset half_components_dataset() {
    testutil::DatasetBuilder b(Domain::movie);
    for (int u = 0; u < 4; ++u) b.user("u" + std::to_string(u));
    b.item("target").item("hist").item("batch");
    b.interact("u0", "target", 1).interact("u1", "target", 2);
    for (int u = 0; u < 4; ++u) b.interact("u" + std::to_string(u), "hist", 10 + u);
    for (int u = 0; u < 4; ++u) b.interact("u" + std::to_string(u), "batch", 20 + u);
    b.evaluation_case("u0", "target", 3, 1000);
    return b.build();
}

}  // namespace

TEST_CASE("SogWeights: normalization and validation") {
    const SogWeights w(2, 1, 1, 0);
    CHECK(w.relevance_w() == doctest::Approx(0.5));
    CHECK(w.diversity_w() == doctest::Approx(0.25));
    CHECK(w.dissimilarity_w() == doctest::Approx(0.25));
    CHECK(w.unpopularity_w() == 0.0);
    CHECK(w.relevance_w() + w.diversity_w() + w.dissimilarity_w() +
              w.unpopularity_w() ==
          doctest::Approx(1.0));
    CHECK_THROWS_AS(SogWeights(-1, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(SogWeights(0, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("sog_score") {
    const Dataset ds = half_components_dataset();
    const features::FeatureIndex index(ds);
    const EvaluationCase& c = ds.cases[0];

    SUBCASE("all components equal c: any normalized weights return c") {
        // u3 saw only "hist" and "batch", both at Jaccard distance 0.5 from
        // the target, whose popularity is 2/4. Every component is 0.5.
        testutil::DatasetBuilder b(Domain::movie);
        for (int u = 0; u < 4; ++u) b.user("u" + std::to_string(u));
        b.item("target").item("hist").item("batch");
        b.interact("u0", "target", 1).interact("u1", "target", 2);
        for (int u = 0; u < 4; ++u) b.interact("u" + std::to_string(u), "hist", 10 + u);
        for (int u = 0; u < 4; ++u) b.interact("u" + std::to_string(u), "batch", 20 + u);
        b.evaluation_case("u3", "target", 3, 1000);
        const Dataset eq = b.build();
        const features::FeatureIndex eq_index(eq);
        const std::vector<std::string> batch = {"batch"};
        for (const auto& w :
             {SogWeights(1, 1, 1, 1), SogWeights(4, 1, 2, 3), SogWeights(0, 1, 0, 1)})
            CHECK(sog_score(eq.cases[0], eq, eq_index, w, batch) ==
                  doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("pure relevance weighting reduces to the relevance feature") {
        const SogWeights w(1, 0, 0, 0);
        const auto hist_ids = BruteForce(ds).history_ids(c, 10);
        CHECK(sog_score(c, ds, index, w) ==
              doctest::Approx(features::relevance(index, "target", hist_ids))
                  .epsilon(1e-12));
    }
    SUBCASE("no batch redistributes the diversity weight proportionally") {
        const SogWeights w(1, 1, 1, 1);
        const BruteForce oracle(ds);
        const auto hist = oracle.history_ids(c, 10);
        const double expected = (0.25 * oracle.relevance("target", hist) +
                                 0.25 * oracle.min_jaccard("target", hist) +
                                 0.25 * (1.0 - oracle.popularity("target"))) /
                                0.75;
        CHECK(sog_score(c, ds, index, w) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("diversity-only weights without a batch are rejected") {
        CHECK_THROWS_AS(sog_score(c, ds, index, SogWeights(0, 1, 0, 0)),
                        std::invalid_argument);
    }
    SUBCASE("empty history is an error") {
        testutil::DatasetBuilder b(Domain::movie);
        b.user("u").item("x");
        b.interact("u", "x", 100);
        b.evaluation_case("u", "x", 3, /*cutoff=*/50);  // history all post-cutoff
        const Dataset empty = b.build();
        CHECK_THROWS_WITH_AS(
            sog_score(empty.cases[0], empty, features::FeatureIndex(empty),
                      SogWeights()),
            doctest::Contains("empty history"), std::invalid_argument);
    }
}

TEST_CASE("snpr_score") {
    const Dataset ds = half_components_dataset();
    const features::FeatureIndex index(ds);
    const EvaluationCase& c = ds.cases[0];
    const BruteForce oracle(ds);
    const auto hist = oracle.history_ids(c, 10);
    const double rel = oracle.relevance("target", hist);
    const double unexp = oracle.min_jaccard("target", hist);

    SUBCASE("lambda = 1 is pure relevance") {
        CHECK(snpr_score(c, ds, index, 1.0) == doctest::Approx(rel).epsilon(1e-12));
    }
    SUBCASE("default lambda weights relevance at 0.7") {
        // R = 1, U = 0 when the history item shares the target's audience.
        // The observer's own target interaction sits past the cutoff: it
        // keeps the audiences identical without entering the history.
        testutil::DatasetBuilder b(Domain::movie);
        b.user("u0").user("u1").user("observer");
        b.item("target").item("twin");
        b.interact("u0", "target", 1).interact("u1", "target", 2);
        b.interact("u0", "twin", 3).interact("u1", "twin", 4);
        b.interact("observer", "twin", 10);
        b.interact("observer", "target", 500);
        b.evaluation_case("observer", "target", 3, /*cutoff=*/100);
        const Dataset tw = b.build();
        CHECK(snpr_score(tw.cases[0], tw, features::FeatureIndex(tw)) ==
              doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("lambda = 0.5 equals the mean of the two components") {
        CHECK(snpr_score(c, ds, index, 0.5) ==
              doctest::Approx((rel + unexp) / 2.0).epsilon(1e-12));
    }
    SUBCASE("monotone in lambda, direction set by R vs U") {
        std::mt19937_64 rng(77);
        for (int round = 0; round < 200; ++round) {
            const double l1 = (rng() % 1000) / 1000.0;
            const double l2 = std::min(1.0, l1 + (rng() % 1000) / 2000.0);
            const double s1 = snpr_score(c, ds, index, l1);
            const double s2 = snpr_score(c, ds, index, l2);
            if (rel >= unexp)
                CHECK(s2 >= s1 - 1e-12);
            else
                CHECK(s2 <= s1 + 1e-12);
        }
    }
    SUBCASE("lambda outside [0,1] is rejected") {
        CHECK_THROWS_AS(snpr_score(c, ds, index, 1.5), std::invalid_argument);
    }
}

TEST_CASE("purs_score") {
    SUBCASE("target sitting on a centroid adds nothing") {
        testutil::DatasetBuilder b(Domain::movie);
        b.user("u0").user("u1").user("observer");
        b.item("target").item("twin");
        b.interact("u0", "target", 1).interact("u1", "target", 2);
        b.interact("u0", "twin", 3).interact("u1", "twin", 4);
        b.interact("observer", "twin", 10);
        b.interact("observer", "target", 500);  // past cutoff, audience only
        b.evaluation_case("observer", "target", 3, /*cutoff=*/100);
        const Dataset ds = b.build();
        const features::FeatureIndex index(ds);
        // Single history item "twin" with the target's audience: r = 1,
        // unexpectedness = 0.
        CHECK(purs_score(ds.cases[0], ds, index, 1) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("unexpectedness 0.5 with unit factor adds 0.5") {
        testutil::DatasetBuilder b(Domain::movie);
        b.user("u0").user("observer");
        b.item("target").item("hist");
        b.interact("observer", "hist", 10);
        b.interact("u0", "target", 20);
        b.interact("observer", "target", 500);  // past cutoff, audience only
        b.evaluation_case("observer", "target", 3, /*cutoff=*/100);
        const Dataset ds = b.build();
        const features::FeatureIndex index(ds);
        // target {u0, observer} vs centroid {observer}: distance 1 squashes
        // to 0.5; relevance = 1 - (1 - 1/2) = 0.5. Total 1.0.
        CHECK(purs_score(ds.cases[0], ds, index, 1) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("fixture value recomposes from the feature operations") {
        const Dataset ds = load_dataset(
            std::filesystem::path(BUNDLED_FIXTURE_DIR) / "manifest.json");
        const features::FeatureIndex index(ds);
        for (std::size_t i = 0; i < 5; ++i) {
            const EvaluationCase& c = ds.cases[i];
            const BruteForce oracle(ds);
            const auto hist = oracle.history_ids(c, 10);
            const auto clusters = features::interest_clusters(
                index, hist, std::min<int>(5, static_cast<int>(hist.size())), 17);
            const double expected =
                features::relevance(index, c.target_item_id, hist) +
                std::clamp(
                    features::unexpectedness(index, c.target_item_id, clusters),
                    0.0, 1.0);
            CHECK(purs_score(c, ds, index, 17) ==
                  doctest::Approx(expected).epsilon(1e-9));
        }
    }
}

TEST_CASE("desr_combine and desr_score") {
    SUBCASE("anchor values") {
        CHECK(desr_combine(1.0, 1.0) == doctest::Approx(0.5));
        CHECK(desr_combine(0.0, 0.7) == 0.0);
        CHECK(desr_combine(0.0, 0.0) == 0.0);
        // 0.18 / 0.9.
        CHECK(desr_combine(0.6, 0.3) == doctest::Approx(0.2).epsilon(1e-12));
    }
    SUBCASE("bounded by min(acc, dif); equals x/2 on the diagonal") {
        std::mt19937_64 rng(5);
        for (int round = 0; round < 1000; ++round) {
            const double acc = (rng() % 1001) / 1000.0;
            const double dif = (rng() % 1001) / 1000.0;
            CHECK(desr_combine(acc, dif) <= std::min(acc, dif) + 1e-12);
            CHECK(desr_combine(acc, acc) == doctest::Approx(acc / 2.0));
        }
    }
    SUBCASE("score recomposes from brute-force components") {
        const Dataset ds = load_dataset(
            std::filesystem::path(BUNDLED_FIXTURE_DIR) / "manifest.json");
        const features::FeatureIndex index(ds);
        const BruteForce oracle(ds);
        for (std::size_t i = 0; i < 5; ++i) {
            const EvaluationCase& c = ds.cases[i];
            const auto long_hist = oracle.history_ids(c, 1u << 20);
            const auto short_hist = oracle.history_ids(c, 10);
            const double long_j = oracle.min_jaccard(c.target_item_id, long_hist);
            const double short_j = oracle.min_jaccard(c.target_item_id, short_hist);
            const double acc = ((1 - long_j) + (1 - short_j)) / 2.0;
            const double dif =
                (long_j + (1 - oracle.popularity(c.target_item_id))) / 2.0;
            CHECK(desr_score(c, ds, index) ==
                  doctest::Approx(desr_combine(acc, dif)).epsilon(1e-9));
        }
    }
}

TEST_CASE("proxy metrics on the bundled fixture: brute-force recomposition") {
    const Dataset ds = load_dataset(
        std::filesystem::path(BUNDLED_FIXTURE_DIR) / "manifest.json");
    const features::FeatureIndex index(ds);
    const BruteForce oracle(ds);
    const SogWeights equal;

    for (std::size_t i = 0; i < 5; ++i) {
        const EvaluationCase& c = ds.cases[i];
        const auto hist = oracle.history_ids(c, 10);
        const double rel = oracle.relevance(c.target_item_id, hist);
        const double dis = oracle.min_jaccard(c.target_item_id, hist);
        const double unpop = 1.0 - oracle.popularity(c.target_item_id);

        CHECK(sog_score(c, ds, index, equal) ==
              doctest::Approx((rel + dis + unpop) / 3.0).epsilon(1e-9));
        CHECK(snpr_score(c, ds, index) ==
              doctest::Approx(0.7 * rel + 0.3 * dis).epsilon(1e-9));
    }
}

TEST_CASE("normalize_to_likert") {
    SUBCASE("endpoints map to 1 and 5") {
        const std::vector<double> raw = {0.3, 0.9, 0.5, 0.31};
        const auto scores = normalize_to_likert(raw);
        CHECK(scores[0] == 1);
        CHECK(scores[1] == 5);
    }
    SUBCASE("constant vector maps to all 3") {
        const std::vector<double> raw = {0.4, 0.4, 0.4};
        CHECK(normalize_to_likert(raw) == std::vector<int>{3, 3, 3});
    }
    SUBCASE("direct substitution on an even grid") {
        const std::vector<double> raw = {0, 0.25, 0.5, 0.75, 1};
        CHECK(normalize_to_likert(raw) == std::vector<int>{1, 2, 3, 4, 5});
    }
    SUBCASE("ties round up") {
        // (x - 0) / 1 * 4 + 1 = 1.5 at x = 0.125.
        const std::vector<double> raw = {0, 0.125, 1};
        CHECK(normalize_to_likert(raw) == std::vector<int>{1, 2, 5});
    }
    SUBCASE("monotone and affine-invariant on random vectors") {
        std::mt19937_64 rng(31);
        // Continuous draws: lattice-valued inputs can land exactly on a
        // rounding tie, where a 1-ulp affine perturbation legitimately flips
        // the rounded value.
        for (int round = 0; round < 300; ++round) {
            const std::size_t n = 2 + rng() % 40;
            std::vector<double> raw(n);
            for (auto& v : raw)
                v = (static_cast<double>(rng() >> 11) / 9007199254740992.0) *
                        20.0 -
                    10.0;
            const auto scores = normalize_to_likert(raw);

            for (std::size_t i = 0; i < n; ++i) {
                CHECK(scores[i] >= 1);
                CHECK(scores[i] <= 5);
                for (std::size_t j = 0; j < n; ++j)
                    if (raw[i] <= raw[j]) CHECK(scores[i] <= scores[j]);
            }

            const double a = 0.1 + (rng() % 1000) / 100.0;
            const double b = (static_cast<double>(rng() % 200) - 100.0) / 10.0;
            std::vector<double> transformed(n);
            for (std::size_t i = 0; i < n; ++i) transformed[i] = a * raw[i] + b;
            CHECK(normalize_to_likert(transformed) == scores);
        }
    }
    SUBCASE("bad inputs") {
        CHECK_THROWS_AS(normalize_to_likert({}), std::invalid_argument);
        const std::vector<double> nan_vec = {0.0, std::nan("")};
        CHECK_THROWS_AS(normalize_to_likert(nan_vec), std::invalid_argument);
    }
}

TEST_CASE("proxy metrics are deterministic across repeated runs") {
    const Dataset ds = load_dataset(
        std::filesystem::path(BUNDLED_FIXTURE_DIR) / "manifest.json");
    const features::FeatureIndex index(ds);
    const EvaluationCase& c = ds.cases[7];

    const double sog0 = sog_score(c, ds, index, SogWeights());
    const double snpr0 = snpr_score(c, ds, index);
    const double purs0 = purs_score(c, ds, index, 123);
    const double desr0 = desr_score(c, ds, index);
    for (int i = 0; i < 10; ++i) {
        CHECK(sog_score(c, ds, index, SogWeights()) == sog0);
        CHECK(snpr_score(c, ds, index) == snpr0);
        CHECK(purs_score(c, ds, index, 123) == purs0);
        CHECK(desr_score(c, ds, index) == desr0);
    }
}
