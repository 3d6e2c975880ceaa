#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "helpers.hpp"
#include "mlsif/metrics.hpp"

using namespace mlsif;
using testutil::series_from_pattern;

TEST_CASE("mse/mae/rmse/rmae") {
    SECTION("perfect prediction") {
        const PairedEval e{{1, 2, 3}, {1, 2, 3}};
        CHECK(mse(e) == 0.0);
        CHECK(mae(e) == 0.0);
        CHECK(rmse(e) == 0.0);
        CHECK(rmae(e) == 0.0);
    }
    SECTION("hand case") {
        const PairedEval e{{1, 3}, {0, 0}};
        CHECK(mse(e) == Catch::Approx(5.0));
        CHECK(mae(e) == Catch::Approx(2.0));
        CHECK(rmse(e) == Catch::Approx(std::sqrt(5.0)));
        CHECK(rmae(e) == Catch::Approx(std::sqrt(2.0)));
    }
    SECTION("single pair") {
        const PairedEval e{{5}, {2}};
        CHECK(mse(e) == Catch::Approx(9.0));
        CHECK(mae(e) == Catch::Approx(3.0));
    }
    SECTION("empty input is rejected") {
        CHECK_THROWS_AS(mse(PairedEval{{}, {}}), InvalidInput);
        CHECK_THROWS_AS(mse(PairedEval{{1}, {1, 2}}), InvalidInput);
    }
}

TEST_CASE("root identities hold to 1e-12") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 100;
        PairedEval e{testutil::random_multiset(rng, n), testutil::random_multiset(rng, n)};
        CHECK(rmse(e) * rmse(e) == Catch::Approx(mse(e)).epsilon(1e-12));
        CHECK(rmae(e) * rmae(e) == Catch::Approx(mae(e)).epsilon(1e-12));
    }
}

TEST_CASE("d2 index of agreement") {
    SECTION("perfect prediction on non-constant truth") {
        const PairedEval e{{0, 2, 5}, {0, 2, 5}};
        CHECK(d2(e) == Catch::Approx(1.0));
    }
    SECTION("hand case O={0,2}, P={1,1}") {
        const PairedEval e{{0, 2}, {1, 1}};
        CHECK(d2(e) == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("degenerate denominator") {
        const PairedEval e{{3, 3}, {3, 3}};
        CHECK_THROWS_AS(d2(e), UndefinedMetric);
    }
    SECTION("never exceeds 1") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 2 + rng() % 50;
            PairedEval e{testutil::random_multiset(rng, n), testutil::random_multiset(rng, n)};
            CHECK(d2(e) <= 1.0);
        }
    }
}

TEST_CASE("r2 squared correlation") {
    SECTION("perfect correlation") {
        const PairedEval e{{0, 1, 2, 5}, {0, 1, 2, 5}};
        CHECK(r2(e) == Catch::Approx(1.0));
    }
    SECTION("anti-correlation also gives 1") {
        const PairedEval e{{0, 1, 2, 5}, {7, 6, 5, 2}};
        CHECK(r2(e) == Catch::Approx(1.0));
    }
    SECTION("independent sequences are near 0") {
        std::mt19937_64 rng(21);
        const std::size_t n = 100000;
        PairedEval e;
        e.truth.resize(n);
        e.predicted.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            e.truth[i] = testutil::gauss(rng);
            e.predicted[i] = testutil::gauss(rng);
        }
        CHECK(r2(e) == Catch::Approx(0.0).margin(0.01));
    }
    SECTION("stays within [0,1]") {
        std::mt19937_64 rng(22);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 2 + rng() % 50;
            PairedEval e{testutil::random_multiset(rng, n), testutil::random_multiset(rng, n)};
            try {
                const double v = r2(e);
                CHECK(v >= -1e-12);
                CHECK(v <= 1.0 + 1e-12);
            } catch (const UndefinedMetric&) {
            }
        }
    }
    SECTION("constant sequence is undefined") {
        CHECK_THROWS_AS(r2(PairedEval{{1, 1}, {1, 2}}), UndefinedMetric);
        CHECK_THROWS_AS(r2(PairedEval{{5}, {2}}), UndefinedMetric);
    }
}

TEST_CASE("paired metrics are invariant to joint permutation") {
    std::mt19937_64 rng(29);
    const std::size_t n = 40;
    PairedEval e{testutil::random_multiset(rng, n), testutil::random_multiset(rng, n)};
    PairedEval shuffled = e;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[rng() % n]);
    for (std::size_t i = 0; i < n; ++i) {
        shuffled.truth[i] = e.truth[idx[i]];
        shuffled.predicted[i] = e.predicted[idx[i]];
    }
    CHECK(mse(shuffled) == Catch::Approx(mse(e)).epsilon(1e-12));
    CHECK(mae(shuffled) == Catch::Approx(mae(e)).epsilon(1e-12));
    CHECK(d2(shuffled) == Catch::Approx(d2(e)).epsilon(1e-12));
    CHECK(r2(shuffled) == Catch::Approx(r2(e)).epsilon(1e-12));
}

TEST_CASE("global siv of an imputation") {
    SECTION("untouched series gives zero") {
        const auto s = series_from_pattern("oooo", {1, 2, 3, 4});
        CHECK(global_siv(s, s) == 0.0);
    }
    SECTION("mean-imputed gaps move the indexes") {
        const auto before = series_from_pattern("oommoo", {1, 5, 0, 0, 2, 8});
        const std::vector<double> obs{1, 5, 2, 8};
        const double mean = 4.0;
        const auto after = before.with_imputed({2, 3}, {mean, mean}, 1);
        const std::vector<double> completed{1, 5, mean, mean, 2, 8};
        CHECK(global_siv(before, after) ==
              Catch::Approx(static_cast<double>(testutil::oracle_siv(obs, completed))));
        CHECK(global_siv(before, after) > 0.0);
    }
    SECTION("no observed points is an error") {
        const auto s = series_from_pattern("mm11", {0, 0, 1, 2});
        CHECK_THROWS_AS(global_siv(s, s), InvalidInput);
    }
}

TEST_CASE("local siv") {
    SECTION("nothing imputed gives zero") {
        const auto s = series_from_pattern("oooooooo", {1, 2, 3, 4, 5, 6, 7, 8});
        CHECK(local_siv(s, s, 4) == 0.0);
    }
    SECTION("only touched segments contribute") {
        // First window untouched, second window half mean-imputed.
        const auto before = series_from_pattern("oooo" "oomm", {1, 2, 3, 4, 2, 6, 0, 0});
        const auto after = before.with_imputed({6, 7}, {4.0, 4.0}, 1);
        const double expected = static_cast<double>(
            testutil::oracle_siv({2, 6}, {2, 6, 4, 4}));
        CHECK(local_siv(before, after, 4) == Catch::Approx(expected));
    }
    SECTION("window of t equals global") {
        std::mt19937_64 rng(41);
        for (int trial = 0; trial < 30; ++trial) {
            const std::size_t t = 10 + rng() % 50;
            std::string pattern;
            std::vector<double> values;
            for (std::size_t i = 0; i < t; ++i) {
                pattern.push_back(rng() % 4 == 0 ? 'm' : 'o');
                values.push_back(testutil::uniform(rng, -3, 3));
            }
            auto before = series_from_pattern(pattern, values);
            if (before.observed_count() < 2) continue;
            std::vector<std::size_t> gaps;
            std::vector<double> preds;
            for (std::size_t i = 0; i < t; ++i)
                if (before.status(i).is_missing()) {
                    gaps.push_back(i);
                    preds.push_back(testutil::uniform(rng, -3, 3));
                }
            if (gaps.empty()) continue;
            const auto after = before.with_imputed(gaps, preds, 1);
            CHECK(local_siv(before, after, t) == global_siv(before, after));
            CHECK(local_siv(before, after, 7) >= 0.0);
        }
    }
    SECTION("fully-missing windows are skipped") {
        const auto before = series_from_pattern("mmmm" "oomo", {0, 0, 0, 0, 1, 5, 0, 9});
        const auto after = before.with_imputed({0, 1, 2, 3, 6}, {1, 2, 3, 4, 5}, 1);
        const double expected = static_cast<double>(
            testutil::oracle_siv({1, 5, 9}, {1, 5, 5, 9}));
        CHECK(local_siv(before, after, 4) == Catch::Approx(expected));
    }
}

TEST_CASE("paired_metrics fills what it can") {
    const MetricReport r = paired_metrics(PairedEval{{0, 2}, {1, 1}});
    REQUIRE(r.mse);
    REQUIRE(r.d2);
    CHECK(*r.d2 == Catch::Approx(0.0).margin(1e-15));
    CHECK_FALSE(r.r2); // constant prediction: undefined
    CHECK_FALSE(r.global_siv);
}
