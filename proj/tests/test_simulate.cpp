#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "helpers.hpp"
#include "mlsif/simulate.hpp"

using namespace mlsif;
using testutil::series_from_pattern;

namespace {

std::map<std::size_t, std::size_t> missing_run_lengths(const std::vector<int>& mask) {
    std::map<std::size_t, std::size_t> hist;
    std::size_t run = 0;
    for (int m : mask) {
        if (m == 0) {
            ++run;
        } else if (run > 0) {
            ++hist[run];
            run = 0;
        }
    }
    if (run > 0) ++hist[run];
    return hist;
}

} // namespace

TEST_CASE("plan_large_gaps") {
    const auto base = TimeSeries::complete([] {
        std::vector<double> v(10000);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(static_cast<double>(i));
        return v;
    }());

    SECTION("zero target yields an empty plan") {
        const auto plan = plan_large_gaps(base, 0.0, 100, 1);
        CHECK(plan.intervals.empty());
        CHECK(plan.covered_points() == 0);
    }
    SECTION("achieved rate lands in the tolerance band") {
        for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
            const auto plan = plan_large_gaps(base, 0.30, 100, seed);
            CHECK(plan.achieved_rate >= 0.295);
            CHECK(plan.achieved_rate <= 0.305);
            const auto masked = apply_gap_plan(base, plan);
            CHECK(masked.masked.missing_rate() == Catch::Approx(plan.achieved_rate));
            // Clustered gaps: far fewer intervals than removed points.
            CHECK(plan.intervals.size() < plan.covered_points() / 10);
        }
    }
    SECTION("the paper-style rate grid is reachable") {
        for (double rate : {0.10, 0.20, 0.30, 0.40, 0.50}) {
            const auto plan = plan_large_gaps(base, rate, 100, 7);
            CHECK(std::abs(plan.achieved_rate - rate) <= 0.005);
        }
    }
    SECTION("deterministic given the seed") {
        const auto a = plan_large_gaps(base, 0.2, 50, 99);
        const auto b = plan_large_gaps(base, 0.2, 50, 99);
        REQUIRE(a.intervals.size() == b.intervals.size());
        for (std::size_t i = 0; i < a.intervals.size(); ++i) {
            CHECK(a.intervals[i].start == b.intervals[i].start);
            CHECK(a.intervals[i].length == b.intervals[i].length);
        }
    }
    SECTION("intervals are disjoint, sorted and in range") {
        const auto plan = plan_large_gaps(base, 0.4, 30, 13);
        std::size_t prev_end = 0;
        for (const auto& iv : plan.intervals) {
            CHECK(iv.length >= 1);
            CHECK(iv.start >= prev_end);
            prev_end = iv.start + iv.length;
        }
        CHECK(prev_end <= base.size());
    }
    SECTION("unreachable targets are rejected") {
        const auto tiny = series_from_pattern("ommmm", {1, 0, 0, 0, 0});
        CHECK_THROWS_AS(plan_large_gaps(tiny, 0.5, 2, 1), InvalidInput);
    }
}

TEST_CASE("transfer_pattern") {
    SECTION("an all-observed donor changes nothing") {
        const auto recipient = TimeSeries::complete({1, 2, 3, 4});
        const auto r = transfer_pattern({1, 1, 1, 1}, recipient);
        CHECK(r.removed_positions.empty());
        CHECK(r.masked.missing_count() == 0);
    }
    SECTION("donor gaps land exactly where stated") {
        const auto recipient = TimeSeries::complete({1, 2, 3, 4, 5, 6});
        const auto r = transfer_pattern({1, 1, 0, 1, 1, 0}, recipient);
        CHECK(r.removed_positions == std::vector<std::size_t>{2, 5});
        CHECK(r.removed_values == std::vector<double>{3, 6});
        CHECK(r.masked.status(2).is_missing());
        CHECK(r.masked.status(5).is_missing());
        CHECK(r.masked.missing_count() == 2);
    }
    SECTION("length mismatch is rejected") {
        const auto recipient = TimeSeries::complete({1, 2});
        CHECK_THROWS_AS(transfer_pattern({1, 1, 0}, recipient), InvalidInput);
    }
    SECTION("the donor mask is preserved bit-exactly, runs included") {
        std::mt19937_64 rng(31);
        const auto donor_base = TimeSeries::complete([&] {
            std::vector<double> v(4000);
            for (double& x : v) x = testutil::uniform(rng, -1, 1);
            return v;
        }());
        const auto plan = plan_large_gaps(donor_base, 0.25, 40, 17);
        const auto donor = apply_gap_plan(donor_base, plan).masked;
        const auto donor_mask = make_mask(donor);

        const auto recipient = TimeSeries::complete([&] {
            std::vector<double> v(4000);
            for (double& x : v) x = testutil::uniform(rng, -5, 5);
            return v;
        }());
        const auto r = transfer_pattern(donor_mask, recipient);
        CHECK(make_mask(r.masked) == donor_mask);
        CHECK(missing_run_lengths(make_mask(r.masked)) == missing_run_lengths(donor_mask));
    }
}

TEST_CASE("removing then restoring reproduces the original exactly") {
    std::mt19937_64 rng(37);
    const auto original = TimeSeries::complete([&] {
        std::vector<double> v(2000);
        for (double& x : v) x = testutil::uniform(rng, -3, 3);
        return v;
    }());

    SECTION("via a gap plan") {
        const auto plan = plan_large_gaps(original, 0.3, 25, 5);
        const auto masked = apply_gap_plan(original, plan);
        const auto restored =
            restore_removed(masked.masked, masked.removed_positions, masked.removed_values);
        REQUIRE(restored.size() == original.size());
        for (std::size_t i = 0; i < original.size(); ++i) {
            CHECK(restored.status(i).is_observed());
            CHECK(restored.value(i) == original.value(i));
        }
    }
    SECTION("via a donor transfer") {
        std::vector<int> donor_mask(original.size(), 1);
        for (std::size_t i = 100; i < 180; ++i) donor_mask[i] = 0;
        for (std::size_t i = 700; i < 705; ++i) donor_mask[i] = 0;
        const auto masked = transfer_pattern(donor_mask, original);
        const auto restored =
            restore_removed(masked.masked, masked.removed_positions, masked.removed_values);
        for (std::size_t i = 0; i < original.size(); ++i)
            CHECK(restored.value(i) == original.value(i));
    }
}
