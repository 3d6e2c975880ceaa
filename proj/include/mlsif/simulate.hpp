#ifndef MLSIF_SIMULATE_HPP
#define MLSIF_SIMULATE_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mlsif/errors.hpp"
#include "mlsif/imputers.hpp" // detail::canonical_unit / bounded_index
#include "mlsif/series.hpp"

namespace mlsif {

// A replayable removal plan: disjoint, sorted intervals over [0, t).
struct GapPlan {
    struct Interval {
        std::size_t start = 0;
        std::size_t length = 0;
    };
    std::vector<Interval> intervals;
    double target_rate = 0.0;
    double achieved_rate = 0.0;
    std::uint64_t seed = 0;

    std::size_t covered_points() const {
        std::size_t n = 0;
        for (const auto& iv : intervals) n += iv.length;
        return n;
    }
};

// The global missing tolerance for generated plans, in rate units.
inline constexpr double kGapRateTolerance = 0.005;

namespace detail {

// Gap length with a geometric-like law: support {1, 2, ...}, given mean.
inline std::size_t draw_gap_length(std::mt19937_64& rng, double mean_len) {
    if (mean_len <= 1.0) return 1;
    const double p = 1.0 / mean_len;
    const double u = canonical_unit(rng);
    const double len = 1.0 + std::floor(std::log1p(-u) / std::log1p(-p));
    return len < 1.0 ? 1 : static_cast<std::size_t>(len);
}

} // namespace detail

// Removes clustered intervals around random centers until the global missing
// rate lands inside target +/- 0.5 percentage points. Only currently-observed
// points count toward the achieved rate; the final interval is trimmed from
// its right end if it overshoots.
inline GapPlan plan_large_gaps(const TimeSeries& series, double target_rate,
                               double mean_gap_len, std::uint64_t seed) {
    if (target_rate < 0.0 || target_rate >= 1.0)
        throw InvalidInput("target rate must be in [0, 1)");
    if (mean_gap_len < 1.0) throw InvalidInput("mean gap length must be >= 1");

    GapPlan plan;
    plan.target_rate = target_rate;
    plan.seed = seed;

    const std::size_t t = series.size();
    const double base_missing = static_cast<double>(series.missing_count());
    plan.achieved_rate = base_missing / static_cast<double>(t);
    if (target_rate == 0.0) return plan;
    if (1.0 - series.missing_rate() <= target_rate)
        throw InvalidInput("target rate unreachable: too few observed points");

    std::mt19937_64 rng(seed);
    std::vector<bool> removed(t, false);
    std::size_t removed_observed = 0;
    auto rate = [&] {
        return (base_missing + static_cast<double>(removed_observed)) /
               static_cast<double>(t);
    };

    std::vector<std::size_t> last_added;
    const std::size_t max_draws = 200000;
    std::size_t draws = 0;
    while (rate() < target_rate - kGapRateTolerance) {
        if (++draws > max_draws)
            throw InvalidInput("target rate unreachable within draw budget");
        const std::size_t center = detail::bounded_index(rng, t);
        const std::size_t len = detail::draw_gap_length(rng, mean_gap_len);
        const std::size_t begin = center >= len / 2 ? center - len / 2 : 0;
        const std::size_t end = std::min(begin + len, t);
        last_added.clear();
        for (std::size_t i = begin; i < end; ++i) {
            if (!removed[i] && series.status(i).is_observed()) {
                removed[i] = true;
                ++removed_observed;
                last_added.push_back(i);
            }
        }
    }
    // Trim the overshoot, newest points first.
    while (rate() > target_rate + kGapRateTolerance && !last_added.empty()) {
        removed[last_added.back()] = false;
        last_added.pop_back();
        --removed_observed;
    }
    if (rate() > target_rate + kGapRateTolerance)
        throw InvalidInput("target rate unreachable: overshoot could not be trimmed");

    plan.achieved_rate = rate();
    for (std::size_t i = 0; i < t;) {
        if (!removed[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < t && removed[j]) ++j;
        plan.intervals.push_back({i, j - i});
        i = j;
    }
    return plan;
}

// Outcome of removing points: the masked series plus the removed ground truth.
struct MaskedSeries {
    TimeSeries masked;
    std::vector<std::size_t> removed_positions; // positions with recorded truth
    std::vector<double> removed_values;
};

inline MaskedSeries apply_gap_plan(const TimeSeries& series, const GapPlan& plan) {
    std::vector<double> values = series.raw_values();
    std::vector<PointStatus> status = series.statuses();
    MaskedSeries out{series, {}, {}};
    for (const auto& iv : plan.intervals) {
        if (iv.start + iv.length > series.size())
            throw InvalidInput("gap plan interval out of range");
        for (std::size_t i = iv.start; i < iv.start + iv.length; ++i) {
            if (status[i].is_observed()) {
                out.removed_positions.push_back(i);
                out.removed_values.push_back(values[i]);
            }
            status[i] = PointStatus::missing();
        }
    }
    out.masked = TimeSeries(std::move(values), std::move(status),
                            series.has_time_index() ? series.time_index()
                                                    : std::vector<std::int64_t>{});
    return out;
}

// Stamps a donor's missing pattern onto a recipient of the same length; the
// values removed from the recipient are kept as evaluation ground truth.
inline MaskedSeries transfer_pattern(const std::vector<int>& donor_mask,
                                     const TimeSeries& recipient) {
    if (donor_mask.size() != recipient.size())
        throw InvalidInput("transfer_pattern: donor and recipient lengths differ");
    std::vector<double> values = recipient.raw_values();
    std::vector<PointStatus> status = recipient.statuses();
    MaskedSeries out{recipient, {}, {}};
    for (std::size_t i = 0; i < donor_mask.size(); ++i) {
        if (donor_mask[i] != 0) continue;
        if (status[i].is_observed()) {
            out.removed_positions.push_back(i);
            out.removed_values.push_back(values[i]);
        }
        status[i] = PointStatus::missing();
    }
    out.masked = TimeSeries(std::move(values), std::move(status),
                            recipient.has_time_index() ? recipient.time_index()
                                                       : std::vector<std::int64_t>{});
    return out;
}

// Puts recorded truth back; inverse of the removal for exact round trips.
inline TimeSeries restore_removed(const TimeSeries& masked,
                                  const std::vector<std::size_t>& positions,
                                  const std::vector<double>& values) {
    if (positions.size() != values.size())
        throw InvalidInput("restore: positions/values size mismatch");
    std::vector<double> v = masked.raw_values();
    std::vector<PointStatus> st = masked.statuses();
    for (std::size_t k = 0; k < positions.size(); ++k) {
        if (positions[k] >= v.size()) throw InvalidInput("restore: position out of range");
        v[positions[k]] = values[k];
        st[positions[k]] = PointStatus::observed();
    }
    return TimeSeries(std::move(v), std::move(st),
                      masked.has_time_index() ? masked.time_index()
                                              : std::vector<std::int64_t>{});
}

} // namespace mlsif

#endif
