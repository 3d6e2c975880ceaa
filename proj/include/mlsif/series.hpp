#ifndef MLSIF_SERIES_HPP
#define MLSIF_SERIES_HPP

#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mlsif/errors.hpp"

namespace mlsif {

// Per-point provenance. Imputed points carry the 1-based stage that wrote them.
class PointStatus {
public:
    static PointStatus observed() { return PointStatus(kObserved); }
    static PointStatus missing() { return PointStatus(kMissing); }
    static PointStatus imputed(std::uint32_t stage) {
        if (stage == 0) throw InvalidInput("imputation stage must be positive");
        return PointStatus(kImputedBase + stage);
    }

    bool is_observed() const { return code_ == kObserved; }
    bool is_missing() const { return code_ == kMissing; }
    bool is_imputed() const { return code_ >= kImputedBase + 1; }
    // Known = usable as input: observed or imputed at an earlier stage.
    bool is_known() const { return !is_missing(); }

    std::uint32_t stage() const {
        assert(is_imputed());
        return code_ - kImputedBase;
    }

    bool operator==(const PointStatus&) const = default;

private:
    static constexpr std::uint32_t kObserved = 0;
    static constexpr std::uint32_t kMissing = 1;
    static constexpr std::uint32_t kImputedBase = 1; // stage k -> code 1+k

    explicit PointStatus(std::uint32_t code) : code_(code) {}
    std::uint32_t code_;
};

// Univariate series with per-point status. Values at missing positions hold a
// NaN sentinel that no computation is allowed to read. Instances are treated
// as immutable; the framework builds a new series at each stage commit.
class TimeSeries {
public:
    TimeSeries(std::vector<double> values, std::vector<PointStatus> status,
               std::vector<std::int64_t> time_index = {})
        : values_(std::move(values)), status_(std::move(status)),
          time_index_(std::move(time_index)) {
        if (values_.empty()) throw InvalidInput("series must have length >= 1");
        if (values_.size() != status_.size())
            throw InvalidInput("values and status lengths differ");
        if (!time_index_.empty()) {
            if (time_index_.size() != values_.size())
                throw InvalidInput("time index length differs from values");
            for (std::size_t i = 1; i < time_index_.size(); ++i)
                if (time_index_[i] <= time_index_[i - 1])
                    throw InvalidInput("timestamps must be strictly increasing");
        }
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (status_[i].is_missing()) values_[i] = sentinel();
    }

    // All-observed convenience constructor.
    static TimeSeries complete(std::vector<double> values,
                               std::vector<std::int64_t> time_index = {}) {
        std::vector<PointStatus> st(values.size(), PointStatus::observed());
        return TimeSeries(std::move(values), std::move(st), std::move(time_index));
    }

    // Builds a series from values where NaN marks missing points.
    static TimeSeries from_values_with_nan(std::vector<double> values,
                                           std::vector<std::int64_t> time_index = {}) {
        std::vector<PointStatus> st;
        st.reserve(values.size());
        for (double v : values)
            st.push_back(std::isnan(v) ? PointStatus::missing() : PointStatus::observed());
        return TimeSeries(std::move(values), std::move(st), std::move(time_index));
    }

    static double sentinel() { return std::numeric_limits<double>::quiet_NaN(); }

    std::size_t size() const { return values_.size(); }

    const PointStatus& status(std::size_t i) const { return status_[i]; }
    const std::vector<PointStatus>& statuses() const { return status_; }

    // Value of a known point. Reading a missing point is a programming error.
    double value(std::size_t i) const {
        assert(status_[i].is_known() && "reading a missing point");
        return values_[i];
    }

    // Raw storage, sentinel included; for I/O and bulk transforms only.
    const std::vector<double>& raw_values() const { return values_; }

    bool has_time_index() const { return !time_index_.empty(); }
    const std::vector<std::int64_t>& time_index() const { return time_index_; }

    std::size_t missing_count() const {
        std::size_t n = 0;
        for (const auto& s : status_) n += s.is_missing();
        return n;
    }
    std::size_t observed_count() const {
        std::size_t n = 0;
        for (const auto& s : status_) n += s.is_observed();
        return n;
    }
    double missing_rate() const {
        return static_cast<double>(missing_count()) / static_cast<double>(size());
    }

    std::vector<double> observed_values() const {
        std::vector<double> out;
        out.reserve(size());
        for (std::size_t i = 0; i < size(); ++i)
            if (status_[i].is_observed()) out.push_back(values_[i]);
        return out;
    }
    std::vector<double> known_values() const {
        std::vector<double> out;
        out.reserve(size());
        for (std::size_t i = 0; i < size(); ++i)
            if (status_[i].is_known()) out.push_back(values_[i]);
        return out;
    }

    // New series with the given points filled in as Imputed(stage). Points must
    // currently be missing; imputed provenance never reverts.
    TimeSeries with_imputed(const std::vector<std::size_t>& positions,
                            const std::vector<double>& predictions,
                            std::uint32_t stage) const {
        if (positions.size() != predictions.size())
            throw InvalidInput("positions/predictions size mismatch");
        std::vector<double> v = values_;
        std::vector<PointStatus> st = status_;
        for (std::size_t k = 0; k < positions.size(); ++k) {
            std::size_t i = positions[k];
            if (i >= v.size()) throw InvalidInput("imputed position out of range");
            if (!st[i].is_missing())
                throw InvalidInput("imputing a point that is not missing");
            if (!std::isfinite(predictions[k]))
                throw InvalidInput("non-finite imputed value");
            v[i] = predictions[k];
            st[i] = PointStatus::imputed(stage);
        }
        return TimeSeries(std::move(v), std::move(st), time_index_);
    }

private:
    std::vector<double> values_;
    std::vector<PointStatus> status_;
    std::vector<std::int64_t> time_index_;
};

// Length-L window over a series. The final window of a split is right-aligned,
// so start is the only varying part.
class SegmentView {
public:
    SegmentView(const TimeSeries& parent, std::size_t start, std::size_t length)
        : parent_(&parent), start_(start), length_(length) {
        if (length == 0 || start + length > parent.size())
            throw InvalidInput("segment out of range");
    }

    const TimeSeries& parent() const { return *parent_; }
    std::size_t start() const { return start_; }
    std::size_t length() const { return length_; }
    std::size_t end() const { return start_ + length_; }

    const PointStatus& status(std::size_t offset) const {
        assert(offset < length_);
        return parent_->status(start_ + offset);
    }
    double value(std::size_t offset) const { return parent_->value(start_ + offset); }

    std::size_t missing_count() const {
        std::size_t n = 0;
        for (std::size_t i = start_; i < start_ + length_; ++i)
            n += parent_->status(i).is_missing();
        return n;
    }
    std::size_t known_count() const { return length_ - missing_count(); }

    double local_missing_rate() const {
        return static_cast<double>(missing_count()) / static_cast<double>(length_);
    }

    bool has_missing() const {
        for (std::size_t i = start_; i < start_ + length_; ++i)
            if (parent_->status(i).is_missing()) return true;
        return false;
    }

    std::vector<double> known_values() const {
        std::vector<double> out;
        out.reserve(length_);
        for (std::size_t i = 0; i < length_; ++i)
            if (status(i).is_known()) out.push_back(value(i));
        return out;
    }

    // Offsets within the window, in increasing order.
    std::vector<std::size_t> missing_offsets() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < length_; ++i)
            if (status(i).is_missing()) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> known_offsets() const {
        std::vector<std::size_t> out;
        out.reserve(length_);
        for (std::size_t i = 0; i < length_; ++i)
            if (status(i).is_known()) out.push_back(i);
        return out;
    }

private:
    const TimeSeries* parent_;
    std::size_t start_;
    std::size_t length_;
};

// Mask per the framework's convention: 0 at missing, 1 at observed or imputed
// (earlier-stage imputations count as available information).
inline std::vector<int> make_mask(const TimeSeries& series) {
    std::vector<int> m(series.size());
    for (std::size_t i = 0; i < series.size(); ++i)
        m[i] = series.status(i).is_missing() ? 0 : 1;
    return m;
}

// Number of length-L windows covering a length-t series: t/L when L divides t,
// floor(t/L)+1 otherwise (the last window is right-aligned and overlaps).
inline std::size_t segment_count(std::size_t t, std::size_t L) {
    return t % L == 0 ? t / L : t / L + 1;
}

// Splits into consecutive disjoint windows from index 0; when L does not
// divide t the final window covers [t-L, t) and overlaps its predecessor.
inline std::vector<SegmentView> split(const TimeSeries& series, std::size_t L) {
    const std::size_t t = series.size();
    if (L < 1 || L > t) throw InvalidInput("split length must be in [1, series length]");
    const std::size_t n = segment_count(t, L);
    std::vector<SegmentView> out;
    out.reserve(n);
    for (std::size_t i = 0; i + 1 < n; ++i) out.emplace_back(series, i * L, L);
    out.emplace_back(series, t - L, L);
    return out;
}

// z-score parameters fit on observed points only.
struct NormalizationParams {
    double center = 0.0;
    double scale = 1.0;
};

inline NormalizationParams fit_normalization(const TimeSeries& series) {
    std::vector<double> obs = series.observed_values();
    if (obs.size() < 2)
        throw DegenerateData("normalization needs at least 2 observed points");
    double mean = 0.0;
    for (double v : obs) mean += v;
    mean /= static_cast<double>(obs.size());
    double var = 0.0;
    for (double v : obs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(obs.size());
    if (var <= 0.0)
        throw DegenerateData("normalization needs nonzero variance in observed points");
    return {mean, std::sqrt(var)};
}

inline TimeSeries apply_normalization(const TimeSeries& series,
                                      const NormalizationParams& params) {
    if (!(params.scale > 0.0)) throw InvalidInput("normalization scale must be > 0");
    std::vector<double> v = series.raw_values();
    for (std::size_t i = 0; i < v.size(); ++i)
        if (series.status(i).is_known()) v[i] = (v[i] - params.center) / params.scale;
    return TimeSeries(std::move(v), series.statuses(),
                      series.has_time_index() ? series.time_index()
                                              : std::vector<std::int64_t>{});
}

inline TimeSeries invert_normalization(const TimeSeries& series,
                                       const NormalizationParams& params) {
    if (!(params.scale > 0.0)) throw InvalidInput("normalization scale must be > 0");
    std::vector<double> v = series.raw_values();
    for (std::size_t i = 0; i < v.size(); ++i)
        if (series.status(i).is_known()) v[i] = v[i] * params.scale + params.center;
    return TimeSeries(std::move(v), series.statuses(),
                      series.has_time_index() ? series.time_index()
                                              : std::vector<std::int64_t>{});
}

} // namespace mlsif

#endif
