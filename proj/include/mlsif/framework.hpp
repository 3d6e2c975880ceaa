#ifndef MLSIF_FRAMEWORK_HPP
#define MLSIF_FRAMEWORK_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mlsif/errors.hpp"
#include "mlsif/imputers.hpp"
#include "mlsif/metrics.hpp"
#include "mlsif/series.hpp"

namespace mlsif {

struct FrameworkConfig {
    std::size_t base_length = 24;  // l: per-iteration growth of the split length
    double rate_threshold = 10.0;  // r: select segments with missing rate < r%
    ImputerSpec imputer;           // carries the TrainConfig for trainable kinds
    std::size_t max_stages = 500;
    std::optional<std::size_t> eval_window; // for the per-stage local SIV; default l

    const TrainConfig& train() const { return imputer.train; }

    void validate() const {
        if (base_length < 2) throw InvalidInput("base length l must be >= 2");
        if (!(rate_threshold > 0.0) || rate_threshold > 100.0)
            throw InvalidInput("rate threshold r must be in (0, 100]");
        if (max_stages < 1) throw InvalidInput("max stages must be >= 1");
        imputer.validate();
    }
};

struct StageReport {
    std::size_t stage = 0;
    std::size_t segment_length = 0; // L chosen by selection
    std::size_t samples_total = 0;
    std::size_t samples_selected = 0;
    std::size_t points_imputed = 0;
    bool whole_series_fallback = false; // forced L = t selection
    std::optional<double> first_epoch_loss;
    std::optional<double> last_epoch_loss;
    std::optional<double> global_siv; // vs the pre-stage series
    std::optional<double> local_siv;

    static constexpr const char* kCsvHeader =
        "stage,segment_length,samples_total,samples_selected,points_imputed,"
        "fallback,first_epoch_loss,last_epoch_loss,global_siv,local_siv";

    std::string log_line() const {
        std::ostringstream os;
        os << "stage " << stage << ": L=" << segment_length << " selected "
           << samples_selected << "/" << samples_total << " segments, imputed "
           << points_imputed << " points";
        if (whole_series_fallback) os << " [whole-series fallback]";
        if (first_epoch_loss && last_epoch_loss)
            os << ", loss " << *first_epoch_loss << " -> " << *last_epoch_loss;
        return os.str();
    }
};

// Partial output carried out of a run that hit the stage cap.
class IncompleteResult : public Error {
public:
    IncompleteResult(std::string what, TimeSeries partial, std::vector<StageReport> reports)
        : Error(std::move(what)), partial_(std::move(partial)), reports_(std::move(reports)) {}
    const TimeSeries& partial() const { return partial_; }
    const std::vector<StageReport>& reports() const { return reports_; }

private:
    TimeSeries partial_;
    std::vector<StageReport> reports_;
};

struct SelectionResult {
    std::size_t segment_length = 0; // the first qualifying L
    std::vector<SegmentView> selected;
    std::size_t samples_total = 0;
    bool whole_series_fallback = false;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed ^ (salt * 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

// Grows the split length by l until the below-threshold segments include at
// least one gap-bearing segment. Returns nothing when the series is already
// complete. At L = t the single whole-series segment is force-selected so the
// search always terminates; that case is flagged.
inline std::optional<SelectionResult> select_samples(const TimeSeries& series,
                                                     std::size_t base_length,
                                                     double rate_threshold) {
    if (base_length < 2) throw InvalidInput("base length l must be >= 2");
    if (series.missing_count() == 0) return std::nullopt;

    const std::size_t t = series.size();
    const double threshold = rate_threshold / 100.0;
    std::size_t L = 0;
    for (;;) {
        L = L + base_length >= t ? t : L + base_length;
        auto segments = split(series, L);
        SelectionResult result;
        result.segment_length = L;
        result.samples_total = segments.size();
        bool any_gap = false;
        for (const auto& seg : segments) {
            if (seg.local_missing_rate() < threshold) {
                any_gap = any_gap || seg.has_missing();
                result.selected.push_back(seg);
            }
        }
        if (any_gap) return result;
        if (L == t) {
            // Every gap-bearing window is above the threshold at every length;
            // force the whole series through so the run can finish.
            result.selected.clear();
            result.selected.emplace_back(series, 0, t);
            result.whole_series_fallback = true;
            return result;
        }
    }
}

struct StageOutcome {
    TimeSeries series;
    StageReport report;
    std::optional<WindowModel> model; // trained model, for warm starts
};

// One select - train - impute cycle. Every missing point inside a selected
// segment is filled and marked Imputed(stage_index).
inline StageOutcome run_stage(const TimeSeries& series, const FrameworkConfig& cfg,
                              std::size_t stage_index,
                              const std::optional<WindowModel>& warm_model = std::nullopt) {
    cfg.validate();
    if (series.missing_count() == 0)
        throw InvalidInput("run_stage: series has no missing points");

    const auto selection = select_samples(series, cfg.base_length, cfg.rate_threshold);
    const SelectionResult& sel = *selection;

    StageReport report;
    report.stage = stage_index;
    report.segment_length = sel.segment_length;
    report.samples_total = sel.samples_total;
    report.samples_selected = sel.selected.size();
    report.whole_series_fallback = sel.whole_series_fallback;

    std::optional<WindowModel> model;
    if (cfg.imputer.trainable()) {
        // The model's parameters are split-length independent, so every stage
        // after the first inherits the previous stage's parameters.
        if (warm_model && warm_model->context() == cfg.imputer.context &&
            warm_model->hidden() == cfg.imputer.hidden)
            model = *warm_model;
        else
            model.emplace(cfg.imputer.context, cfg.imputer.hidden,
                          detail::mix_seed(cfg.train().seed, stage_index));

        std::mt19937_64 rng(detail::mix_seed(cfg.train().seed, stage_index * 2 + 1));
        for (std::size_t epoch = 0; epoch < cfg.train().epochs; ++epoch) {
            double loss_sum = 0.0;
            std::size_t steps = 0;
            for (const auto& sample : sel.selected) {
                const TrainStepResult r = train_step(*model, sample, cfg.train(), rng);
                if (r.applied) {
                    loss_sum += r.loss.total;
                    ++steps;
                }
            }
            if (steps > 0) {
                const double mean_loss = loss_sum / static_cast<double>(steps);
                if (epoch == 0) report.first_epoch_loss = mean_loss;
                report.last_epoch_loss = mean_loss;
            }
        }
        if (!model->parameters_finite())
            throw StageFailure("stage " + std::to_string(stage_index) +
                               ": model parameters diverged");
    }

    // Impute every gap inside the selected segments. Only the right-aligned
    // final segment can overlap its predecessor; the first prediction wins.
    std::vector<std::size_t> positions;
    std::vector<double> predictions;
    std::vector<bool> claimed(series.size(), false);
    for (const auto& seg : sel.selected) {
        if (!seg.has_missing()) continue;
        std::vector<double> pred;
        switch (cfg.imputer.kind) {
        case ImputerKind::Mean: pred = impute_mean(seg); break;
        case ImputerKind::Linear: pred = impute_linear(seg); break;
        case ImputerKind::Spline: pred = impute_spline(seg).values; break;
        case ImputerKind::WindowModel: pred = impute_model(*model, seg); break;
        }
        const auto gaps = seg.missing_offsets();
        for (std::size_t k = 0; k < gaps.size(); ++k) {
            const std::size_t global = seg.start() + gaps[k];
            if (claimed[global]) continue;
            claimed[global] = true;
            positions.push_back(global);
            predictions.push_back(pred[k]);
        }
    }

    StageOutcome outcome{series.with_imputed(positions, predictions, static_cast<std::uint32_t>(stage_index)),
                         std::move(report), std::move(model)};
    outcome.report.points_imputed = positions.size();

    const std::size_t window =
        std::min(cfg.eval_window.value_or(cfg.base_length), series.size());
    outcome.report.global_siv = global_siv(series, outcome.series);
    outcome.report.local_siv = local_siv(series, outcome.series, window);
    return outcome;
}

struct RunResult {
    TimeSeries series;
    std::vector<StageReport> reports;
};

// Called after each committed stage with the stage output in raw units.
using StageCallback = std::function<void(const TimeSeries&, const StageReport&)>;

// The full multistage loop. The series is z-scored over its observed points
// before stage 1; known input values are carried into the output bit-exactly
// and only the imputations pass through the inverse transform.
inline RunResult run(const TimeSeries& series, const FrameworkConfig& cfg,
                     const StageCallback& on_stage = {}) {
    cfg.validate();
    if (series.missing_count() == 0) return {series, {}};

    const NormalizationParams params = fit_normalization(series);
    TimeSeries work = apply_normalization(series, params);

    auto finalize = [&](const TimeSeries& normalized) {
        std::vector<double> values = series.raw_values();
        std::vector<PointStatus> status = series.statuses();
        for (std::size_t i = 0; i < normalized.size(); ++i) {
            if (series.status(i).is_missing() && normalized.status(i).is_known()) {
                values[i] = normalized.value(i) * params.scale + params.center;
                status[i] = normalized.status(i);
            }
        }
        return TimeSeries(std::move(values), std::move(status),
                          series.has_time_index() ? series.time_index()
                                                  : std::vector<std::int64_t>{});
    };

    std::vector<StageReport> reports;
    std::optional<WindowModel> warm;
    bool last_was_fallback = false;
    for (std::size_t stage = 1; work.missing_count() > 0; ++stage) {
        if (stage > cfg.max_stages)
            throw IncompleteResult("stage cap " + std::to_string(cfg.max_stages) +
                                       " reached with missing values remaining",
                                   finalize(work), std::move(reports));
        StageOutcome outcome = run_stage(work, cfg, stage, warm);
        if (outcome.report.whole_series_fallback && last_was_fallback)
            throw ProgressStall("whole-series fallback selected twice in a row");
        last_was_fallback = outcome.report.whole_series_fallback;
        work = std::move(outcome.series);
        warm = std::move(outcome.model);
        reports.push_back(outcome.report);
        if (on_stage) on_stage(finalize(work), reports.back());
    }
    return {finalize(work), std::move(reports)};
}

} // namespace mlsif

#endif
