#ifndef MLSIF_HARNESS_HPP
#define MLSIF_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mlsif/framework.hpp"
#include "mlsif/io.hpp"
#include "mlsif/metrics.hpp"
#include "mlsif/simulate.hpp"

namespace mlsif {

// ---------------------------------------------------------------------------
// Bundled synthetic sensor-like data: seasonal cycle + slow trend + noise.
// ---------------------------------------------------------------------------

struct SyntheticSpec {
    std::size_t length = 20000;
    double period = 24.0;
    double amplitude = 1.0;
    double trend = 0.5; // total rise across the series
    double noise_sigma = 0.1;
    std::uint64_t seed = 1;

    void validate() const {
        if (length < 2) throw InvalidInput("synthetic length must be >= 2");
        if (!(period > 0.0)) throw InvalidInput("synthetic period must be > 0");
        if (noise_sigma < 0.0) throw InvalidInput("synthetic noise must be >= 0");
    }
};

inline TimeSeries make_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    auto gauss = [&rng] {
        const double u1 = std::max(detail::canonical_unit(rng), 1e-300);
        const double u2 = detail::canonical_unit(rng);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    };
    std::vector<double> v(spec.length);
    const double tau = 6.283185307179586;
    for (std::size_t i = 0; i < spec.length; ++i) {
        const double x = static_cast<double>(i);
        v[i] = spec.amplitude * std::sin(tau * x / spec.period) +
               0.3 * spec.amplitude * std::sin(tau * 3.0 * x / spec.period + 1.0) +
               spec.trend * x / static_cast<double>(spec.length - 1) +
               spec.noise_sigma * gauss();
    }
    return TimeSeries::complete(std::move(v));
}

// ---------------------------------------------------------------------------
// The one-stage baseline: a single fixed-length train-and-impute pass with no
// iteration. Training only sees below-threshold windows, but every gap in the
// series is filled.
// ---------------------------------------------------------------------------

inline TimeSeries one_stage_impute(const TimeSeries& series, const FrameworkConfig& cfg) {
    cfg.validate();
    if (series.missing_count() == 0) return series;

    const NormalizationParams params = fit_normalization(series);
    const TimeSeries work = apply_normalization(series, params);
    const std::size_t L = std::min(cfg.base_length, work.size());
    const auto segments = split(work, L);

    std::optional<WindowModel> model;
    if (cfg.imputer.trainable()) {
        std::vector<SegmentView> train_set;
        for (const auto& seg : segments)
            if (seg.local_missing_rate() < cfg.rate_threshold / 100.0)
                train_set.push_back(seg);
        model.emplace(cfg.imputer.context, cfg.imputer.hidden,
                      detail::mix_seed(cfg.train().seed, 9001));
        std::mt19937_64 rng(detail::mix_seed(cfg.train().seed, 9002));
        for (std::size_t epoch = 0; epoch < cfg.train().epochs; ++epoch)
            for (const auto& sample : train_set) train_step(*model, sample, cfg.train(), rng);
    }

    std::vector<std::size_t> positions;
    std::vector<double> predictions;
    std::vector<bool> claimed(work.size(), false);
    for (const auto& seg : segments) {
        if (!seg.has_missing()) continue;
        std::vector<double> pred;
        switch (cfg.imputer.kind) {
        case ImputerKind::Mean:
        case ImputerKind::Linear:
        case ImputerKind::Spline:
            try {
                if (cfg.imputer.kind == ImputerKind::Mean) pred = impute_mean(seg);
                else if (cfg.imputer.kind == ImputerKind::Linear) pred = impute_linear(seg);
                else pred = impute_spline(seg).values;
            } catch (const CannotImpute&) {
                // A window with no known values has no local information; fill
                // with the normalized global mean.
                pred.assign(seg.missing_count(), 0.0);
            }
            break;
        case ImputerKind::WindowModel:
            pred = impute_model(*model, seg);
            break;
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
    const TimeSeries completed = work.with_imputed(positions, predictions, 1);

    std::vector<double> values = series.raw_values();
    std::vector<PointStatus> status = series.statuses();
    for (std::size_t i = 0; i < completed.size(); ++i) {
        if (series.status(i).is_missing() && completed.status(i).is_known()) {
            values[i] = completed.value(i) * params.scale + params.center;
            status[i] = completed.status(i);
        }
    }
    return TimeSeries(std::move(values), std::move(status),
                      series.has_time_index() ? series.time_index()
                                              : std::vector<std::int64_t>{});
}

// Whole-series classical imputation, the way the usual R helpers treat a
// vector: one segment spanning everything.
inline TimeSeries whole_series_classical(const TimeSeries& series, ImputerKind kind) {
    if (series.missing_count() == 0) return series;
    SegmentView whole(series, 0, series.size());
    std::vector<double> pred;
    switch (kind) {
    case ImputerKind::Mean: pred = impute_mean(whole); break;
    case ImputerKind::Linear: pred = impute_linear(whole); break;
    case ImputerKind::Spline: pred = impute_spline(whole).values; break;
    case ImputerKind::WindowModel:
        throw InvalidInput("whole_series_classical: not a classical imputer");
    }
    return series.with_imputed(whole.missing_offsets(), pred, 1);
}

// ---------------------------------------------------------------------------
// Experiment drivers.
// ---------------------------------------------------------------------------

enum class ExperimentDesign { Ablation, AlphaSweep, RateSweep, BaselineCompare };

inline const char* to_string(ExperimentDesign d) {
    switch (d) {
    case ExperimentDesign::Ablation: return "ablation";
    case ExperimentDesign::AlphaSweep: return "alpha-sweep";
    case ExperimentDesign::RateSweep: return "rate-sweep";
    case ExperimentDesign::BaselineCompare: return "baseline-compare";
    }
    return "?";
}

inline ExperimentDesign experiment_design_from_string(const std::string& s) {
    if (s == "ablation") return ExperimentDesign::Ablation;
    if (s == "alpha-sweep") return ExperimentDesign::AlphaSweep;
    if (s == "rate-sweep") return ExperimentDesign::RateSweep;
    if (s == "baseline-compare") return ExperimentDesign::BaselineCompare;
    throw InvalidInput("unknown experiment design: " + s);
}

// Methods compared by the rate sweep and baseline comparison.
enum class Method { Mean, Linear, Spline, OneStageModel, Multistage };

inline const char* to_string(Method m) {
    switch (m) {
    case Method::Mean: return "mean";
    case Method::Linear: return "linear";
    case Method::Spline: return "spline";
    case Method::OneStageModel: return "one-stage-model";
    case Method::Multistage: return "multistage";
    }
    return "?";
}

inline Method method_from_string(const std::string& s) {
    if (s == "mean") return Method::Mean;
    if (s == "linear") return Method::Linear;
    if (s == "spline") return Method::Spline;
    if (s == "one-stage-model") return Method::OneStageModel;
    if (s == "multistage") return Method::Multistage;
    throw InvalidInput("unknown method: " + s);
}

struct ExperimentSpec {
    ExperimentDesign design = ExperimentDesign::Ablation;

    std::optional<std::string> dataset_file;
    std::optional<std::string> uci_column; // read dataset_file in the UCI layout
    SyntheticSpec synthetic;

    double missing_rate = 0.3;
    double mean_gap_len = 100.0;
    std::vector<double> alpha_grid = {0.0, 0.25, 0.5, 0.75, 0.8, 0.9,
                                      0.95, 0.96, 0.97, 0.98, 0.99, 1.0};
    std::vector<double> rate_grid = {0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<Method> methods = {Method::Mean, Method::Linear, Method::Spline,
                                   Method::OneStageModel, Method::Multistage};
    std::size_t seeds = 1;
    std::uint64_t base_seed = 1;

    FrameworkConfig framework;
    std::string output_dir = "experiment-out";

    void validate() const {
        if (seeds < 1) throw InvalidInput("experiment needs at least one seed");
        if (alpha_grid.empty() || rate_grid.empty() || methods.empty())
            throw InvalidInput("experiment grids must be nonempty");
        framework.validate();
        synthetic.validate();
    }
};

inline TimeSeries load_experiment_dataset(const ExperimentSpec& spec) {
    if (spec.dataset_file) {
        if (spec.uci_column)
            return read_uci_air_quality_file(*spec.dataset_file, *spec.uci_column).series;
        return read_series_csv_file(*spec.dataset_file).series;
    }
    return make_synthetic(spec.synthetic);
}

// One masked instance shared by every treatment at a given seed index, so
// cross-cell differences isolate the treatment.
struct CellInput {
    TimeSeries masked;
    std::vector<std::size_t> truth_positions;
    std::vector<double> truth_values;
    NormalizationParams norm; // fit on the masked series' observed points
};

inline CellInput make_cell_input(const TimeSeries& base, double rate, double mean_gap_len,
                                 std::uint64_t mask_seed, bool via_transfer) {
    const GapPlan plan = plan_large_gaps(base, rate, mean_gap_len, mask_seed);
    MaskedSeries m = [&] {
        if (!via_transfer) return apply_gap_plan(base, plan);
        // Experiment-1 style: realize the pattern as a donor mask, then stamp it.
        const MaskedSeries donor = apply_gap_plan(base, plan);
        return transfer_pattern(make_mask(donor.masked), base);
    }();
    CellInput in{std::move(m.masked), std::move(m.removed_positions),
                 std::move(m.removed_values), {}};
    in.norm = fit_normalization(in.masked);
    return in;
}

// All metrics on the normalized scale: paired metrics on the removed truth,
// SIV metrics between the masked input and the completed output.
inline MetricReport evaluate_cell(const CellInput& in, const TimeSeries& completed,
                                  std::size_t eval_window) {
    PairedEval pe;
    pe.truth.reserve(in.truth_positions.size());
    pe.predicted.reserve(in.truth_positions.size());
    for (std::size_t k = 0; k < in.truth_positions.size(); ++k) {
        const std::size_t i = in.truth_positions[k];
        if (!completed.status(i).is_known()) continue; // left unimputed
        pe.truth.push_back((in.truth_values[k] - in.norm.center) / in.norm.scale);
        pe.predicted.push_back((completed.value(i) - in.norm.center) / in.norm.scale);
    }
    MetricReport r;
    if (!pe.truth.empty()) r = paired_metrics(pe);
    const TimeSeries before = apply_normalization(in.masked, in.norm);
    const TimeSeries after = apply_normalization(completed, in.norm);
    const std::size_t window = std::min(eval_window, before.size());
    r.global_siv = global_siv(before, after);
    r.local_siv = local_siv(before, after, window);
    return r;
}

namespace detail {

struct ResultRow {
    std::string label; // cell name, alpha value, or rate
    std::string method;
    std::size_t seed_index = 0;
    bool ok = true;
    std::string error;
    MetricReport metrics;
};

inline std::string sanitize_csv(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

class ExperimentWriter {
public:
    explicit ExperimentWriter(const ExperimentSpec& spec) : spec_(spec) {
        std::filesystem::create_directories(spec.output_dir);
    }

    std::ofstream open(const std::string& name) {
        files_.push_back(name);
        std::ofstream os(std::filesystem::path(spec_.output_dir) / name);
        if (!os) throw Error("cannot write experiment file: " + name);
        return os;
    }

    void write_rows(const std::string& name, const std::string& label_column,
                    const std::vector<ResultRow>& rows, bool with_method) {
        auto os = open(name);
        os << label_column << (with_method ? ",method" : "") << ",seed,status,"
           << MetricReport::kCsvHeader << '\n';
        for (const auto& r : rows) {
            os << r.label;
            if (with_method) os << ',' << r.method;
            os << ',' << r.seed_index << ','
               << (r.ok ? "ok" : "failed:" + sanitize_csv(r.error)) << ','
               << metric_report_csv_row(r.metrics) << '\n';
        }
    }

    // Long format for plotting: one metric value per row.
    void write_long(const std::string& name, const std::string& x_column,
                    const std::vector<ResultRow>& rows) {
        auto os = open(name);
        os << x_column << ",series,metric,value,seed\n";
        const auto emit = [&os](const ResultRow& r, const char* metric,
                                const std::optional<double>& v) {
            if (!v) return;
            os << r.label << ',' << (r.method.empty() ? "multistage" : r.method) << ','
               << metric << ',' << format_double(*v) << ',' << r.seed_index << '\n';
        };
        for (const auto& r : rows) {
            if (!r.ok) continue;
            emit(r, "mse", r.metrics.mse);
            emit(r, "mae", r.metrics.mae);
            emit(r, "rmse", r.metrics.rmse);
            emit(r, "rmae", r.metrics.rmae);
            emit(r, "r2", r.metrics.r2);
            emit(r, "d2", r.metrics.d2);
            emit(r, "global_siv", r.metrics.global_siv);
            emit(r, "local_siv", r.metrics.local_siv);
        }
    }

    void write_stage_log(const std::string& name, const std::vector<StageReport>& reports) {
        auto os = open(name);
        os << StageReport::kCsvHeader << '\n';
        for (const auto& r : reports) {
            os << r.stage << ',' << r.segment_length << ',' << r.samples_total << ','
               << r.samples_selected << ',' << r.points_imputed << ','
               << (r.whole_series_fallback ? 1 : 0) << ',';
            if (r.first_epoch_loss) os << format_double(*r.first_epoch_loss);
            os << ',';
            if (r.last_epoch_loss) os << format_double(*r.last_epoch_loss);
            os << ',';
            if (r.global_siv) os << format_double(*r.global_siv);
            os << ',';
            if (r.local_siv) os << format_double(*r.local_siv);
            os << '\n';
        }
    }

    void write_manifest() {
        auto os = open("manifest.txt");
        os << "design: " << to_string(spec_.design) << '\n';
        os << "seeds: " << spec_.seeds << '\n';
        os << "base_seed: " << spec_.base_seed << '\n';
        os << "dataset: "
           << (spec_.dataset_file ? *spec_.dataset_file : std::string("synthetic")) << '\n';
        if (!spec_.dataset_file) {
            os << "synthetic.length: " << spec_.synthetic.length << '\n';
            os << "synthetic.period: " << format_double(spec_.synthetic.period) << '\n';
            os << "synthetic.seed: " << spec_.synthetic.seed << '\n';
        }
        os << "missing_rate: " << format_double(spec_.missing_rate) << '\n';
        os << "mean_gap_len: " << format_double(spec_.mean_gap_len) << '\n';
        os << "alpha: " << format_double(spec_.framework.train().alpha) << '\n';
        os << "lambda: " << format_double(spec_.framework.train().lambda) << '\n';
        os << "gamma: " << format_double(spec_.framework.train().gamma) << '\n';
        os << "epochs: " << spec_.framework.train().epochs << '\n';
        os << "base_length: " << spec_.framework.base_length << '\n';
        os << "rate_threshold: " << format_double(spec_.framework.rate_threshold) << '\n';
        os << "files:" << '\n';
        for (const auto& f : files_) os << "  " << f << '\n';
    }

private:
    const ExperimentSpec& spec_;
    std::vector<std::string> files_;
};

inline std::uint64_t cell_mask_seed(const ExperimentSpec& spec, std::size_t seed_index) {
    return mix_seed(spec.base_seed, 1000 + seed_index);
}
inline std::uint64_t cell_train_seed(const ExperimentSpec& spec, std::size_t seed_index) {
    return mix_seed(spec.base_seed, 2000 + seed_index);
}

} // namespace detail

struct ExperimentResult {
    std::vector<detail::ResultRow> rows;
    bool all_ok = true;
};

// 2x2 grid: {one-stage, multistage} x {pure MSE, mixture}. The same masked
// instance and training seed feed all four cells of a seed index.
inline ExperimentResult run_ablation(const ExperimentSpec& spec) {
    spec.validate();
    const TimeSeries base = load_experiment_dataset(spec);
    detail::ExperimentWriter writer(spec);
    ExperimentResult result;
    const std::size_t eval_window =
        spec.framework.eval_window.value_or(spec.framework.base_length);

    struct Cell {
        const char* name;
        bool multistage;
        bool mixture;
    };
    const Cell cells[] = {{"one-stage+mse", false, false},
                          {"one-stage+mixture", false, true},
                          {"multistage+mse", true, false},
                          {"multistage+mixture", true, true}};

    for (std::size_t s = 0; s < spec.seeds; ++s) {
        const CellInput input = make_cell_input(base, spec.missing_rate, spec.mean_gap_len,
                                                detail::cell_mask_seed(spec, s),
                                                /*via_transfer=*/true);
        for (const Cell& cell : cells) {
            detail::ResultRow row;
            row.label = cell.name;
            row.seed_index = s;
            try {
                FrameworkConfig cfg = spec.framework;
                cfg.imputer.kind = ImputerKind::WindowModel;
                cfg.imputer.train.seed = detail::cell_train_seed(spec, s);
                if (!cell.mixture) cfg.imputer.train.alpha = 0.0;
                TimeSeries completed = [&] {
                    if (!cell.multistage) return one_stage_impute(input.masked, cfg);
                    RunResult r = run(input.masked, cfg);
                    writer.write_stage_log("stages_" + std::string(cell.name) + "_seed" +
                                               std::to_string(s) + ".csv",
                                           r.reports);
                    return r.series;
                }();
                row.metrics = evaluate_cell(input, completed, eval_window);
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
                result.all_ok = false;
            }
            result.rows.push_back(std::move(row));
        }
    }
    writer.write_rows("ablation.csv", "cell", result.rows, /*with_method=*/false);
    writer.write_long("plot_long.csv", "cell", result.rows);
    writer.write_manifest();
    return result;
}

// Full multistage run per alpha in the grid; curves for all metrics.
inline ExperimentResult run_alpha_sweep(const ExperimentSpec& spec) {
    spec.validate();
    const TimeSeries base = load_experiment_dataset(spec);
    detail::ExperimentWriter writer(spec);
    ExperimentResult result;
    const std::size_t eval_window =
        spec.framework.eval_window.value_or(spec.framework.base_length);

    for (std::size_t s = 0; s < spec.seeds; ++s) {
        const CellInput input = make_cell_input(base, spec.missing_rate, spec.mean_gap_len,
                                                detail::cell_mask_seed(spec, s),
                                                /*via_transfer=*/false);
        for (double alpha : spec.alpha_grid) {
            detail::ResultRow row;
            row.label = format_double(alpha);
            row.seed_index = s;
            try {
                FrameworkConfig cfg = spec.framework;
                cfg.imputer.kind = ImputerKind::WindowModel;
                cfg.imputer.train.seed = detail::cell_train_seed(spec, s);
                cfg.imputer.train.alpha = alpha;
                const RunResult r = run(input.masked, cfg);
                row.metrics = evaluate_cell(input, r.series, eval_window);
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
                result.all_ok = false;
            }
            result.rows.push_back(std::move(row));
        }
    }
    writer.write_rows("alpha_sweep.csv", "alpha", result.rows, /*with_method=*/false);
    writer.write_long("plot_long.csv", "alpha", result.rows);
    writer.write_manifest();
    return result;
}

namespace detail {

inline TimeSeries run_method(Method method, const TimeSeries& masked,
                             const ExperimentSpec& spec, std::uint64_t train_seed) {
    FrameworkConfig cfg = spec.framework;
    cfg.imputer.train.seed = train_seed;
    switch (method) {
    case Method::Mean: return whole_series_classical(masked, ImputerKind::Mean);
    case Method::Linear: return whole_series_classical(masked, ImputerKind::Linear);
    case Method::Spline: return whole_series_classical(masked, ImputerKind::Spline);
    case Method::OneStageModel:
        cfg.imputer.kind = ImputerKind::WindowModel;
        return one_stage_impute(masked, cfg);
    case Method::Multistage:
        cfg.imputer.kind = ImputerKind::WindowModel;
        return run(masked, cfg).series;
    }
    throw InvalidInput("unreachable method");
}

inline std::vector<ResultRow> sweep_rates(const ExperimentSpec& spec,
                                          const std::vector<double>& rates,
                                          const TimeSeries& base, std::size_t eval_window,
                                          bool& all_ok) {
    std::vector<ResultRow> rows;
    for (std::size_t s = 0; s < spec.seeds; ++s) {
        for (double rate : rates) {
            // Same mask per (seed, rate) across methods.
            std::optional<CellInput> input;
            std::string mask_error;
            if (rate > 0.0) {
                try {
                    input = make_cell_input(base, rate, spec.mean_gap_len,
                                            mix_seed(cell_mask_seed(spec, s),
                                                     static_cast<std::uint64_t>(rate * 1000)),
                                            /*via_transfer=*/false);
                } catch (const std::exception& e) {
                    mask_error = e.what();
                }
            }
            for (Method method : spec.methods) {
                ResultRow row;
                row.label = format_double(rate);
                row.method = to_string(method);
                row.seed_index = s;
                if (!mask_error.empty()) {
                    row.ok = false;
                    row.error = mask_error;
                    all_ok = false;
                    rows.push_back(std::move(row));
                    continue;
                }
                try {
                    if (rate == 0.0) {
                        // Nothing to impute: every method is a no-op and the
                        // paired metrics stay empty.
                        MetricReport r;
                        r.global_siv = 0.0;
                        r.local_siv = 0.0;
                        row.metrics = r;
                    } else {
                        const TimeSeries completed = run_method(
                            method, input->masked, spec, cell_train_seed(spec, s));
                        row.metrics = evaluate_cell(*input, completed, eval_window);
                    }
                } catch (const std::exception& e) {
                    row.ok = false;
                    row.error = e.what();
                    all_ok = false;
                }
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

} // namespace detail

// Missing-rate grid x method list, one table row per cell.
inline ExperimentResult run_rate_sweep(const ExperimentSpec& spec) {
    spec.validate();
    const TimeSeries base = load_experiment_dataset(spec);
    detail::ExperimentWriter writer(spec);
    ExperimentResult result;
    const std::size_t eval_window =
        spec.framework.eval_window.value_or(spec.framework.base_length);
    result.rows = detail::sweep_rates(spec, spec.rate_grid, base, eval_window, result.all_ok);
    writer.write_rows("rate_sweep.csv", "rate", result.rows, /*with_method=*/true);
    writer.write_long("plot_long.csv", "rate", result.rows);
    writer.write_manifest();
    return result;
}

// The method comparison at the single configured rate.
inline ExperimentResult run_baseline_compare(const ExperimentSpec& spec) {
    spec.validate();
    const TimeSeries base = load_experiment_dataset(spec);
    detail::ExperimentWriter writer(spec);
    ExperimentResult result;
    const std::size_t eval_window =
        spec.framework.eval_window.value_or(spec.framework.base_length);
    result.rows = detail::sweep_rates(spec, {spec.missing_rate}, base, eval_window,
                                      result.all_ok);
    writer.write_rows("baseline_compare.csv", "rate", result.rows, /*with_method=*/true);
    writer.write_long("plot_long.csv", "rate", result.rows);
    writer.write_manifest();
    return result;
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
    switch (spec.design) {
    case ExperimentDesign::Ablation: return run_ablation(spec);
    case ExperimentDesign::AlphaSweep: return run_alpha_sweep(spec);
    case ExperimentDesign::RateSweep: return run_rate_sweep(spec);
    case ExperimentDesign::BaselineCompare: return run_baseline_compare(spec);
    }
    throw InvalidInput("unreachable design");
}

} // namespace mlsif

#endif
