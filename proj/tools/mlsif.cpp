// Command-line surface: impute / evaluate / simulate / experiment / config.
// Exit codes: 0 success, 1 usage or parse error, 2 incomplete imputation,
// 3 internal failure.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "mlsif/mlsif.hpp"

namespace {

using namespace mlsif;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> na_value;
    std::optional<double> alpha, lambda, gamma, rate_threshold;
    std::optional<std::uint64_t> base_length, max_stages, eval_window, epochs, hidden;
    std::optional<std::string> imputer;
};

void add_common_flags(CLI::App& app, CommonFlags& f) {
    app.add_option("--config", f.config_path, "Configuration file (see 'config init')");
    app.add_option("--seed", f.seed, "Master seed for all randomness");
    app.add_option("--na-value", f.na_value, "Extra missing sentinel in input files (e.g. -200)");
    app.add_option("--alpha", f.alpha, "Mixture weight of the SIV loss part [0,1]");
    app.add_option("--lambda", f.lambda, "Weight of dropped-originally-observed errors [0,1]");
    app.add_option("--gamma", f.gamma, "Share of known values dropped per training step [0,1]");
    app.add_option("--rate-threshold", f.rate_threshold, "Segment missing-rate threshold r%");
    app.add_option("--base-length", f.base_length, "Base split length increment l");
    app.add_option("--imputer", f.imputer, "mean | linear | spline | window-model");
    app.add_option("--max-stages", f.max_stages, "Stage cap before giving up");
    app.add_option("--eval-window", f.eval_window, "Window for the local SIV metric");
    app.add_option("--epochs", f.epochs, "Training epochs per stage");
    app.add_option("--hidden", f.hidden, "Hidden width of the window model");
}

// defaults -> config file -> environment -> flags, the last writer winning.
RunConfig build_config(const CommonFlags& f, const std::string& extra_file = "") {
    RunConfig cfg;
    if (!f.config_path.empty()) load_config_file(f.config_path, cfg);
    if (!extra_file.empty()) load_config_file(extra_file, cfg);
    apply_env_overrides(cfg);
    if (f.seed) cfg.seed = *f.seed;
    if (f.na_value) cfg.na_value = *f.na_value;
    if (f.alpha) cfg.train().alpha = *f.alpha;
    if (f.lambda) cfg.train().lambda = *f.lambda;
    if (f.gamma) cfg.train().gamma = *f.gamma;
    if (f.rate_threshold) cfg.framework().rate_threshold = *f.rate_threshold;
    if (f.base_length) cfg.framework().base_length = *f.base_length;
    if (f.max_stages) cfg.framework().max_stages = *f.max_stages;
    if (f.eval_window) cfg.framework().eval_window = *f.eval_window;
    if (f.epochs) cfg.train().epochs = *f.epochs;
    if (f.hidden) cfg.framework().imputer.hidden = *f.hidden;
    if (f.imputer) cfg.framework().imputer.kind = imputer_kind_from_string(*f.imputer);

    if (!cfg.seed) {
        std::random_device rd;
        cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        std::cerr << "seed: " << *cfg.seed << " (generated; pass --seed "
                  << *cfg.seed << " to reproduce)\n";
    }
    cfg.train().seed = *cfg.seed;
    cfg.experiment.base_seed = *cfg.seed;
    if (cfg.framework().rate_threshold >= 100.0)
        std::cerr << "warning: rate threshold 100% selects every segment\n";
    return cfg;
}

SeriesDocument read_input(const std::string& path, const RunConfig& cfg,
                          const std::optional<std::string>& uci_column) {
    if (uci_column) return read_uci_air_quality_file(path, *uci_column);
    return read_series_csv_file(path, cfg.na_value);
}

int cmd_impute(const std::string& input, const std::string& output,
               const std::string& sidecar_path, const std::string& checkpoint,
               const std::optional<std::string>& uci_column, const RunConfig& cfg) {
    SeriesDocument doc = read_input(input, cfg, uci_column);
    const TimeSeries original = doc.series;

    const std::string sidecar =
        sidecar_path.empty() ? output + ".provenance.csv" : sidecar_path;

    StageCallback on_stage = [&](const TimeSeries& partial, const StageReport& report) {
        std::cerr << report.log_line() << '\n';
        if (!checkpoint.empty()) {
            SeriesDocument snap = doc;
            snap.series = partial;
            write_series_csv_file(checkpoint, snap);
            std::ofstream ps(checkpoint + ".provenance.csv");
            write_provenance_csv(ps, partial);
        }
    };

    auto emit = [&](const TimeSeries& completed, const std::vector<StageReport>& reports) {
        SeriesDocument out = doc;
        out.series = completed;
        write_series_csv_file(output, out);
        std::ofstream ps(sidecar);
        if (!ps) throw Error("cannot write sidecar: " + sidecar);
        write_provenance_csv(ps, completed);

        std::size_t imputed = 0;
        for (std::size_t i = 0; i < completed.size(); ++i)
            imputed += completed.status(i).is_imputed() && original.status(i).is_missing();
        std::cout << imputed << " points imputed in " << reports.size() << " stages\n";
        if (imputed > 0) {
            const NormalizationParams params = fit_normalization(original);
            const TimeSeries before = apply_normalization(original, params);
            const TimeSeries after = apply_normalization(completed, params);
            const std::size_t window = std::min(
                cfg.framework().eval_window.value_or(cfg.framework().base_length),
                before.size());
            MetricReport r;
            r.global_siv = global_siv(before, after);
            r.local_siv = local_siv(before, after, window);
            std::cout << metric_report_text(r);
        }
    };

    try {
        const RunResult result = run(original, cfg.framework(), on_stage);
        emit(result.series, result.reports);
        return 0;
    } catch (const IncompleteResult& e) {
        std::cerr << "incomplete: " << e.what() << '\n';
        emit(e.partial(), e.reports());
        return 2;
    }
}

int cmd_evaluate(const std::string& truth_file, const std::string& imputed_file,
                 const std::string& before_file, bool raw_metrics,
                 const std::string& output_csv, const RunConfig& cfg) {
    const SeriesDocument truth = read_series_csv_file(truth_file, cfg.na_value);
    const SeriesDocument imputed = read_series_csv_file(imputed_file, cfg.na_value);

    std::map<std::int64_t, std::size_t> position_of;
    for (std::size_t i = 0; i < imputed.series.size(); ++i)
        position_of[imputed.series.time_index()[i]] = i;

    PairedEval pe;
    std::vector<std::size_t> truth_positions;
    for (std::size_t k = 0; k < truth.series.size(); ++k) {
        if (!truth.series.status(k).is_known()) continue;
        const auto it = position_of.find(truth.series.time_index()[k]);
        if (it == position_of.end())
            throw ParseError("misaligned timestamps: '" + truth.timestamp_text[k] +
                        "' not present in " + imputed_file);
        if (!imputed.series.status(it->second).is_known())
            throw ParseError("imputed file has no value at timestamp '" +
                        truth.timestamp_text[k] + "'");
        pe.truth.push_back(truth.series.value(k));
        pe.predicted.push_back(imputed.series.value(it->second));
        truth_positions.push_back(it->second);
    }
    if (pe.truth.empty()) throw ParseError("no evaluable rows in " + truth_file);

    TimeSeries before = [&] {
        if (!before_file.empty()) {
            const SeriesDocument b = read_series_csv_file(before_file, cfg.na_value);
            if (b.series.size() != imputed.series.size())
                throw ParseError("before-series length differs from imputed series");
            return b.series;
        }
        // Reconstruct the pre-imputation state by re-masking the truth rows.
        std::vector<double> v = imputed.series.raw_values();
        std::vector<PointStatus> st = imputed.series.statuses();
        for (std::size_t pos : truth_positions) st[pos] = PointStatus::missing();
        return TimeSeries(std::move(v), std::move(st), imputed.series.time_index());
    }();

    NormalizationParams params{0.0, 1.0};
    if (!raw_metrics) params = fit_normalization(before);
    for (auto& x : pe.truth) x = (x - params.center) / params.scale;
    for (auto& x : pe.predicted) x = (x - params.center) / params.scale;

    MetricReport report = paired_metrics(pe);
    const TimeSeries nbefore = apply_normalization(before, params);
    const TimeSeries nafter = apply_normalization(imputed.series, params);
    const std::size_t window = std::min(
        cfg.framework().eval_window.value_or(cfg.framework().base_length), nbefore.size());
    report.global_siv = global_siv(nbefore, nafter);
    report.local_siv = local_siv(nbefore, nafter, window);

    std::cout << metric_report_text(report);
    if (!output_csv.empty()) {
        std::ofstream os(output_csv);
        if (!os) throw Error("cannot write " + output_csv);
        os << MetricReport::kCsvHeader << '\n' << metric_report_csv_row(report) << '\n';
    }
    return 0;
}

int cmd_simulate(const std::string& input, double rate, double mean_gap_len,
                 const std::string& donor_file, const std::string& out_masked,
                 const std::string& out_truth, const std::string& out_plan,
                 const std::optional<std::string>& uci_column, const RunConfig& cfg) {
    SeriesDocument doc = read_input(input, cfg, uci_column);

    MaskedSeries result{doc.series, {}, {}};
    std::optional<GapPlan> plan;
    if (!donor_file.empty()) {
        const SeriesDocument donor = read_series_csv_file(donor_file, cfg.na_value);
        result = transfer_pattern(make_mask(donor.series), doc.series);
    } else {
        plan = plan_large_gaps(doc.series, rate, mean_gap_len, *cfg.seed);
        result = apply_gap_plan(doc.series, *plan);
    }

    SeriesDocument masked = doc;
    masked.series = result.masked;
    write_series_csv_file(out_masked, masked);

    if (!out_truth.empty()) {
        std::ofstream os(out_truth);
        if (!os) throw Error("cannot write " + out_truth);
        os << doc.timestamp_header << ',' << doc.value_header << '\n';
        for (std::size_t k = 0; k < result.removed_positions.size(); ++k)
            os << doc.timestamp_text[result.removed_positions[k]] << ','
               << format_double(result.removed_values[k]) << '\n';
    }
    if (!out_plan.empty() && plan) {
        std::ofstream os(out_plan);
        if (!os) throw Error("cannot write " + out_plan);
        write_gap_plan_csv(os, *plan);
    }
    std::cout << "removed " << result.removed_positions.size() << " points";
    if (plan) std::cout << " (achieved rate " << format_double(plan->achieved_rate) << ")";
    std::cout << '\n';
    return 0;
}

int cmd_experiment(const std::string& spec_file, const CommonFlags& flags) {
    const RunConfig cfg = build_config(flags, spec_file);
    const ExperimentResult result = run_experiment(cfg.experiment);
    std::size_t failed = 0;
    for (const auto& row : result.rows) failed += !row.ok;
    std::cout << result.rows.size() << " cells, " << failed << " failed; outputs in "
              << cfg.experiment.output_dir << '\n';
    if (failed > 0) {
        for (const auto& row : result.rows)
            if (!row.ok)
                std::cerr << "failed cell " << row.label << " seed " << row.seed_index
                          << ": " << row.error << '\n';
        return 3;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multistage time-series missing-value imputation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonFlags flags;
    add_common_flags(app, flags);

    // impute
    auto* impute = app.add_subcommand("impute", "Fill the gaps of a series file");
    std::string in_file, out_file, sidecar, checkpoint;
    std::optional<std::string> uci_column;
    impute->add_option("input", in_file, "Input series CSV")->required();
    impute->add_option("--output,-o", out_file, "Completed series CSV")->required();
    impute->add_option("--sidecar", sidecar, "Provenance CSV (default <output>.provenance.csv)");
    impute->add_option("--checkpoint", checkpoint, "Write the partial series here after each stage");
    impute->add_option("--uci-column", uci_column, "Read input in the air-quality export layout");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Metrics between held-out truth and an imputed file");
    std::string truth_file, imputed_file, before_file, eval_csv;
    bool raw_metrics = false;
    evaluate->add_option("truth", truth_file, "Held-out truth CSV")->required();
    evaluate->add_option("imputed", imputed_file, "Imputed series CSV")->required();
    evaluate->add_option("--before", before_file, "Pre-imputation series (default: derived)");
    evaluate->add_option("--output,-o", eval_csv, "Also write the report as CSV");
    evaluate->add_flag("--raw-metrics", raw_metrics, "Skip the default normalization");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Construct missing patterns with held-out truth");
    std::string sim_in, sim_masked, sim_truth, sim_plan, donor;
    std::optional<std::string> sim_uci_column;
    double rate = 0.3, mean_gap_len = 100.0;
    simulate->add_option("input", sim_in, "Input series CSV")->required();
    simulate->add_option("--output,-o", sim_masked, "Masked series CSV")->required();
    simulate->add_option("--truth", sim_truth, "Held-out truth CSV");
    simulate->add_option("--plan", sim_plan, "Replayable gap plan CSV");
    simulate->add_option("--rate", rate, "Target global missing rate [0,1)");
    simulate->add_option("--mean-gap-len", mean_gap_len, "Mean constructed gap length");
    simulate->add_option("--donor", donor, "Transfer this file's missing pattern instead");
    simulate->add_option("--uci-column", sim_uci_column, "Read input in the air-quality export layout");

    // experiment
    auto* experiment = app.add_subcommand("experiment", "Run an experiment spec file");
    std::string spec_file;
    experiment->add_option("spec", spec_file, "Experiment spec (config format)")->required();

    // config
    auto* config = app.add_subcommand("config", "Configuration helpers");
    config->require_subcommand(1);
    auto* config_init = config->add_subcommand("init", "Print a documented default config");
    std::string config_out;
    config_init->add_option("--output,-o", config_out, "Write to a file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (config_init->parsed()) {
            const std::string text = default_config_text();
            if (config_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream os(config_out);
                if (!os) throw Error("cannot write " + config_out);
                os << text;
            }
            return 0;
        }
        if (impute->parsed())
            return cmd_impute(in_file, out_file, sidecar, checkpoint, uci_column,
                              build_config(flags));
        if (evaluate->parsed())
            return cmd_evaluate(truth_file, imputed_file, before_file, raw_metrics, eval_csv,
                                build_config(flags));
        if (simulate->parsed())
            return cmd_simulate(sim_in, rate, mean_gap_len, donor, sim_masked, sim_truth,
                                sim_plan, sim_uci_column, build_config(flags));
        if (experiment->parsed()) return cmd_experiment(spec_file, flags);
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
