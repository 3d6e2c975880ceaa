#ifndef MLSIF_CONFIG_HPP
#define MLSIF_CONFIG_HPP

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mlsif/harness.hpp"

namespace mlsif {

// Everything a command needs, in one declarative bag. The experiment spec
// carries the framework config, so each setting has exactly one home.
struct RunConfig {
    std::optional<std::uint64_t> seed; // absent: generated at startup and logged
    std::optional<double> na_value;    // extra missing sentinel on input files
    ExperimentSpec experiment;

    FrameworkConfig& framework() { return experiment.framework; }
    const FrameworkConfig& framework() const { return experiment.framework; }
    TrainConfig& train() { return experiment.framework.imputer.train; }
    const TrainConfig& train() const { return experiment.framework.imputer.train; }
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<double> parse_double_list(const std::string& value, long line) {
    std::vector<double> out;
    for (const auto& f : split_fields(value, ',')) {
        const std::string item = trim(f);
        if (item.empty()) throw ParseError("empty list entry", line);
        out.push_back(parse_double(item, line));
    }
    return out;
}

inline std::uint64_t parse_u64(const std::string& value, long line) {
    const long long v = parse_int(value, line);
    if (v < 0) throw ParseError("value must be nonnegative", line);
    return static_cast<std::uint64_t>(v);
}

} // namespace detail

// Applies one key. Every configuration surface (file, environment, CLI) funnels
// through here, so they accept the same names and the same validation.
inline void apply_config_entry(RunConfig& cfg, const std::string& key,
                               const std::string& value, long line = -1) {
    auto& fw = cfg.framework();
    auto& tr = cfg.train();
    auto& ex = cfg.experiment;
    try {
        if (key == "seed") cfg.seed = detail::parse_u64(value, line);
        else if (key == "na_value") cfg.na_value = parse_double(value, line);
        else if (key == "framework.base_length") fw.base_length = detail::parse_u64(value, line);
        else if (key == "framework.rate_threshold") fw.rate_threshold = parse_double(value, line);
        else if (key == "framework.max_stages") fw.max_stages = detail::parse_u64(value, line);
        else if (key == "framework.eval_window") fw.eval_window = detail::parse_u64(value, line);
        else if (key == "imputer.kind") fw.imputer.kind = imputer_kind_from_string(value);
        else if (key == "imputer.hidden") fw.imputer.hidden = detail::parse_u64(value, line);
        else if (key == "imputer.context") fw.imputer.context = detail::parse_u64(value, line);
        else if (key == "train.alpha") tr.alpha = parse_double(value, line);
        else if (key == "train.lambda") tr.lambda = parse_double(value, line);
        else if (key == "train.gamma") tr.gamma = parse_double(value, line);
        else if (key == "train.epochs") tr.epochs = detail::parse_u64(value, line);
        else if (key == "train.learning_rate") tr.learning_rate = parse_double(value, line);
        else if (key == "experiment.design") ex.design = experiment_design_from_string(value);
        else if (key == "experiment.rate") ex.missing_rate = parse_double(value, line);
        else if (key == "experiment.mean_gap_len") ex.mean_gap_len = parse_double(value, line);
        else if (key == "experiment.alpha_grid") ex.alpha_grid = detail::parse_double_list(value, line);
        else if (key == "experiment.rate_grid") ex.rate_grid = detail::parse_double_list(value, line);
        else if (key == "experiment.methods") {
            ex.methods.clear();
            for (const auto& f : detail::split_fields(value, ','))
                ex.methods.push_back(method_from_string(detail::trim(f)));
        } else if (key == "experiment.seeds") ex.seeds = detail::parse_u64(value, line);
        else if (key == "experiment.output_dir") ex.output_dir = value;
        else if (key == "dataset.file") ex.dataset_file = value;
        else if (key == "dataset.uci_column") ex.uci_column = value;
        else if (key == "synthetic.length") ex.synthetic.length = detail::parse_u64(value, line);
        else if (key == "synthetic.period") ex.synthetic.period = parse_double(value, line);
        else if (key == "synthetic.amplitude") ex.synthetic.amplitude = parse_double(value, line);
        else if (key == "synthetic.trend") ex.synthetic.trend = parse_double(value, line);
        else if (key == "synthetic.noise") ex.synthetic.noise_sigma = parse_double(value, line);
        else if (key == "synthetic.seed") ex.synthetic.seed = detail::parse_u64(value, line);
        else throw ParseError("unknown configuration key '" + key + "'", line);
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(std::string("key '") + key + "': " + e.what(), line);
    }
}

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "seed", "na_value",
        "framework.base_length", "framework.rate_threshold", "framework.max_stages",
        "framework.eval_window",
        "imputer.kind", "imputer.hidden", "imputer.context",
        "train.alpha", "train.lambda", "train.gamma", "train.epochs", "train.learning_rate",
        "experiment.design", "experiment.rate", "experiment.mean_gap_len",
        "experiment.alpha_grid", "experiment.rate_grid", "experiment.methods",
        "experiment.seeds", "experiment.output_dir",
        "dataset.file", "dataset.uci_column",
        "synthetic.length", "synthetic.period", "synthetic.amplitude", "synthetic.trend",
        "synthetic.noise", "synthetic.seed"};
    return keys;
}

// key = value lines, '#' comments, dotted keys for nesting.
inline void parse_config(std::istream& is, RunConfig& cfg) {
    std::string line;
    long lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = detail::trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value'", lineno);
        const std::string key = detail::trim(std::string_view(stripped).substr(0, eq));
        const std::string value = detail::trim(std::string_view(stripped).substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", lineno);
        apply_config_entry(cfg, key, value, lineno);
    }
}

inline void load_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open config file: " + path);
    try {
        parse_config(is, cfg);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

// MLSIF_TRAIN_ALPHA=0.9 style overrides; applied between file and flags.
inline void apply_env_overrides(RunConfig& cfg, const char* prefix = "MLSIF_") {
    for (const std::string& key : config_keys()) {
        std::string env = prefix;
        for (char c : key)
            env += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (const char* value = std::getenv(env.c_str()))
            apply_config_entry(cfg, key, value);
    }
}

// The `config init` document: every key, its default, and what it does.
inline std::string default_config_text() {
    const RunConfig d;
    std::ostringstream os;
    os << "# mlsif configuration\n"
       << "# 'key = value' lines; '#' starts a comment; unknown keys are rejected.\n"
       << "# Every key can be overridden by MLSIF_<KEY> environment variables\n"
       << "# (dots become underscores) and by command-line flags.\n"
       << "\n"
       << "# Master seed for all randomness. If unset and no --seed flag is given,\n"
       << "# a seed is generated at startup and logged.\n"
       << "seed = 1\n"
       << "\n"
       << "# Extra missing sentinel for input files (empty cells always count).\n"
       << "# na_value = -200\n"
       << "\n"
       << "# Base split-length increment l: stage selection tries L = l, 2l, 3l, ...\n"
       << "framework.base_length = " << d.framework().base_length << "\n"
       << "# Segments train and impute only while their missing rate is below r%.\n"
       << "framework.rate_threshold = " << format_double(d.framework().rate_threshold) << "\n"
       << "# Hard cap on stages before the run is declared incomplete.\n"
       << "framework.max_stages = " << d.framework().max_stages << "\n"
       << "# Window for the local SIV metric; defaults to framework.base_length.\n"
       << "# framework.eval_window = " << d.framework().base_length << "\n"
       << "\n"
       << "# Imputer: mean | linear | spline | window-model.\n"
       << "imputer.kind = " << to_string(d.framework().imputer.kind) << "\n"
       << "# Hidden width of the trainable window model.\n"
       << "imputer.hidden = " << d.framework().imputer.hidden << "\n"
       << "# Neighbourhood radius the window model predicts from.\n"
       << "imputer.context = " << d.framework().imputer.context << "\n"
       << "\n"
       << "# Mixture weight between the squared-error part and the SIV part.\n"
       << "train.alpha = " << format_double(d.train().alpha) << "\n"
       << "# Weight of dropped-originally-observed vs dropped-previously-imputed errors.\n"
       << "train.lambda = " << format_double(d.train().lambda) << "\n"
       << "# Share of known values dropped per training step.\n"
       << "train.gamma = " << format_double(d.train().gamma) << "\n"
       << "train.epochs = " << d.train().epochs << "\n"
       << "train.learning_rate = " << format_double(d.train().learning_rate) << "\n"
       << "\n"
       << "# Experiment driver: ablation | alpha-sweep | rate-sweep | baseline-compare.\n"
       << "experiment.design = " << to_string(d.experiment.design) << "\n"
       << "# Global missing rate for constructed gaps (ablation / baseline-compare).\n"
       << "experiment.rate = " << format_double(d.experiment.missing_rate) << "\n"
       << "# Mean length of constructed gap clusters.\n"
       << "experiment.mean_gap_len = " << format_double(d.experiment.mean_gap_len) << "\n"
       << "experiment.alpha_grid = 0,0.25,0.5,0.75,0.8,0.9,0.95,0.96,0.97,0.98,0.99,1\n"
       << "experiment.rate_grid = 0.1,0.2,0.3,0.4,0.5\n"
       << "experiment.methods = mean,linear,spline,one-stage-model,multistage\n"
       << "# Independent repetitions per cell.\n"
       << "experiment.seeds = " << d.experiment.seeds << "\n"
       << "experiment.output_dir = " << d.experiment.output_dir << "\n"
       << "\n"
       << "# Dataset: a timestamp,value CSV; unset means the bundled synthetic data.\n"
       << "# dataset.file = data.csv\n"
       << "# Set to a column name to read dataset.file in the hourly air-quality\n"
       << "# export layout (semicolons, decimal commas, -200 sentinel).\n"
       << "# dataset.uci_column = C6H6(GT)\n"
       << "\n"
       << "synthetic.length = " << d.experiment.synthetic.length << "\n"
       << "synthetic.period = " << format_double(d.experiment.synthetic.period) << "\n"
       << "synthetic.amplitude = " << format_double(d.experiment.synthetic.amplitude) << "\n"
       << "synthetic.trend = " << format_double(d.experiment.synthetic.trend) << "\n"
       << "synthetic.noise = " << format_double(d.experiment.synthetic.noise_sigma) << "\n"
       << "synthetic.seed = " << d.experiment.synthetic.seed << "\n";
    return os.str();
}

} // namespace mlsif

#endif
