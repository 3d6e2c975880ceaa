#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string cli_path() {
    const char* p = std::getenv("MLSIF_CLI");
    REQUIRE(p != nullptr);
    return p;
}

struct CommandResult {
    int exit_code;
    std::string output; // stdout only
};

CommandResult run_cli(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " 2>cli_stderr.txt";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    const int status = ::pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string slurp(const std::string& p) {
    std::ifstream is(p);
    REQUIRE(is);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    REQUIRE(os);
    os << text;
}

// A 120-point seasonal series with two interior gap runs.
void write_gappy_series(const std::string& path) {
    std::ostringstream os;
    os << "timestamp,value\n";
    for (int i = 0; i < 120; ++i) {
        os << i << ',';
        const bool missing = (i >= 30 && i < 34) || (i >= 70 && i < 72);
        if (!missing) os << 0.25 * i + 3.0 * std::sin(0.5 * i);
        os << '\n';
    }
    write_file(path, os.str());
}

} // namespace

TEST_CASE("config init output parses back through the config loader") {
    const auto r = run_cli("config init");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("train.alpha = 0.98") != std::string::npos);
    write_file("cli_config.ini", r.output);
    write_gappy_series("cli_in.csv");
    const auto used = run_cli("impute cli_in.csv -o cli_out_cfg.csv --config cli_config.ini "
                              "--imputer linear --rate-threshold 40");
    CHECK(used.exit_code == 0);
}

TEST_CASE("impute completes a file and writes provenance") {
    write_gappy_series("cli_in.csv");
    const auto r = run_cli("impute cli_in.csv -o cli_out.csv --seed 5 --imputer linear "
                           "--base-length 12 --rate-threshold 40");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("6 points imputed") != std::string::npos);
    CHECK(r.output.find("global_siv:") != std::string::npos);

    const std::string out = slurp("cli_out.csv");
    CHECK(out.find("30,") != std::string::npos);
    const std::string prov = slurp("cli_out.csv.provenance.csv");
    CHECK(prov.find("30,imputed,") != std::string::npos);
    CHECK(prov.find("0,observed,") != std::string::npos);

    SECTION("a complete input passes through untouched") {
        const auto done = run_cli("impute cli_out.csv -o cli_out2.csv --seed 5");
        CHECK(done.exit_code == 0);
        CHECK(done.output.find("0 points imputed") != std::string::npos);
        CHECK(slurp("cli_out2.csv") == out);
    }
}

TEST_CASE("identical invocations produce byte-identical outputs") {
    write_gappy_series("cli_in.csv");
    const std::string flags = " --seed 11 --base-length 12 --rate-threshold 40 "
                              "--epochs 2 --hidden 8";
    REQUIRE(run_cli("impute cli_in.csv -o cli_det_a.csv" + flags).exit_code == 0);
    REQUIRE(run_cli("impute cli_in.csv -o cli_det_b.csv" + flags).exit_code == 0);
    CHECK(slurp("cli_det_a.csv") == slurp("cli_det_b.csv"));
    CHECK(slurp("cli_det_a.csv.provenance.csv") == slurp("cli_det_b.csv.provenance.csv"));
}

TEST_CASE("exit codes") {
    SECTION("usage error is 1") {
        CHECK(run_cli("impute").exit_code == 1);
        CHECK(run_cli("no-such-command").exit_code == 1);
    }
    SECTION("malformed row names the line") {
        write_file("cli_bad.csv", "timestamp,value\n0,1\noops\n");
        const auto r = run_cli("impute cli_bad.csv -o cli_never.csv");
        CHECK(r.exit_code == 1);
        const std::string err = slurp("cli_stderr.txt");
        CHECK(err.find("line 3") != std::string::npos);
    }
    SECTION("incomplete imputation is 2") {
        // At r=20% the four-point run is excluded at L=12 and needs a second
        // stage at L=24; the stage cap leaves it unfinished.
        write_gappy_series("cli_in.csv");
        const auto r = run_cli("impute cli_in.csv -o cli_partial.csv --seed 5 "
                               "--imputer linear --base-length 12 --rate-threshold 20 "
                               "--max-stages 1");
        CHECK(r.exit_code == 2);
        // The partial file still exists with the stage-1 points filled.
        const std::string prov = slurp("cli_partial.csv.provenance.csv");
        CHECK(prov.find("imputed,1") != std::string::npos);
        CHECK(prov.find("missing") != std::string::npos);
    }
}

TEST_CASE("simulate then evaluate round trip") {
    write_gappy_series("cli_full.csv");
    REQUIRE(run_cli("impute cli_full.csv -o cli_complete.csv --seed 3 --imputer linear "
                    "--rate-threshold 40 --base-length 12")
                .exit_code == 0);

    const auto sim = run_cli("simulate cli_complete.csv -o cli_masked.csv "
                             "--truth cli_truth.csv --plan cli_plan.csv "
                             "--rate 0.2 --mean-gap-len 6 --seed 9");
    CHECK(sim.exit_code == 0);
    CHECK(sim.output.find("removed") != std::string::npos);
    CHECK(slurp("cli_plan.csv").find("start,length") == 0);

    REQUIRE(run_cli("impute cli_masked.csv -o cli_reimputed.csv --seed 3 --imputer linear "
                    "--rate-threshold 40 --base-length 12")
                .exit_code == 0);

    const auto eval = run_cli("evaluate cli_truth.csv cli_reimputed.csv");
    CHECK(eval.exit_code == 0);
    CHECK(eval.output.find("mse: ") != std::string::npos);
    CHECK(eval.output.find("global_siv: ") != std::string::npos);
    CHECK(eval.output.find("n/a (no paired truth)") == std::string::npos);

    SECTION("rate 0 is a passthrough") {
        const auto zero = run_cli("simulate cli_complete.csv -o cli_zero.csv "
                                  "--truth cli_zero_truth.csv --rate 0 --seed 9");
        CHECK(zero.exit_code == 0);
        CHECK(slurp("cli_zero.csv") == slurp("cli_complete.csv"));
        CHECK(slurp("cli_zero_truth.csv") == "timestamp,value\n");
    }
    SECTION("donor transfer preserves the mask") {
        const auto t = run_cli("simulate cli_complete.csv -o cli_donated.csv "
                               "--donor cli_masked.csv --truth cli_donated_truth.csv");
        CHECK(t.exit_code == 0);
        CHECK(slurp("cli_donated.csv") == slurp("cli_masked.csv"));
    }
    SECTION("identity evaluation yields perfect scores") {
        const auto self = run_cli("evaluate cli_truth.csv cli_complete.csv");
        CHECK(self.exit_code == 0);
        CHECK(self.output.find("mse: 0\n") != std::string::npos);
        CHECK(self.output.find("d2: 1\n") != std::string::npos);
        CHECK(self.output.find("r2: 1\n") != std::string::npos);
    }
    SECTION("misaligned timestamps are an error") {
        write_file("cli_misaligned.csv", "timestamp,value\n999999,1.5\n");
        const auto bad = run_cli("evaluate cli_misaligned.csv cli_reimputed.csv");
        CHECK(bad.exit_code == 1);
    }
}

TEST_CASE("experiment subcommand") {
    std::filesystem::remove_all("cli_exp_out");
    write_file("cli_exp.ini",
               "experiment.design = baseline-compare\n"
               "experiment.rate = 0.15\n"
               "experiment.mean_gap_len = 12\n"
               "experiment.methods = mean, linear\n"
               "experiment.seeds = 1\n"
               "experiment.output_dir = cli_exp_out\n"
               "synthetic.length = 600\n"
               "synthetic.period = 24\n"
               "train.epochs = 2\n");
    const auto r = run_cli("experiment cli_exp.ini --seed 21");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("2 cells, 0 failed") != std::string::npos);
    CHECK(slurp("cli_exp_out/baseline_compare.csv").find("rate,method,seed,status,") == 0);
    CHECK(slurp("cli_exp_out/manifest.txt").find("design: baseline-compare") !=
          std::string::npos);
}
