#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "sylgl/errors.hpp"
#include "sylgl/experiments.hpp"
#include "sylgl/tensor_io.hpp"

using namespace sylgl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::stringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("sylgl_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// header + rows, every row with the header's column count, numeric cells.
void check_csv_schema(const std::string& text, int cols) {
    std::istringstream is(text);
    std::string line;
    REQUIRE(std::getline(is, line));
    int header_cols = 1;
    for (char c : line) header_cols += (c == ',');
    CHECK(header_cols == cols);
    int rows = 0;
    while (std::getline(is, line)) {
        REQUIRE(!line.empty());
        ++rows;
        int n = 1;
        for (char c : line) n += (c == ',');
        CHECK(n == cols);
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            REQUIRE(!cell.empty());
            if (cell == "-inf" || cell == "inf") continue;
            char* end = nullptr;
            std::strtod(cell.c_str(), &end);
            CHECK(end == cell.c_str() + cell.size());
        }
    }
    CHECK(rows > 0);
}

const std::string kSweepSpec =
    "kind = sweep\n"
    "modes = 2\n"
    "mode1.graph = erdos_renyi\n"
    "mode1.size = 6\n"
    "mode1.edges = 5\n"
    "mode2.graph = ar1\n"
    "mode2.size = 5\n"
    "mode2.rho = 0.6\n"
    "n = 8\n"
    "lambdas = 0.05, 0.2\n"
    "seeds = 1, 2\n";

}  // namespace

TEST_CASE("experiment parser accepts a full sweep spec") {
    ExperimentSpec spec = parse_experiment_text(kSweepSpec);
    CHECK(spec.kind == ExperimentKind::Sweep);
    REQUIRE(spec.modes.size() == 2);
    CHECK(spec.modes[0].kind == GraphKind::ErdosRenyi);
    CHECK(spec.modes[0].edge_count == 5);
    CHECK(spec.modes[0].seed == 1001);  // default truth seed per mode
    CHECK(spec.modes[1].kind == GraphKind::Ar1);
    CHECK(spec.modes[1].rho == 0.6);
    CHECK(spec.n == 8);
    CHECK(spec.lambdas == std::vector<double>{0.05, 0.2});
    CHECK(spec.seeds == std::vector<std::uint64_t>{1, 2});
    CHECK(spec.tol == 1e-6);
    CHECK(spec.max_sweeps == 500);
    CHECK(spec.spec_hash != 0);
}

TEST_CASE("experiment parser rejects unknown and duplicate keys") {
    CHECK_THROWS_AS(parse_experiment_text(kSweepSpec + "bogus = 1\n"), SpecError);
    CHECK_THROWS_AS(parse_experiment_text(kSweepSpec + "n = 9\n"), SpecError);
    // keys that belong to another kind are unknown here
    CHECK_THROWS_AS(parse_experiment_text(kSweepSpec + "generator = ks\n"), SpecError);
    // extra mode parameters beyond the graph's needs are unknown
    CHECK_THROWS_AS(parse_experiment_text(kSweepSpec + "mode1.rho = 0.5\n"), SpecError);
    CHECK_THROWS_AS(parse_experiment_text(kSweepSpec + "mode3.size = 4\n"), SpecError);
}

TEST_CASE("experiment parser validates values") {
    CHECK_THROWS_AS(parse_experiment_text("kind = nonsense\n"), SpecError);
    CHECK_THROWS_AS(parse_experiment_text("kind = sweep\nmodes = 0\n"), SpecError);
    std::string base =
        "kind = convergence\nmodes = 1\nmode1.graph = ar1\nmode1.size = 4\nmode1.rho = 0.5\nn = 4\n";
    CHECK_THROWS_AS(parse_experiment_text(base), SpecError);  // missing lambda
    CHECK_NOTHROW(parse_experiment_text(base + "lambda = 0.1\n"));
    CHECK_THROWS_AS(parse_experiment_text(base + "lambda = -0.1\n"), SpecError);
    CHECK_THROWS_AS(parse_experiment_text(base + "lambda = 0.1\ntol = 0\n"), SpecError);
}

TEST_CASE("lambda grids are log spaced") {
    std::string spec_text = kSweepSpec;
    spec_text.replace(spec_text.find("lambdas = 0.05, 0.2"), std::string("lambdas = 0.05, 0.2").size(),
                      "lambda_grid = 0.01:1:5");
    ExperimentSpec spec = parse_experiment_text(spec_text);
    REQUIRE(spec.lambdas.size() == 5);
    CHECK(spec.lambdas.front() == doctest::Approx(0.01));
    CHECK(spec.lambdas.back() == doctest::Approx(1.0));
    for (std::size_t i = 1; i < 5; ++i)
        CHECK(spec.lambdas[i] / spec.lambdas[i - 1] ==
              doctest::Approx(spec.lambdas[1] / spec.lambdas[0]).epsilon(1e-12));
}

TEST_CASE("gen writes a reloadable dataset equal to an in-memory draw") {
    const fs::path dir = fresh_dir("gen");
    ExperimentSpec spec = parse_experiment_text(
        "kind = gen\n"
        "modes = 2\n"
        "mode1.graph = ar1\nmode1.size = 3\nmode1.rho = 0.5\n"
        "mode2.graph = ar1\nmode2.size = 2\nmode2.rho = 0.4\n"
        "n = 4\nseeds = 11\n");
    run_gen(spec, dir.string());

    DenseTensor stored = read_sygt_file((dir / "dataset.sygt").string());
    FactorList truth;
    truth.factors.push_back(gen_ar1(3, 0.5));
    truth.factors.push_back(gen_ar1(2, 0.4));
    Dataset fresh = sample_sylvester(truth, 4, 11);
    REQUIRE(stored.shape() == fresh.data.shape());
    for (std::size_t i = 0; i < stored.size(); ++i) CHECK(stored[i] == fresh.data[i]);

    DenseTensor t1 = read_sygt_file((dir / "truth_mode1.sygt").string());
    REQUIRE(t1.shape() == std::vector<int>{3, 3});
    CHECK(t1[0] == truth.factors[0](0, 0));
}

TEST_CASE("fit_external reproduces the in-memory fit bitwise") {
    const fs::path dir = fresh_dir("fitext");
    ExperimentSpec gen_spec = parse_experiment_text(
        "kind = gen\n"
        "modes = 2\n"
        "mode1.graph = erdos_renyi\nmode1.size = 5\nmode1.edges = 4\n"
        "mode2.graph = ar1\nmode2.size = 4\nmode2.rho = 0.6\n"
        "n = 6\nseeds = 3\n");
    run_gen(gen_spec, dir.string());

    ExperimentSpec fit_spec = parse_experiment_text(
        "kind = fit\n"
        "data = " + (dir / "dataset.sygt").string() + "\n" +
        "lambda = 0.07\n"
        "sparsity = 0.4\n");
    FitReport from_cli = run_fit_external(fit_spec, dir.string());

    Standardized sd = standardize(Dataset::from_tensor(read_sygt_file((dir / "dataset.sygt").string())));
    SolverConfig cfg;
    cfg.lambdas = {0.07, 0.07};
    FitReport direct = fit(sd.data, cfg);
    for (int k = 0; k < 2; ++k)
        CHECK((from_cli.factors.offdiag[static_cast<std::size_t>(k)] -
               direct.factors.offdiag[static_cast<std::size_t>(k)])
                  .lpNorm<Eigen::Infinity>() == 0.0);

    // the stored factor files hold the same values
    DenseTensor f1 = read_sygt_file((dir / "factor_mode1.sygt").string());
    REQUIRE(f1.shape() == std::vector<int>{5, 5});
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(f1[static_cast<std::size_t>(i) + 5 * static_cast<std::size_t>(j)] ==
                  direct.factors.offdiag[0](i, j));

    check_csv_schema(slurp(dir / "support_mode1.csv"), 2);
    check_csv_schema(slurp(dir / "fit_report.csv"), 3);

    // support CSV row count matches the sparsity request: ceil(0.4 * 10) = 4
    std::istringstream sup(slurp(dir / "support_mode1.csv"));
    std::string line;
    int rows = -1;  // header
    while (std::getline(sup, line)) ++rows;
    CHECK(rows == 4);
}

TEST_CASE("fit_external reports malformed input with an offset") {
    const fs::path dir = fresh_dir("fitbad");
    std::ofstream bad(dir / "bad.sygt", std::ios::binary);
    bad << "SYGT";
    bad.close();
    ExperimentSpec spec = parse_experiment_text(
        "kind = fit\ndata = " + (dir / "bad.sygt").string() + "\nlambda = 0.1\n");
    CHECK_THROWS_AS(run_fit_external(spec, dir.string()), IoError);
}

TEST_CASE("lambda sweep emits a well-formed CSV, deterministically, threads or not") {
    const fs::path dir1 = fresh_dir("sweep1");
    const fs::path dir2 = fresh_dir("sweep2");
    ExperimentSpec spec = parse_experiment_text(kSweepSpec);
    RunOptions serial;
    serial.threads = 1;
    RunOptions parallel;
    parallel.threads = 2;
    auto rec1 = run_lambda_sweep(spec, dir1.string(), serial);
    auto rec2 = run_lambda_sweep(spec, dir2.string(), parallel);
    REQUIRE(rec1.size() == 4);  // 2 lambdas x 2 seeds
    CHECK(slurp(dir1 / "sweep.csv") == slurp(dir2 / "sweep.csv"));
    check_csv_schema(slurp(dir1 / "sweep.csv"), 6);

    // full-shrinkage endpoint: huge lambda gives FNR 1, FPR 0
    ExperimentSpec big = parse_experiment_text(
        "kind = sweep\n"
        "modes = 1\nmode1.graph = erdos_renyi\nmode1.size = 6\nmode1.edges = 5\n"
        "n = 8\nlambdas = 1000\nseeds = 1\n");
    auto rec = run_lambda_sweep(big, fresh_dir("sweep3").string(), serial);
    REQUIRE(rec.size() == 1);
    CHECK(rec[0].per_mode[0].fnr == 1.0);
    CHECK(rec[0].per_mode[0].fpr == 0.0);
}

TEST_CASE("FPR is empirically non-increasing along the lambda grid") {
    // Coordinate paths are not theoretically monotone, so this is a soft
    // check: WARN does not fail the suite.
    const fs::path dir = fresh_dir("sweepmono");
    ExperimentSpec spec = parse_experiment_text(
        "kind = sweep\n"
        "modes = 2\n"
        "mode1.graph = erdos_renyi\nmode1.size = 8\nmode1.edges = 6\n"
        "mode2.graph = ar1\nmode2.size = 6\nmode2.rho = 0.6\n"
        "n = 8\nlambda_grid = 0.5:80:10\nseeds = 4\n");
    auto records = run_lambda_sweep(spec, dir.string());
    REQUIRE(records.size() == 10);
    for (int k = 0; k < 2; ++k)
        for (std::size_t i = 1; i < records.size(); ++i)
            WARN(records[i].per_mode[static_cast<std::size_t>(k)].fpr <=
                 records[i - 1].per_mode[static_cast<std::size_t>(k)].fpr);
}

TEST_CASE("mismatch runner covers all three generators") {
    ExperimentSpec base = parse_experiment_text(
        "kind = mismatch\n"
        "modes = 2\n"
        "mode1.graph = erdos_renyi\nmode1.size = 5\nmode1.edges = 4\n"
        "mode2.graph = erdos_renyi\nmode2.size = 4\nmode2.edges = 3\n"
        "n = 6\nlambdas = 0.05, 0.3\nseeds = 2\ngenerator = native\n");
    for (auto g : {MismatchGenerator::Native, MismatchGenerator::Ks, MismatchGenerator::Kp}) {
        ExperimentSpec spec = base;
        spec.generator = g;
        const fs::path dir = fresh_dir("mismatch" + std::to_string(static_cast<int>(g)));
        auto recs = run_mismatch(spec, dir.string());
        REQUIRE(recs.size() == 2);
        for (const auto& r : recs)
            for (const auto& mm : r.per_mode) {
                CHECK(mm.mcc >= -1.0);
                CHECK(mm.mcc <= 1.0);
            }
        check_csv_schema(slurp(dir / "mismatch.csv"), 4);
    }
}

TEST_CASE("convergence runner: traces, schema, and the zero-edge truth case") {
    const fs::path dir = fresh_dir("conv");
    ExperimentSpec spec = parse_experiment_text(
        "kind = convergence\n"
        "modes = 2\n"
        "mode1.graph = ar1\nmode1.size = 4\nmode1.rho = 0.6\n"
        "mode2.graph = ar1\nmode2.size = 3\nmode2.rho = 0.5\n"
        "n = 20\nlambda = 0.05\nseeds = 7\n");
    ConvergenceResult res = run_convergence(spec, dir.string());
    REQUIRE(res.record.sweeps >= 1);
    REQUIRE(res.traces.stat_err.size() == 2);
    REQUIRE(res.traces.stat_err[0].size() == static_cast<std::size_t>(res.record.sweeps));
    // the final iterate has zero optimization error by definition
    CHECK(res.traces.opt_err[0].back() == 0.0);
    CHECK(res.traces.opt_err[1].back() == 0.0);
    check_csv_schema(slurp(dir / "convergence.csv"), 4);
    check_csv_schema(slurp(dir / "convergence_w.csv"), 3);

    // the optimization-error tail is linear on the log scale: least-squares
    // slope over the last 5 nonzero sweeps is negative
    for (int k = 0; k < 2; ++k) {
        std::vector<double> tail;
        for (double e : res.traces.opt_err[static_cast<std::size_t>(k)])
            if (e > 0.0) tail.push_back(std::log(e));
        REQUIRE(tail.size() >= 5);
        tail.erase(tail.begin(), tail.end() - 5);
        double sx = 0, sy = 0, sxy = 0, sxx = 0;
        for (int i = 0; i < 5; ++i) {
            sx += i;
            sy += tail[static_cast<std::size_t>(i)];
            sxy += i * tail[static_cast<std::size_t>(i)];
            sxx += i * i;
        }
        const double slope = (5 * sxy - sx * sy) / (5 * sxx - sx * sx);
        CHECK(slope < 0.0);
    }

    // zero-edge truth at a shrinking lambda: off-diagonal stat error is identically 0
    const fs::path dir0 = fresh_dir("conv0");
    ExperimentSpec zero = parse_experiment_text(
        "kind = convergence\n"
        "modes = 1\nmode1.graph = erdos_renyi\nmode1.size = 5\nmode1.edges = 0\n"
        "n = 10\nlambda = 10.0\nseeds = 3\n");
    ConvergenceResult rz = run_convergence(zero, dir0.string());
    for (double e : rz.traces.stat_err[0]) CHECK(e == 0.0);
}

TEST_CASE("CLI binary: exit codes and byte-identical reruns") {
    const char* cli = std::getenv("SYLGL_CLI");
    if (cli == nullptr) {
        MESSAGE("SYLGL_CLI not set; skipping process-level checks");
        return;
    }
    const fs::path dir = fresh_dir("cli");
    const fs::path spec_path = dir / "sweep.spec";
    std::ofstream(spec_path) << kSweepSpec;

    auto run = [&](const std::string& args) {
        const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };

    const fs::path out1 = dir / "out1";
    const fs::path out2 = dir / "out2";
    CHECK(run("sweep --spec " + spec_path.string() + " --out " + out1.string() + " --threads 2") == 0);
    CHECK(run("sweep --spec " + spec_path.string() + " --out " + out2.string() + " --threads 1") == 0);
    CHECK(slurp(out1 / "sweep.csv") == slurp(out2 / "sweep.csv"));

    // spec errors exit 2
    const fs::path bad_spec = dir / "bad.spec";
    std::ofstream(bad_spec) << kSweepSpec << "bogus = 1\n";
    CHECK(run("sweep --spec " + bad_spec.string() + " --out " + (dir / "outbad").string()) == 2);
    // wrong subcommand for the spec kind exits 2
    CHECK(run("mismatch --spec " + spec_path.string() + " --out " + (dir / "outbad2").string()) == 2);

    // --seed restricts the run to a single seed
    const fs::path out_seed = dir / "outseed";
    CHECK(run("sweep --spec " + spec_path.string() + " --out " + out_seed.string() +
              " --seed 42") == 0);
    {
        std::istringstream csv(slurp(out_seed / "sweep.csv"));
        std::string line;
        std::getline(csv, line);  // header
        int rows = 0;
        while (std::getline(csv, line)) {
            ++rows;
            CHECK(line.find(",42,") != std::string::npos);
        }
        CHECK(rows == 4);  // 2 lambdas x 1 seed x 2 modes
    }
}

TEST_CASE("CLI binary: every subcommand runs end to end") {
    const char* cli = std::getenv("SYLGL_CLI");
    if (cli == nullptr) {
        MESSAGE("SYLGL_CLI not set; skipping process-level checks");
        return;
    }
    const fs::path dir = fresh_dir("cli_all");
    auto run = [&](const std::string& args) {
        const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    auto write_spec = [&](const char* name, const std::string& body) {
        const fs::path p = dir / name;
        std::ofstream(p) << body;
        return p.string();
    };

    const std::string modes_block =
        "modes = 2\n"
        "mode1.graph = ar1\nmode1.size = 4\nmode1.rho = 0.6\n"
        "mode2.graph = erdos_renyi\nmode2.size = 5\nmode2.edges = 4\n"
        "n = 6\nseeds = 2\n";

    const std::string gen_spec = write_spec("gen.spec", "kind = gen\n" + modes_block);
    CHECK(run("gen --spec " + gen_spec + " --out " + (dir / "gen").string()) == 0);
    CHECK(fs::exists(dir / "gen" / "dataset.sygt"));

    const std::string fit_spec = write_spec(
        "fit.spec",
        "kind = fit\ndata = " + (dir / "gen" / "dataset.sygt").string() + "\nlambda = 0.1\n");
    CHECK(run("fit --spec " + fit_spec + " --out " + (dir / "fit").string()) == 0);
    CHECK(fs::exists(dir / "fit" / "factor_mode2.sygt"));
    CHECK(fs::exists(dir / "fit" / "w.sygt"));

    const std::string conv_spec =
        write_spec("conv.spec", "kind = convergence\n" + modes_block + "lambda = 0.3\n");
    CHECK(run("convergence --spec " + conv_spec + " --out " + (dir / "conv").string()) == 0);
    CHECK(fs::exists(dir / "conv" / "convergence.csv"));
    CHECK(fs::exists(dir / "conv" / "convergence_w.csv"));

    const std::string mm_spec = write_spec(
        "mm.spec", "kind = mismatch\n" + modes_block + "lambdas = 0.2, 2\ngenerator = kp\n");
    CHECK(run("mismatch --spec " + mm_spec + " --out " + (dir / "mm").string()) == 0);
    CHECK(fs::exists(dir / "mm" / "mismatch.csv"));
}
