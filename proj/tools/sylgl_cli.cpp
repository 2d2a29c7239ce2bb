#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>
#include <thread>

#include "sylgl/errors.hpp"
#include "sylgl/experiments.hpp"

namespace {

struct CommonArgs {
    std::string spec_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--spec", args.spec_path, "experiment spec file")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override the spec's seed list with a single seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
    cmd->add_option("--threads", args.threads, "worker threads for grid cells (0 = all cores)");
}

sylgl::ExperimentSpec load_spec(const CommonArgs& args, sylgl::ExperimentKind expected,
                                const char* kind_name) {
    sylgl::ExperimentSpec spec = sylgl::parse_experiment_file(args.spec_path);
    if (spec.kind != expected)
        throw sylgl::SpecError(std::string("spec kind does not match the '") + kind_name +
                               "' subcommand");
    if (args.seed_given) spec.seeds = {args.seed};
    return spec;
}

sylgl::RunOptions run_options(const CommonArgs& args) {
    sylgl::RunOptions opts;
    opts.threads = args.threads > 0
                       ? args.threads
                       : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return opts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sylvester-structured graphical lasso: synthetic experiments and fitting"};
    app.require_subcommand(1);

    CommonArgs gen_args, fit_args, sweep_args, mismatch_args, conv_args;
    CLI::App* gen = app.add_subcommand("gen", "sample a synthetic dataset to SYGT files");
    add_common(gen, gen_args);
    CLI::App* fit = app.add_subcommand("fit", "fit a SYGT dataset and write factors/supports");
    add_common(fit, fit_args);
    CLI::App* sweep = app.add_subcommand("sweep", "recovery metrics over a lambda grid");
    add_common(sweep, sweep_args);
    CLI::App* mismatch = app.add_subcommand("mismatch", "MCC under native/KS/KP data generators");
    add_common(mismatch, mismatch_args);
    CLI::App* conv = app.add_subcommand("convergence", "per-sweep optimization/statistical error");
    add_common(conv, conv_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            sylgl::run_gen(load_spec(gen_args, sylgl::ExperimentKind::Gen, "gen"), gen_args.out_dir);
        } else if (fit->parsed()) {
            sylgl::FitReport report = sylgl::run_fit_external(
                load_spec(fit_args, sylgl::ExperimentKind::Fit, "fit"), fit_args.out_dir);
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << "fit: " << report.sweeps << " sweeps, "
                      << (report.converged ? "converged" : "hit max_sweeps") << "\n";
        } else if (sweep->parsed()) {
            auto spec = load_spec(sweep_args, sylgl::ExperimentKind::Sweep, "sweep");
            auto records = sylgl::run_lambda_sweep(spec, sweep_args.out_dir, run_options(sweep_args));
            std::cout << "sweep: " << records.size() << " cells -> " << sweep_args.out_dir
                      << "/sweep.csv\n";
        } else if (mismatch->parsed()) {
            auto spec = load_spec(mismatch_args, sylgl::ExperimentKind::Mismatch, "mismatch");
            auto records =
                sylgl::run_mismatch(spec, mismatch_args.out_dir, run_options(mismatch_args));
            std::cout << "mismatch: " << records.size() << " cells -> " << mismatch_args.out_dir
                      << "/mismatch.csv\n";
        } else if (conv->parsed()) {
            auto spec = load_spec(conv_args, sylgl::ExperimentKind::Convergence, "convergence");
            auto result = sylgl::run_convergence(spec, conv_args.out_dir, run_options(conv_args));
            std::cout << "convergence: " << result.record.sweeps << " sweeps, "
                      << (result.record.converged ? "converged" : "hit max_sweeps") << " -> "
                      << conv_args.out_dir << "/convergence.csv\n";
        }
    } catch (const sylgl::SpecError& e) {
        std::cerr << "spec error: " << e.what() << "\n";
        return 2;
    } catch (const sylgl::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const sylgl::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
