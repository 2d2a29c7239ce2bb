#ifndef SYLGL_EXPERIMENTS_HPP
#define SYLGL_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sylgl/solver.hpp"
#include "sylgl/synth.hpp"

namespace sylgl {

enum class ExperimentKind { Gen, Fit, Sweep, Mismatch, Convergence };
enum class MismatchGenerator { Native, Ks, Kp };

/// Parsed experiment configuration. The on-disk format is a flat key-value
/// text file (`key = value`, `#` comments); unknown keys are errors. See the
/// README for the full grammar.
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::Gen;
    std::vector<GraphSpec> modes;
    int n = 0;
    std::vector<double> lambdas;
    std::vector<std::uint64_t> seeds;
    double tol = 1e-6;
    int max_sweeps = 500;
    MismatchGenerator generator = MismatchGenerator::Native;
    std::string data_path;   // fit
    double sparsity = 0.05;  // fit
    std::uint64_t spec_hash = 0;
};

ExperimentSpec parse_experiment_text(const std::string& text);
ExperimentSpec parse_experiment_file(const std::string& path);

struct ModeMetrics {
    double fpr = 0.0;
    double fnr = 0.0;
    double mcc = 0.0;
};

struct RunRecord {
    std::uint64_t spec_hash = 0;
    std::uint64_t seed = 0;
    double lambda = 0.0;
    std::vector<ModeMetrics> per_mode;
    std::vector<double> objective_trace;
    std::vector<double> delta_trace;
    int sweeps = 0;
    bool converged = false;
    double wall_seconds = 0.0;  // never written to CSV (outputs stay reproducible)
};

struct RunOptions {
    int threads = 1;
};

/// Per-sweep error traces of one fit against the generating truth (stat) and
/// against the final iterate (opt), off-diagonal parts only; the diagonal
/// field w is tracked separately. Values are unlogged ratios.
struct ConvergenceTraces {
    std::vector<std::vector<double>> stat_err;  // [mode][sweep]
    std::vector<std::vector<double>> opt_err;
    std::vector<double> w_stat;
    std::vector<double> w_opt;
};

struct ConvergenceResult {
    RunRecord record;
    ConvergenceTraces traces;
};

/// Generates truth + data, fits once at spec.lambdas[0] with seed
/// spec.seeds[0], writes convergence.csv (sweep, mode, stat_err, opt_err; the
/// logged values) and convergence_w.csv (sweep, stat_err, opt_err).
ConvergenceResult run_convergence(const ExperimentSpec& spec, const std::string& out_dir,
                                  const RunOptions& opts = {});

/// Fits every (lambda, seed) cell against a fixed synthetic truth and writes
/// sweep.csv (lambda, seed, mode, fpr, fnr, mcc).
std::vector<RunRecord> run_lambda_sweep(const ExperimentSpec& spec, const std::string& out_dir,
                                        const RunOptions& opts = {});

/// Same grid protocol, but data can come from the native squared-KS model or
/// from plain-KS / KP precision matrices built on the same factors; writes
/// mismatch.csv (lambda, seed, mode, mcc).
std::vector<RunRecord> run_mismatch(const ExperimentSpec& spec, const std::string& out_dir,
                                    const RunOptions& opts = {});

/// Reads a SYGT dataset (observations in the last mode), standardizes, fits
/// at spec.lambdas[0], writes factor_mode<k>.sygt, w.sygt,
/// support_mode<k>.csv (edges of the sparsity-thresholded factor) and
/// fit_report.csv.
FitReport run_fit_external(const ExperimentSpec& spec, const std::string& out_dir);

/// Samples a synthetic dataset and writes dataset.sygt plus the generating
/// truth_mode<k>.sygt factors.
void run_gen(const ExperimentSpec& spec, const std::string& out_dir);

/// Deterministic double formatting used for every CSV cell (%.17g, so values
/// round-trip exactly).
std::string format_double(double v);

}  // namespace sylgl

#endif
