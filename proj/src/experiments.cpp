#include "sylgl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "sylgl/errors.hpp"
#include "sylgl/metrics.hpp"
#include "sylgl/tensor_io.hpp"

namespace sylgl {

namespace {

constexpr double kSupportEps = 1e-8;

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

/// Key-value bag with consume-as-you-go semantics; anything left at the end
/// is an unknown key.
class KeyBag {
public:
    void insert(const std::string& key, const std::string& value, int line) {
        if (entries_.count(key))
            throw SpecError("duplicate key '" + key + "' on line " + std::to_string(line));
        entries_[key] = value;
    }

    std::optional<std::string> take(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        std::string v = it->second;
        entries_.erase(it);
        return v;
    }

    std::string require(const std::string& key) {
        auto v = take(key);
        if (!v) throw SpecError("missing required key '" + key + "'");
        return *v;
    }

    void expect_empty() const {
        if (entries_.empty()) return;
        std::string keys;
        for (const auto& [k, v] : entries_) {
            if (!keys.empty()) keys += ", ";
            keys += k;
        }
        throw SpecError("unknown key(s) for this experiment kind: " + keys);
    }

private:
    std::map<std::string, std::string> entries_;
};

long parse_long(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trail");
        return v;
    } catch (const std::exception&) {
        throw SpecError("key '" + key + "': expected an integer, got '" + s + "'");
    }
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size() || s[0] == '-') throw std::invalid_argument("trail");
        return v;
    } catch (const std::exception&) {
        throw SpecError("key '" + key + "': expected an unsigned integer, got '" + s + "'");
    }
}

double parse_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trail");
        return v;
    } catch (const std::exception&) {
        throw SpecError("key '" + key + "': expected a number, got '" + s + "'");
    }
}

GraphSpec parse_mode(KeyBag& bag, int j) {
    const std::string prefix = "mode" + std::to_string(j) + ".";
    GraphSpec g;
    const std::string graph = bag.require(prefix + "graph");
    g.mode_size = static_cast<int>(parse_long(bag.require(prefix + "size"), prefix + "size"));
    if (graph == "ar1") {
        g.kind = GraphKind::Ar1;
        g.rho = parse_double(bag.require(prefix + "rho"), prefix + "rho");
    } else if (graph == "star_block") {
        g.kind = GraphKind::StarBlock;
        g.rho = parse_double(bag.require(prefix + "rho"), prefix + "rho");
        g.block_size = static_cast<int>(parse_long(bag.require(prefix + "block"), prefix + "block"));
    } else if (graph == "erdos_renyi") {
        g.kind = GraphKind::ErdosRenyi;
        g.edge_count = static_cast<int>(parse_long(bag.require(prefix + "edges"), prefix + "edges"));
        auto s = bag.take(prefix + "seed");
        g.seed = s ? parse_u64(*s, prefix + "seed") : static_cast<std::uint64_t>(1000 + j);
    } else {
        throw SpecError(prefix + "graph: unknown graph kind '" + graph +
                        "' (use ar1, star_block or erdos_renyi)");
    }
    return g;
}

std::vector<double> parse_lambda_values(KeyBag& bag) {
    auto list = bag.take("lambdas");
    auto grid = bag.take("lambda_grid");
    if (list && grid) throw SpecError("give either 'lambdas' or 'lambda_grid', not both");
    std::vector<double> out;
    if (list) {
        for (const auto& tok : split(*list, ',')) out.push_back(parse_double(tok, "lambdas"));
    } else if (grid) {
        const auto parts = split(*grid, ':');
        if (parts.size() != 3) throw SpecError("lambda_grid: expected lo:hi:count");
        const double lo = parse_double(parts[0], "lambda_grid");
        const double hi = parse_double(parts[1], "lambda_grid");
        const long count = parse_long(parts[2], "lambda_grid");
        if (!(lo > 0.0) || !(hi >= lo) || count < 1)
            throw SpecError("lambda_grid: need 0 < lo <= hi and count >= 1");
        if (count == 1) {
            out.push_back(lo);
        } else {
            const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(count - 1);
            for (long i = 0; i < count; ++i)
                out.push_back(std::exp(std::log(lo) + step * static_cast<double>(i)));
        }
    } else {
        throw SpecError("missing 'lambdas' or 'lambda_grid'");
    }
    if (out.empty()) throw SpecError("lambda grid must be nonempty");
    for (double l : out)
        if (l < 0.0) throw SpecError("lambda values must be nonnegative");
    return out;
}

void parse_common_synthetic(KeyBag& bag, ExperimentSpec& spec) {
    const int k = static_cast<int>(parse_long(bag.require("modes"), "modes"));
    if (k < 1) throw SpecError("modes must be >= 1");
    for (int j = 1; j <= k; ++j) spec.modes.push_back(parse_mode(bag, j));
    spec.n = static_cast<int>(parse_long(bag.require("n"), "n"));
    if (spec.n < 1) throw SpecError("n must be >= 1");
    if (auto s = bag.take("seeds")) {
        for (const auto& tok : split(*s, ',')) spec.seeds.push_back(parse_u64(tok, "seeds"));
    } else {
        spec.seeds.push_back(1);
    }
    if (spec.seeds.empty()) throw SpecError("seeds must be nonempty");
}

void parse_solver_keys(KeyBag& bag, ExperimentSpec& spec) {
    if (auto s = bag.take("tol")) spec.tol = parse_double(*s, "tol");
    if (auto s = bag.take("max_sweeps"))
        spec.max_sweeps = static_cast<int>(parse_long(*s, "max_sweeps"));
    if (!(spec.tol > 0.0)) throw SpecError("tol must be positive");
    if (spec.max_sweeps < 1) throw SpecError("max_sweeps must be >= 1");
}

}  // namespace

ExperimentSpec parse_experiment_text(const std::string& text) {
    KeyBag bag;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw SpecError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty())
            throw SpecError("line " + std::to_string(lineno) + ": empty key or value");
        bag.insert(key, value, lineno);
    }

    ExperimentSpec spec;
    spec.spec_hash = fnv1a(text);
    const std::string kind = bag.require("kind");
    if (kind == "gen") {
        spec.kind = ExperimentKind::Gen;
        parse_common_synthetic(bag, spec);
    } else if (kind == "convergence") {
        spec.kind = ExperimentKind::Convergence;
        parse_common_synthetic(bag, spec);
        spec.lambdas.push_back(parse_double(bag.require("lambda"), "lambda"));
        if (spec.lambdas[0] < 0.0) throw SpecError("lambda must be nonnegative");
        parse_solver_keys(bag, spec);
    } else if (kind == "sweep") {
        spec.kind = ExperimentKind::Sweep;
        parse_common_synthetic(bag, spec);
        spec.lambdas = parse_lambda_values(bag);
        parse_solver_keys(bag, spec);
    } else if (kind == "mismatch") {
        spec.kind = ExperimentKind::Mismatch;
        parse_common_synthetic(bag, spec);
        spec.lambdas = parse_lambda_values(bag);
        parse_solver_keys(bag, spec);
        const std::string g = bag.require("generator");
        if (g == "native")
            spec.generator = MismatchGenerator::Native;
        else if (g == "ks")
            spec.generator = MismatchGenerator::Ks;
        else if (g == "kp")
            spec.generator = MismatchGenerator::Kp;
        else
            throw SpecError("generator: expected native, ks or kp, got '" + g + "'");
    } else if (kind == "fit") {
        spec.kind = ExperimentKind::Fit;
        spec.data_path = bag.require("data");
        spec.lambdas.push_back(parse_double(bag.require("lambda"), "lambda"));
        if (spec.lambdas[0] < 0.0) throw SpecError("lambda must be nonnegative");
        if (auto s = bag.take("sparsity")) spec.sparsity = parse_double(*s, "sparsity");
        if (spec.sparsity < 0.0 || spec.sparsity > 1.0)
            throw SpecError("sparsity must be in [0,1]");
        parse_solver_keys(bag, spec);
    } else {
        throw SpecError("kind: expected gen, fit, sweep, mismatch or convergence, got '" + kind +
                        "'");
    }
    bag.expect_empty();
    return spec;
}

ExperimentSpec parse_experiment_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw SpecError("cannot open experiment spec: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_experiment_text(buf.str());
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

namespace fs = std::filesystem;

class CsvFile {
public:
    CsvFile(const std::string& path, const std::string& header) : os_(path, std::ios::binary) {
        if (!os_) throw IoError("cannot open CSV for writing: " + path, 0);
        os_ << header << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ",";
            os_ << cells[i];
        }
        os_ << "\n";
    }

private:
    std::ofstream os_;
};

FactorList build_truth(const ExperimentSpec& spec) {
    FactorList truth;
    for (const auto& g : spec.modes) truth.factors.push_back(make_factor(g));
    return truth;
}

SolverConfig solver_config(const ExperimentSpec& spec, double lambda, int order) {
    SolverConfig cfg;
    cfg.lambdas.assign(static_cast<std::size_t>(order), lambda);
    cfg.tol = spec.tol;
    cfg.max_sweeps = spec.max_sweeps;
    return cfg;
}

void ensure_dir(const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message(), 0);
}

Eigen::Map<const Eigen::MatrixXd> as_column(const DenseTensor& t) {
    return Eigen::Map<const Eigen::MatrixXd>(t.data(), static_cast<Eigen::Index>(t.size()), 1);
}

double log_or_neg_inf(double ratio) {
    return ratio > 0.0 ? std::log(ratio) : -std::numeric_limits<double>::infinity();
}

void parallel_cells(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= count) break;
                    body(i);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct GridCell {
    double lambda = 0.0;
    std::uint64_t seed = 0;
};

std::vector<GridCell> make_grid(const ExperimentSpec& spec) {
    std::vector<GridCell> cells;
    for (double l : spec.lambdas)
        for (std::uint64_t s : spec.seeds) cells.push_back({l, s});
    return cells;
}

}  // namespace

ConvergenceResult run_convergence(const ExperimentSpec& spec, const std::string& out_dir,
                                  const RunOptions&) {
    if (spec.kind != ExperimentKind::Convergence)
        throw SpecError("run_convergence: spec kind is not 'convergence'");
    ensure_dir(out_dir);

    const auto t0 = std::chrono::steady_clock::now();
    FactorList truth = build_truth(spec);
    const FactorSet truth_set = FactorSet::from_factors(truth);
    const std::uint64_t seed = spec.seeds.front();
    Standardized std_data = standardize(sample_sylvester(truth, spec.n, seed));

    std::vector<FactorSet> snapshots;
    FitOptions opts;
    opts.on_sweep = [&](int, const FactorSet& s) { snapshots.push_back(s); };
    SolverConfig cfg = solver_config(spec, spec.lambdas.front(), truth.order());
    FitReport report = fit(std_data.data, cfg, opts);

    const int order = truth.order();
    const FactorSet& final_set = report.factors;
    ConvergenceTraces traces;
    traces.stat_err.assign(static_cast<std::size_t>(order), {});
    traces.opt_err.assign(static_cast<std::size_t>(order), {});
    for (const auto& snap : snapshots) {
        for (int k = 0; k < order; ++k) {
            const auto& est = snap.offdiag[static_cast<std::size_t>(k)];
            traces.stat_err[static_cast<std::size_t>(k)].push_back(
                rel_frob_error(est, truth_set.offdiag[static_cast<std::size_t>(k)]));
            traces.opt_err[static_cast<std::size_t>(k)].push_back(
                rel_frob_error(est, final_set.offdiag[static_cast<std::size_t>(k)]));
        }
        traces.w_stat.push_back(rel_frob_error(as_column(snap.w), as_column(truth_set.w)));
        traces.w_opt.push_back(rel_frob_error(as_column(snap.w), as_column(final_set.w)));
    }

    CsvFile csv(out_dir + "/convergence.csv", "sweep,mode,stat_err,opt_err");
    for (std::size_t t = 0; t < snapshots.size(); ++t)
        for (int k = 0; k < order; ++k)
            csv.row({std::to_string(t + 1), std::to_string(k + 1),
                     format_double(log_or_neg_inf(traces.stat_err[static_cast<std::size_t>(k)][t])),
                     format_double(log_or_neg_inf(traces.opt_err[static_cast<std::size_t>(k)][t]))});
    CsvFile csv_w(out_dir + "/convergence_w.csv", "sweep,stat_err,opt_err");
    for (std::size_t t = 0; t < snapshots.size(); ++t)
        csv_w.row({std::to_string(t + 1), format_double(log_or_neg_inf(traces.w_stat[t])),
                   format_double(log_or_neg_inf(traces.w_opt[t]))});

    ConvergenceResult result;
    result.record.spec_hash = spec.spec_hash;
    result.record.seed = seed;
    result.record.lambda = spec.lambdas.front();
    result.record.objective_trace = report.objective_trace;
    result.record.delta_trace = report.delta_trace;
    result.record.sweeps = report.sweeps;
    result.record.converged = report.converged;
    result.record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.traces = std::move(traces);
    return result;
}

namespace {

std::vector<SupportMatrix> truth_supports(const FactorList& truth) {
    std::vector<SupportMatrix> out;
    const FactorSet set = FactorSet::from_factors(truth);
    out.reserve(set.offdiag.size());
    for (const auto& off : set.offdiag) out.push_back(support_of(off, kSupportEps));
    return out;
}

/// Shared grid loop of the sweep and mismatch experiments; `sampler` builds
/// the dataset for one seed. Each seed's data is drawn once and shared by
/// every lambda cell.
std::vector<RunRecord> run_grid(const ExperimentSpec& spec, const RunOptions& opts,
                                const FactorList& truth,
                                const std::function<Dataset(std::uint64_t)>& sampler) {
    const std::vector<SupportMatrix> supports = truth_supports(truth);
    const std::vector<GridCell> cells = make_grid(spec);
    std::vector<RunRecord> records(cells.size());

    std::map<std::uint64_t, Dataset> data_by_seed;
    for (std::uint64_t seed : spec.seeds)
        if (!data_by_seed.count(seed)) data_by_seed.emplace(seed, sampler(seed));

    parallel_cells(cells.size(), opts.threads, [&](std::size_t c) {
        const auto t0 = std::chrono::steady_clock::now();
        const GridCell& cell = cells[c];
        // Single-observation protocols cannot be standardized; they fit the
        // raw draw (the model is zero-mean by construction).
        const Dataset& raw = data_by_seed.at(cell.seed);
        const Dataset data = raw.n_obs() >= 2 ? standardize(raw).data : raw;
        SolverConfig cfg = solver_config(spec, cell.lambda, truth.order());
        FitReport report = fit(data, cfg);

        RunRecord rec;
        rec.spec_hash = spec.spec_hash;
        rec.seed = cell.seed;
        rec.lambda = cell.lambda;
        rec.sweeps = report.sweeps;
        rec.converged = report.converged;
        rec.objective_trace = report.objective_trace;
        rec.delta_trace = report.delta_trace;
        for (int k = 0; k < truth.order(); ++k) {
            const Confusion conf =
                confusion(support_of(report.factors.offdiag[static_cast<std::size_t>(k)], kSupportEps),
                          supports[static_cast<std::size_t>(k)]);
            const Rates r = fpr_fnr(conf);
            rec.per_mode.push_back({r.fpr, r.fnr, mcc(conf)});
        }
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        records[c] = std::move(rec);
    });
    return records;
}

}  // namespace

std::vector<RunRecord> run_lambda_sweep(const ExperimentSpec& spec, const std::string& out_dir,
                                        const RunOptions& opts) {
    if (spec.kind != ExperimentKind::Sweep)
        throw SpecError("run_lambda_sweep: spec kind is not 'sweep'");
    ensure_dir(out_dir);
    FactorList truth = build_truth(spec);
    auto records = run_grid(spec, opts, truth, [&](std::uint64_t seed) {
        return sample_sylvester(truth, spec.n, seed);
    });

    CsvFile csv(out_dir + "/sweep.csv", "lambda,seed,mode,fpr,fnr,mcc");
    for (const auto& rec : records)
        for (std::size_t k = 0; k < rec.per_mode.size(); ++k)
            csv.row({format_double(rec.lambda), std::to_string(rec.seed), std::to_string(k + 1),
                     format_double(rec.per_mode[k].fpr), format_double(rec.per_mode[k].fnr),
                     format_double(rec.per_mode[k].mcc)});
    return records;
}

std::vector<RunRecord> run_mismatch(const ExperimentSpec& spec, const std::string& out_dir,
                                    const RunOptions& opts) {
    if (spec.kind != ExperimentKind::Mismatch)
        throw SpecError("run_mismatch: spec kind is not 'mismatch'");
    ensure_dir(out_dir);
    FactorList truth = build_truth(spec);

    std::function<Dataset(std::uint64_t)> sampler;
    if (spec.generator == MismatchGenerator::Native) {
        sampler = [&truth, &spec](std::uint64_t seed) {
            return sample_sylvester(truth, spec.n, seed);
        };
    } else {
        // Plain-KS / KP precision matrices on the same factors, dense
        // Cholesky sampling at desk scale; factor once, draw per seed.
        auto ps = std::make_shared<PrecisionSampler>(spec.generator == MismatchGenerator::Ks
                                                         ? kron_sum_materialize(truth)
                                                         : kron_prod_materialize(truth));
        auto shape = truth.shape();
        sampler = [ps, shape, &spec](std::uint64_t seed) {
            return ps->draw(shape, spec.n, seed);
        };
    }

    auto records = run_grid(spec, opts, truth, sampler);
    CsvFile csv(out_dir + "/mismatch.csv", "lambda,seed,mode,mcc");
    for (const auto& rec : records)
        for (std::size_t k = 0; k < rec.per_mode.size(); ++k)
            csv.row({format_double(rec.lambda), std::to_string(rec.seed), std::to_string(k + 1),
                     format_double(rec.per_mode[k].mcc)});
    return records;
}

FitReport run_fit_external(const ExperimentSpec& spec, const std::string& out_dir) {
    if (spec.kind != ExperimentKind::Fit) throw SpecError("run_fit_external: spec kind is not 'fit'");
    ensure_dir(out_dir);
    Dataset raw = Dataset::from_tensor(read_sygt_file(spec.data_path));
    Standardized std_data = standardize(raw);
    SolverConfig cfg = solver_config(spec, spec.lambdas.front(), raw.var_order());
    FitReport report = fit(std_data.data, cfg);

    for (int k = 0; k < raw.var_order(); ++k) {
        const auto& psi = report.factors.offdiag[static_cast<std::size_t>(k)];
        const int mk = static_cast<int>(psi.rows());
        DenseTensor mat({mk, mk});
        for (int j = 0; j < mk; ++j)
            for (int i = 0; i < mk; ++i)
                mat[static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * mk] = psi(i, j);
        write_sygt_file(out_dir + "/factor_mode" + std::to_string(k + 1) + ".sygt", mat);

        const SupportMatrix sup = threshold_to_sparsity(psi, spec.sparsity);
        CsvFile csv(out_dir + "/support_mode" + std::to_string(k + 1) + ".csv", "i,j");
        for (int i = 0; i < mk; ++i)
            for (int j = i + 1; j < mk; ++j)
                if (sup.edge(i, j)) csv.row({std::to_string(i + 1), std::to_string(j + 1)});
    }
    write_sygt_file(out_dir + "/w.sygt", report.factors.w);

    CsvFile csv(out_dir + "/fit_report.csv", "sweeps,converged,objective");
    csv.row({std::to_string(report.sweeps), report.converged ? "1" : "0",
             format_double(report.objective_trace.back())});
    return report;
}

void run_gen(const ExperimentSpec& spec, const std::string& out_dir) {
    if (spec.kind != ExperimentKind::Gen) throw SpecError("run_gen: spec kind is not 'gen'");
    ensure_dir(out_dir);
    FactorList truth = build_truth(spec);
    Dataset data = sample_sylvester(truth, spec.n, spec.seeds.front());
    write_sygt_file(out_dir + "/dataset.sygt", data.data);
    for (int k = 0; k < truth.order(); ++k) {
        const auto& psi = truth.factors[static_cast<std::size_t>(k)].mat();
        const int mk = static_cast<int>(psi.rows());
        DenseTensor mat({mk, mk});
        for (int j = 0; j < mk; ++j)
            for (int i = 0; i < mk; ++i)
                mat[static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * mk] = psi(i, j);
        write_sygt_file(out_dir + "/truth_mode" + std::to_string(k + 1) + ".sygt", mat);
    }
}

}  // namespace sylgl
