#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fsbs/fsbs.hpp"
#include "json.hpp"

using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 failure inside the statistical computation,
// 2 usage / I-O / validation errors.
constexpr int kExitComputeError = 1;
constexpr int kExitUsageError = 2;

std::uint64_t ensure_seed(std::optional<std::uint64_t> seed) {
    if (seed) return *seed;
    std::random_device rd;  // reports always embed the realized seed
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

fsbs::DepthMode depth_from_name(const std::string& name) {
    if (name == "paper") return fsbs::DepthMode::paper;
    if (name == "full") return fsbs::DepthMode::full;
    throw std::invalid_argument("unknown depth mode: " + name);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string derive_truth_path(const std::string& csv_path) {
    const std::string suffix = ".csv";
    if (csv_path.size() > suffix.size() &&
        csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return csv_path.substr(0, csv_path.size() - suffix.size()) + ".truth.json";
    return csv_path + ".truth.json";
}

struct ScenarioFlags {
    std::string scenario;
    double basis_scale = fsbs::basis_scale_default();
    bool verbatim_basis = false;
    double mean_period = 1.0;
    bool s5_negative_exponent = false;

    fsbs::ScenarioSpec build() const {
        fsbs::ScenarioOptions opt;
        opt.basis_scale = verbatim_basis ? fsbs::basis_scale_verbatim() : basis_scale;
        opt.mean_period = mean_period;
        opt.s5_negative_exponent = s5_negative_exponent;
        return fsbs::scenario_spec(fsbs::scenario_from_name(scenario), opt);
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--scenario", scenario, "scenario id (S1..S5)")->required();
        cmd->add_option("--basis-scale", basis_scale,
                        "per-coordinate factor of the sinusoidal noise basis");
        cmd->add_flag("--verbatim-basis", verbatim_basis,
                      "use the literal pi/sqrt(2) basis factor instead of its reciprocal");
        cmd->add_option("--mean-period", mean_period,
                        "argument scaling of the sin/cos regime means");
        cmd->add_flag("--s5-negative-exponent", s5_negative_exponent,
                      "flip the S5 operator-kernel exponent to exp(-(v^2+u^2)/2)");
    }
};

json summary_to_json(const fsbs::SummaryRow& row) {
    return json{{"p_under", row.p_under},
                {"p_exact", row.p_exact},
                {"p_over", row.p_over},
                {"mean_abs_kdiff", row.mean_abs_kdiff},
                {"mean_hausdorff", row.mean_hausdorff},
                {"sd_abs_kdiff", row.sd_abs_kdiff},
                {"sd_hausdorff", row.sd_hausdorff}};
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    ScenarioFlags flags;
    std::optional<std::uint64_t> seed;
    std::string output;
    std::string truth;
};

int run_simulate(const SimulateArgs& a) {
    fsbs::ScenarioSpec spec;
    try {
        spec = a.flags.build();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsageError;
    }
    const std::uint64_t seed = ensure_seed(a.seed);
    fsbs::SimulationOutput sim;
    try {
        sim = fsbs::generate_scenario(spec, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitComputeError;
    }
    try {
        fsbs::write_panel_file(a.output, sim.panel);
        json truth{{"true_change_points", sim.true_change_points},
                   {"scenario", sim.scenario},
                   {"seed", sim.seed},
                   {"T", sim.panel.T}};
        const std::string truth_path = a.truth.empty() ? derive_truth_path(a.output) : a.truth;
        write_text_file(truth_path, truth.dump() + "\n");
        std::cout << "wrote " << a.output << " and " << truth_path << " (seed " << seed << ")\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsageError;
    }
    return 0;
}

// ------------------------------------------------------------------ detect

struct DetectArgs {
    std::string input;
    int dim = 1;
    std::optional<double> h;
    std::optional<double> hbar;
    std::optional<double> tau;
    std::string kernel = "gaussian";
    std::string depth = "full";
    double ck = 4.0;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool auto_tune = false;
    bool rescale = false;
    bool plugin = false;
    std::string output;
};

int run_detect(const DetectArgs& a) {
    fsbs::FunctionalPanel panel;
    fsbs::KernelFamily family;
    fsbs::DepthMode depth;
    try {
        family = fsbs::kernel_family_from_name(a.kernel);
        depth = depth_from_name(a.depth);
        panel = fsbs::load_panel_file(a.input, a.dim, a.rescale);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsageError;
    }
    const std::uint64_t seed = ensure_seed(a.seed);

    fsbs::DetectionResult result;
    try {
        double h_use = a.h.value_or(0.0);
        double tau_use = a.tau.value_or(0.0);
        double hbar_use = a.hbar.value_or(0.0);
        if (a.plugin && !a.hbar) hbar_use = fsbs::plugin_hbar(panel);

        const bool need_tuning = a.auto_tune || !a.h || !a.tau;
        if (need_tuning) {
            const fsbs::TuningGrid grid = fsbs::candidate_grid(panel.T, panel.n, panel.d);
            const fsbs::CvResult cv = fsbs::cross_validate(panel, grid, depth, seed, hbar_use,
                                                           a.ck, family, 1e-3, a.threads);
            if (!a.h) h_use = cv.h;
            if (!a.tau) tau_use = cv.tau;
            if (hbar_use <= 0.0) hbar_use = a.h ? h_use : cv.hbar;
        } else if (hbar_use <= 0.0) {
            hbar_use = h_use;
        }

        fsbs::FsbsParams params;
        params.h = h_use;
        params.hbar = hbar_use;
        params.tau = tau_use;
        params.kernel = {family, panel.d};
        params.depth_mode = depth;
        params.ck = a.ck;
        params.rng_seed = seed;
        const fsbs::SeededIntervalSet intervals = fsbs::generate_seeded_intervals(panel.T, depth, a.ck);
        result = fsbs::detect(panel, params, intervals, a.threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitComputeError;
    }

    std::cout << "h=" << result.params_used.h << " hbar=" << result.params_used.hbar
              << " tau=" << result.params_used.tau << " rho=" << result.rho
              << " seed=" << seed << '\n';
    std::cout << "change_points:";
    for (int c : result.change_points) std::cout << ' ' << c;
    if (result.change_points.empty()) std::cout << " (none)";
    std::cout << '\n';

    if (!a.output.empty()) {
        try {
            write_text_file(a.output, fsbs::detection_result_to_json(result) + "\n");
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitUsageError;
        }
    }
    return 0;
}

// -------------------------------------------------------------------- tune

struct TuneArgs {
    std::string input;
    int dim = 1;
    std::string kernel = "gaussian";
    std::string depth = "full";
    double ck = 4.0;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool rescale = false;
    bool plugin = false;
    int h_size = 7;
    int tau_size = 10;
    int r = 2;
    std::string output;
};

int run_tune(const TuneArgs& a) {
    fsbs::FunctionalPanel panel;
    fsbs::KernelFamily family;
    fsbs::DepthMode depth;
    try {
        family = fsbs::kernel_family_from_name(a.kernel);
        depth = depth_from_name(a.depth);
        panel = fsbs::load_panel_file(a.input, a.dim, a.rescale);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsageError;
    }
    const std::uint64_t seed = ensure_seed(a.seed);
    fsbs::CvResult cv;
    try {
        const fsbs::TuningGrid grid =
            fsbs::candidate_grid(panel.T, panel.n, panel.d, a.r, a.h_size, a.tau_size);
        const double hbar_override = a.plugin ? fsbs::plugin_hbar(panel) : 0.0;
        cv = fsbs::cross_validate(panel, grid, depth, seed, hbar_override, a.ck, family, 1e-3,
                                  a.threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitComputeError;
    }
    std::cout << "h=" << cv.h << " hbar=" << cv.hbar << " tau=" << cv.tau << " loss=" << cv.loss
              << " K_hat=" << cv.k_hat << " seed=" << seed << '\n';
    if (!a.output.empty()) {
        try {
            std::ostringstream buf;
            fsbs::write_loss_table(buf, cv.table);
            write_text_file(a.output, buf.str());
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitUsageError;
        }
    }
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string input;
    std::string truth;
    std::string model = "FSBS";
    std::string output;
};

int run_evaluate(const EvaluateArgs& a) {
    std::vector<int> est, truth_cps;
    int T = 0;
    try {
        std::ifstream din(a.input);
        if (!din) throw std::runtime_error("cannot open " + a.input);
        const json dj = json::parse(din);
        est = dj.at("change_points").get<std::vector<int>>();
        std::ifstream tin(a.truth);
        if (!tin) throw std::runtime_error("cannot open " + a.truth);
        const json tj = json::parse(tin);
        truth_cps = tj.at("true_change_points").get<std::vector<int>>();
        T = tj.at("T").get<int>();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsageError;
    }
    const fsbs::EvalRecord rec = fsbs::make_record(est, truth_cps, T);
    const fsbs::SummaryRow row = fsbs::summarize({rec});
    std::cout << "K_true=" << rec.K_true << " K_hat=" << rec.K_hat
              << " abs_kdiff=" << fsbs::k_diff(est, truth_cps)
              << " hausdorff=" << rec.hausdorff_dist << '\n';
    if (!a.output.empty()) {
        try {
            std::ostringstream buf;
            fsbs::write_summary_csv(buf, a.model, row);
            write_text_file(a.output, buf.str());
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitUsageError;
        }
    }
    return 0;
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
    ScenarioFlags flags;
    int reps = 100;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string kernel = "gaussian";
    std::string depth = "full";
    double ck = 4.0;
    bool plugin = false;
    std::string output;
    std::string report;
};

int run_bench(const BenchArgs& a) {
    fsbs::ScenarioSpec spec;
    fsbs::KernelFamily family;
    fsbs::DepthMode depth;
    try {
        spec = a.flags.build();
        family = fsbs::kernel_family_from_name(a.kernel);
        depth = depth_from_name(a.depth);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsageError;
    }
    const std::uint64_t seed = ensure_seed(a.seed);

    struct RepOutcome {
        std::uint64_t seed = 0;
        double h = 0.0, tau = 0.0;
        std::vector<int> change_points;
        fsbs::EvalRecord record;
        double ms = 0.0;
    };
    std::vector<RepOutcome> reps(a.reps);

    try {
        const int workers = a.threads > 0 ? a.threads : fsbs::default_thread_count();
        fsbs::parallel_for(static_cast<std::size_t>(a.reps), workers, [&](std::size_t r) {
            const auto started = std::chrono::steady_clock::now();
            RepOutcome& out = reps[r];
            out.seed = fsbs::Rng::stream_seed(seed, r);
            const fsbs::SimulationOutput sim = fsbs::generate_scenario(spec, out.seed);
            const fsbs::TuningGrid grid =
                fsbs::candidate_grid(sim.panel.T, sim.panel.n, sim.panel.d);
            const double hbar_override = a.plugin ? fsbs::plugin_hbar(sim.panel) : 0.0;
            // replications run in parallel; keep each one single-threaded
            const fsbs::CvResult cv = fsbs::cross_validate(sim.panel, grid, depth, out.seed,
                                                           hbar_override, a.ck, family, 1e-3, 1);
            out.h = cv.h;
            out.tau = cv.tau;
            out.change_points = cv.change_points;
            out.record = fsbs::make_record(cv.change_points, sim.true_change_points, sim.panel.T);
            out.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                               started)
                         .count();
        });
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitComputeError;
    }

    std::vector<fsbs::EvalRecord> records;
    records.reserve(reps.size());
    for (const RepOutcome& r : reps) records.push_back(r.record);
    const fsbs::SummaryRow row = fsbs::summarize(records);

    std::ostringstream csv;
    fsbs::write_summary_csv(csv, "FSBS", row);
    std::cout << csv.str();

    try {
        if (!a.output.empty()) write_text_file(a.output, csv.str());
        if (!a.report.empty()) {
            json reps_json = json::array();
            for (std::size_t r = 0; r < reps.size(); ++r) {
                const RepOutcome& o = reps[r];
                reps_json.push_back({{"rep", r},
                                     {"seed", o.seed},
                                     {"h", o.h},
                                     {"tau", o.tau},
                                     {"change_points", o.change_points},
                                     {"K_hat", o.record.K_hat},
                                     {"hausdorff", o.record.hausdorff_dist},
                                     {"ms", o.ms}});
            }
            const json report{{"command", "bench"},
                              {"scenario", spec.name},
                              {"reps", a.reps},
                              {"seed", seed},
                              {"threads", a.threads},
                              {"kernel", a.kernel},
                              {"depth", a.depth},
                              {"ck", a.ck},
                              {"plugin_hbar", a.plugin},
                              {"basis_scale", spec.options.basis_scale},
                              {"mean_period", spec.options.mean_period},
                              {"s5_negative_exponent", spec.options.s5_negative_exponent},
                              {"summary", summary_to_json(row)},
                              {"replications", reps_json}};
            write_text_file(a.report, report.dump(2) + "\n");
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsageError;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"functional change-point detection: seeded binary segmentation toolkit"};
    // --h is the bandwidth option on `detect`, so help must not claim -h
    app.set_help_flag("--help", "print this help message and exit");
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "generate a synthetic scenario panel");
    sim.flags.attach(sim_cmd);
    sim_cmd->add_option("--seed", sim.seed, "RNG seed (auto-generated when absent)");
    sim_cmd->add_option("--output", sim.output, "panel CSV path")->required();
    sim_cmd->add_option("--truth", sim.truth, "truth JSON path (default: derived from --output)");

    DetectArgs det;
    CLI::App* det_cmd = app.add_subcommand("detect", "detect change-points in a panel CSV");
    det_cmd->add_option("--input", det.input, "panel CSV path")->required();
    det_cmd->add_option("--dim", det.dim, "domain dimension d")->check(CLI::PositiveNumber);
    det_cmd->add_option("--h", det.h, "mean-estimate bandwidth (skips tuning with --tau)");
    det_cmd->add_option("--hbar", det.hbar, "density bandwidth (default: tied to h)");
    det_cmd->add_option("--tau", det.tau, "detection threshold (skips tuning with --h)");
    det_cmd->add_option("--kernel", det.kernel, "gaussian | epanechnikov | uniform");
    det_cmd->add_option("--depth", det.depth, "seeded-interval depth mode: paper | full");
    det_cmd->add_option("--ck", det.ck, "depth constant for --depth paper");
    det_cmd->add_option("--seed", det.seed, "RNG seed (auto-generated when absent)");
    det_cmd->add_option("--threads", det.threads, "worker threads (0 = all cores)");
    det_cmd->add_flag("--auto-tune", det.auto_tune, "cross-validate even when --h/--tau given");
    det_cmd->add_flag("--rescale", det.rescale, "min-max rescale out-of-range coordinates");
    det_cmd->add_flag("--plugin-hbar", det.plugin, "rule-of-thumb density bandwidth");
    det_cmd->add_option("--output", det.output, "write detection JSON here");

    TuneArgs tune;
    CLI::App* tune_cmd = app.add_subcommand("tune", "cross-validate bandwidth and threshold");
    tune_cmd->add_option("--input", tune.input, "panel CSV path")->required();
    tune_cmd->add_option("--dim", tune.dim, "domain dimension d")->check(CLI::PositiveNumber);
    tune_cmd->add_option("--kernel", tune.kernel, "gaussian | epanechnikov | uniform");
    tune_cmd->add_option("--depth", tune.depth, "seeded-interval depth mode: paper | full");
    tune_cmd->add_option("--ck", tune.ck, "depth constant for --depth paper");
    tune_cmd->add_option("--seed", tune.seed, "RNG seed (auto-generated when absent)");
    tune_cmd->add_option("--threads", tune.threads, "worker threads (0 = all cores)");
    tune_cmd->add_flag("--rescale", tune.rescale, "min-max rescale out-of-range coordinates");
    tune_cmd->add_flag("--plugin-hbar", tune.plugin, "rule-of-thumb density bandwidth");
    tune_cmd->add_option("--h-size", tune.h_size, "bandwidth grid size")->check(CLI::PositiveNumber);
    tune_cmd->add_option("--tau-size", tune.tau_size, "threshold grid size")->check(CLI::PositiveNumber);
    tune_cmd->add_option("--r", tune.r, "smoothness order in the rate formulas")->check(CLI::PositiveNumber);
    tune_cmd->add_option("--output", tune.output, "write the loss table CSV here");

    EvaluateArgs ev;
    CLI::App* ev_cmd = app.add_subcommand("evaluate", "score a detection against the truth");
    ev_cmd->add_option("--input", ev.input, "detection JSON path")->required();
    ev_cmd->add_option("--truth", ev.truth, "truth JSON path")->required();
    ev_cmd->add_option("--model", ev.model, "model label for the summary row");
    ev_cmd->add_option("--output", ev.output, "write a one-row summary CSV here");

    BenchArgs bench;
    CLI::App* bench_cmd = app.add_subcommand("bench", "replicate simulate-tune-detect-evaluate");
    bench.flags.attach(bench_cmd);
    bench_cmd->add_option("--reps", bench.reps, "replication count")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--seed", bench.seed, "master seed (auto-generated when absent)");
    bench_cmd->add_option("--threads", bench.threads, "worker threads (0 = all cores)");
    bench_cmd->add_option("--kernel", bench.kernel, "gaussian | epanechnikov | uniform");
    bench_cmd->add_option("--depth", bench.depth, "seeded-interval depth mode: paper | full");
    bench_cmd->add_option("--ck", bench.ck, "depth constant for --depth paper");
    bench_cmd->add_flag("--plugin-hbar", bench.plugin, "rule-of-thumb density bandwidth");
    bench_cmd->add_option("--output", bench.output, "summary CSV path");
    bench_cmd->add_option("--report", bench.report, "detailed JSON report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsageError;
    }

    if (app.got_subcommand(sim_cmd)) return run_simulate(sim);
    if (app.got_subcommand(det_cmd)) return run_detect(det);
    if (app.got_subcommand(tune_cmd)) return run_tune(tune);
    if (app.got_subcommand(ev_cmd)) return run_evaluate(ev);
    if (app.got_subcommand(bench_cmd)) return run_bench(bench);
    std::cerr << "error: no command\n";
    return kExitUsageError;
}
