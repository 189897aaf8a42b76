// brwlab command line: binds JSON configs to the experiment runners and
// emits results.csv / report.json artifacts.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "brwlab/experiments.hpp"
#include "brwlab/parallel.hpp"

using namespace brwlab;
using nlohmann::json;

namespace {

constexpr const char* kConfigSchema = "brwlab-config/1";

constexpr const char* kConfigFields = R"(config file fields (schema "brwlab-config/1"):
  schema                 string, must be "brwlab-config/1"
  law                    "gaussian_dyadic" | "two_config" | "point_mass" | path to a law file
  regime                 "i" | "ii" | "iii" | "iv" | "fixed"
  alpha.kind             "power" (alpha_n = n^p) | "gamma_sqrt" (alpha_n = sqrt(n)/gamma)
  alpha.p, alpha.gamma   schedule parameters
  beta                   inverse temperature for regime "fixed"
  n_list                 increasing generations for tree-level statistics
  L                      barrier depth for spine-walk statistics
  experiments            any of ["partition", "trajectories", "overlap"]
  budget.n_trees         replicate trees per n
  budget.n_spine_walks   walk replicates per spine-walk row
  budget.n_ref_paths     continuum reference sampler paths
  budget.spine_n_list    generations for spine-walk rows
  budget.m_grid          trajectory grid resolution
  budget.k_pairs         overlap pairs per tree (sampling diagnostics)
  budget.max_particles   per-tree population guard
  budget.constants.n_ladder_runs      renewal-table replicates
  budget.constants.n_survival_paths   survival-probability replicates
  budget.constants.n_for_theta        horizon used for the theta fit
  rw.rayleigh_n, rw.n_rayleigh_paths  conditioned-endpoint check budget
  rw.ballot_n_list, rw.ballot_base_paths
  rw.two_barrier_n, rw.n_two_barrier_paths, rw.m_grid
  rw.n_stone_paths, rw.n_excursion_ref
  simulate.n, simulate.n_trees, simulate.beta, simulate.L, simulate.snapshot
  outputs.results_csv, outputs.report_json, outputs.samples_csv

law definition file (schema "brwlab-law/1"):
  name, kind ("table" | builtin name), table[].prob, table[].displacements,
  lattice.span, lattice.offset (optional)
)";

json default_config() {
    return json{
        {"schema", kConfigSchema},
        {"law", "gaussian_dyadic"},
        {"regime", "iv"},
        {"alpha", {{"kind", "power"}, {"p", 0.45}}},
        {"beta", 0.5},
        {"n_list", {10, 12, 14}},
        {"L", 5.0},
        {"experiments", {"partition", "trajectories", "overlap"}},
        {"budget",
         {{"n_trees", 2000},
          {"n_spine_walks", 400000},
          {"n_ref_paths", 100000},
          {"spine_n_list", {256, 1024, 4096}},
          {"m_grid", 256},
          {"k_pairs", 64},
          {"max_particles", 4194304},
          {"constants",
           {{"n_ladder_runs", 20000},
            {"n_survival_paths", 100000},
            {"n_for_theta", 4096}}}}},
        {"rw",
         {{"rayleigh_n", 4096},
          {"n_rayleigh_paths", 2500000},
          {"ballot_n_list", {512, 1024, 2048, 4096}},
          {"ballot_base_paths", 2000000},
          {"two_barrier_n", 4096},
          {"n_two_barrier_paths", 40000000},
          {"m_grid", 256},
          {"n_stone_paths", 100000},
          {"n_excursion_ref", 100000}}},
        {"simulate", {{"n", 12}, {"n_trees", 100}, {"beta", {1.0}}, {"snapshot", false}}},
        {"outputs",
         {{"results_csv", "results.csv"},
          {"report_json", "report.json"},
          {"samples_csv", "samples.csv"}}},
    };
}

struct Cli {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    int threads = hardware_threads();
    std::string out_dir;
    std::string law_override;
    bool dump_default = false;
};

json load_config(const Cli& cli) {
    json cfg = default_config();
    if (!cli.config_path.empty()) {
        std::ifstream in(cli.config_path);
        if (!in) throw std::runtime_error("cannot open config: " + cli.config_path);
        json user;
        in >> user;
        if (user.value("schema", "") != kConfigSchema)
            throw std::runtime_error("config.schema: expected \"" + std::string(kConfigSchema) +
                                     "\"");
        cfg.merge_patch(user);
    }
    if (!cli.law_override.empty()) cfg["law"] = cli.law_override;
    return cfg;
}

std::string out_path(const Cli& cli, const std::string& name) {
    std::string dir = cli.out_dir;
    if (const char* env = std::getenv("BRWLAB_OUT"); env && *env) dir = env;
    if (dir.empty()) return name;
    return dir + "/" + name;
}

RegimeSpec regime_from_config(const json& cfg) {
    RegimeSpec spec;
    const std::string r = cfg.at("regime").get<std::string>();
    if (r == "i")
        spec.regime = Regime::AboveStrong;
    else if (r == "ii")
        spec.regime = Regime::WindowAbove;
    else if (r == "iii")
        spec.regime = Regime::WindowBelow;
    else if (r == "iv")
        spec.regime = Regime::BelowWeak;
    else if (r == "fixed")
        spec.regime = Regime::FixedBeta;
    else
        throw std::runtime_error("config.regime: unknown value '" + r + "'");

    const json& alpha = cfg.at("alpha");
    const std::string kind = alpha.at("kind").get<std::string>();
    if (kind == "power")
        spec.schedule = Schedule::power(alpha.at("p").get<double>());
    else if (kind == "gamma_sqrt")
        spec.schedule = Schedule::gamma_sqrt(alpha.at("gamma").get<double>());
    else
        throw std::runtime_error("config.alpha.kind: unknown value '" + kind + "'");

    spec.beta_fixed = cfg.value("beta", 0.5);
    spec.n_list = cfg.at("n_list").get<std::vector<std::int64_t>>();
    spec.L = cfg.value("L", 5.0);
    spec.validate();
    return spec;
}

Budget budget_from_config(const json& cfg, const Cli& cli) {
    Budget b;
    const json& jb = cfg.at("budget");
    b.n_trees = jb.value("n_trees", b.n_trees);
    b.n_spine_walks = jb.value("n_spine_walks", b.n_spine_walks);
    b.n_ref_paths = jb.value("n_ref_paths", b.n_ref_paths);
    if (jb.contains("spine_n_list"))
        b.spine_n_list = jb["spine_n_list"].get<std::vector<std::int64_t>>();
    b.m_grid = jb.value("m_grid", b.m_grid);
    b.k_pairs = jb.value("k_pairs", b.k_pairs);
    b.max_particles = jb.value("max_particles", b.max_particles);
    const json& jc = jb.at("constants");
    b.constants.n_ladder_runs = jc.value("n_ladder_runs", b.constants.n_ladder_runs);
    b.constants.n_survival_paths = jc.value("n_survival_paths", b.constants.n_survival_paths);
    b.constants.n_for_theta = jc.value("n_for_theta", b.constants.n_for_theta);
    b.threads = cli.threads;
    b.seed = *cli.seed;
    b.constants.threads = cli.threads;
    b.constants.seed = *cli.seed;
    return b;
}

void print_verdicts(const ComparisonReport& report) {
    for (const CriterionResult& c : report.verdicts)
        std::printf("%-32s %-12s observed %.5g threshold %.5g  %s\n", c.name.c_str(),
                    verdict_name(c.verdict).c_str(), c.observed, c.threshold, c.detail.c_str());
}

int cmd_check_law(const Cli& cli, const json& cfg) {
    const ReproductionLaw law = resolve_law(cfg.at("law").get<std::string>());
    const LawDiagnostics d = boundary_check(law, 100000, 1e-9, *cli.seed);
    auto tri = [](TriState t) {
        return t == TriState::Verified ? "verified" : t == TriState::Estimated ? "estimated"
                                                                               : "unknown";
    };
    std::printf("law              %s\n", law.name().c_str());
    std::printf("mode             %s\n", d.exact ? "exact" : "monte-carlo");
    std::printf("mean offspring   %.6f\n", d.mean_offspring);
    std::printf("Psi(1)           %.3e%s\n", d.psi_at_1,
                d.exact ? "" : (" (se " + std::to_string(d.psi_se) + ")").c_str());
    std::printf("Psi'(1)          %.3e\n", d.dpsi_at_1);
    std::printf("sigma^2          %.6f\n", d.sigma_sq);
    std::printf("x log2 moment    %.6f\n", d.x_log2_moment);
    std::printf("H4 / H5          %s / %s\n", tri(d.h4_ok), tri(d.h5_ok));
    std::printf("boundary gate    %s\n", d.boundary_ok ? "pass" : "fail");
    return d.boundary_ok ? 0 : 2;
}

int cmd_calibrate_rw(const Cli& cli, const json& cfg) {
    const ReproductionLaw law = resolve_law(cfg.at("law").get<std::string>());
    RwCalibrationBudget budget;
    const json& jr = cfg.at("rw");
    budget.rayleigh_n = jr.value("rayleigh_n", budget.rayleigh_n);
    budget.n_rayleigh_paths = jr.value("n_rayleigh_paths", budget.n_rayleigh_paths);
    if (jr.contains("ballot_n_list"))
        budget.ballot_n_list = jr["ballot_n_list"].get<std::vector<std::int64_t>>();
    budget.ballot_base_paths = jr.value("ballot_base_paths", budget.ballot_base_paths);
    budget.two_barrier_n = jr.value("two_barrier_n", budget.two_barrier_n);
    budget.n_two_barrier_paths = jr.value("n_two_barrier_paths", budget.n_two_barrier_paths);
    budget.m_grid = jr.value("m_grid", budget.m_grid);
    budget.n_stone_paths = jr.value("n_stone_paths", budget.n_stone_paths);
    budget.n_excursion_ref = jr.value("n_excursion_ref", budget.n_excursion_ref);
    const json& jc = cfg.at("budget").at("constants");
    budget.constants.n_ladder_runs = jc.value("n_ladder_runs", budget.constants.n_ladder_runs);
    budget.constants.n_survival_paths =
        jc.value("n_survival_paths", budget.constants.n_survival_paths);
    budget.constants.n_for_theta = jc.value("n_for_theta", budget.constants.n_for_theta);
    budget.threads = cli.threads;
    budget.seed = *cli.seed;

    const ComparisonReport report = run_rw_calibration(law, budget);
    print_verdicts(report);
    write_results_csv(out_path(cli, cfg["outputs"]["results_csv"].get<std::string>()),
                      report.series);
    write_report_json(out_path(cli, cfg["outputs"]["report_json"].get<std::string>()), report,
                      *cli.seed);
    return exit_code_for(report.verdicts);
}

int cmd_simulate(const Cli& cli, const json& cfg) {
    const ReproductionLaw law = resolve_law(cfg.at("law").get<std::string>());
    const json& js = cfg.at("simulate");
    const std::int64_t n = js.value("n", 12);
    const std::int64_t n_trees = js.value("n_trees", 100);
    const std::vector<double> betas = js.value("beta", std::vector<double>{1.0});
    BarrierSpec barrier;
    if (js.contains("L") && !js["L"].is_null()) barrier = BarrierSpec::lower(js["L"].get<double>());
    barrier.horizon = n;

    std::vector<SampleRow> rows;
    for (std::int64_t t = 0; t < n_trees; ++t) {
        Rng rng = make_stream(*cli.seed, static_cast<std::uint64_t>(t) * 2 + 1);
        const Population pop = grow_tree(law, n, barrier, rng,
                                         cfg["budget"].value("max_particles", 4194304));
        if (js.value("snapshot", false) && t == 0)
            save_population(pop, out_path(cli, "tree0.brwpop"));
        if (!pop.alive || pop.overflowed) {
            rows.push_back({t, n, 0.0, pop.overflowed ? "overflowed" : "extinct", 1.0});
            continue;
        }
        const MinStats mins = min_trajectory_stats(pop);
        for (double beta : betas) {
            const MartingaleReadout r = readout(pop, beta);
            rows.push_back({t, n, beta, "log_W", r.log_W});
            if (beta == betas.front()) {
                rows.push_back({t, n, beta, "D", r.D});
                rows.push_back({t, n, beta, "min_final", mins.final_min});
                rows.push_back({t, n, beta, "n_particles", static_cast<double>(r.n_particles)});
            }
        }
    }
    write_samples_csv(out_path(cli, cfg["outputs"]["samples_csv"].get<std::string>()), rows);
    std::printf("wrote %zu sample rows for %lld trees\n", rows.size(),
                static_cast<long long>(n_trees));
    return 0;
}

int cmd_gibbs(const Cli& cli, const json& cfg) {
    const ReproductionLaw law = resolve_law(cfg.at("law").get<std::string>());
    const json& js = cfg.at("simulate");
    const std::int64_t n = js.value("n", 12);
    const std::int64_t n_trees = js.value("n_trees", 100);
    const std::vector<double> betas = js.value("beta", std::vector<double>{1.0});
    const double sigma_sq = law.psi_second(1.0);
    auto fs = battery::standard();

    const std::int64_t k_pairs = cfg["budget"].value("k_pairs", 64);
    std::vector<SampleRow> rows;
    for (std::int64_t t = 0; t < n_trees; ++t) {
        Rng rng = make_stream(*cli.seed, static_cast<std::uint64_t>(t) * 2 + 1);
        const Population pop = grow_tree(law, n, BarrierSpec::none(), rng);
        if (!pop.alive) continue;
        for (double beta : betas) {
            const GibbsMeasure g = gibbs(pop, beta);
            for (auto& [id, f] : fs) {
                const double v = trajectory_mean(pop, g, f, TrajectoryMode::plain(sigma_sq),
                                                 static_cast<int>(n));
                rows.push_back({t, n, beta, id, v});
            }
            rows.push_back({t, n, beta, "overlap_mass_above_0.1",
                            overlap_mass_above(pop, g, 0.1)});
            const OverlapSample pairs = sample_pairs_overlap(pop, g, k_pairs, rng);
            double mean_overlap = 0.0;
            for (double o : pairs.pairs) mean_overlap += o;
            rows.push_back({t, n, beta, "overlap_pairs_mean",
                            mean_overlap / static_cast<double>(pairs.pairs.size())});
        }
    }
    write_samples_csv(out_path(cli, cfg["outputs"]["samples_csv"].get<std::string>()), rows);
    std::printf("wrote %zu sample rows\n", rows.size());
    return 0;
}

int cmd_overlap(const Cli& cli, const json& cfg) {
    const ReproductionLaw law = resolve_law(cfg.at("law").get<std::string>());
    const RegimeSpec spec = regime_from_config(cfg);
    const Budget budget = budget_from_config(cfg, cli);
    const ScalingSeries series = run_overlap(law, spec, budget);

    ComparisonReport report;
    report.experiment_id = "overlap";
    report.series.push_back(series);
    CriterionResult c;
    c.name = "overlap_median_decreasing";
    c.threshold = 0.0;
    bool decreasing = true;
    for (std::size_t i = 1; i < series.rows.size(); ++i)
        if (series.rows[i].value >= series.rows[i - 1].value) decreasing = false;
    c.observed = series.rows.back().value - series.rows.front().value;
    c.verdict = decreasing ? Verdict::Pass : Verdict::Fail;
    c.detail = "omega_n([0.1,1]) median strictly decreasing along n_list";
    report.verdicts.push_back(std::move(c));

    print_verdicts(report);
    write_results_csv(out_path(cli, cfg["outputs"]["results_csv"].get<std::string>()),
                      report.series);
    write_report_json(out_path(cli, cfg["outputs"]["report_json"].get<std::string>()), report,
                      *cli.seed);
    return exit_code_for(report.verdicts);
}

int cmd_experiment(const Cli& cli, const json& cfg) {
    const ReproductionLaw law = resolve_law(cfg.at("law").get<std::string>());
    const RegimeSpec spec = regime_from_config(cfg);
    const Budget budget = budget_from_config(cfg, cli);
    const auto wanted = cfg.at("experiments").get<std::vector<std::string>>();

    ComparisonReport combined;
    combined.experiment_id = "experiment";
    for (const std::string& which : wanted) {
        if (which == "partition") {
            for (auto& s : run_partition_scaling(law, spec, budget))
                combined.series.push_back(std::move(s));
        } else if (which == "trajectories") {
            ComparisonReport r = run_trajectory_limits(law, spec, budget);
            for (auto& s : r.series) combined.series.push_back(std::move(s));
            for (auto& v : r.verdicts) combined.verdicts.push_back(std::move(v));
        } else if (which == "overlap") {
            combined.series.push_back(run_overlap(law, spec, budget));
        } else {
            throw std::runtime_error("config.experiments: unknown entry '" + which + "'");
        }
    }
    print_verdicts(combined);
    write_results_csv(out_path(cli, cfg["outputs"]["results_csv"].get<std::string>()),
                      combined.series);
    write_report_json(out_path(cli, cfg["outputs"]["report_json"].get<std::string>()), combined,
                      *cli.seed);
    std::printf("wrote %s and %s\n",
                out_path(cli, cfg["outputs"]["results_csv"].get<std::string>()).c_str(),
                out_path(cli, cfg["outputs"]["report_json"].get<std::string>()).c_str());
    return exit_code_for(combined.verdicts);
}

int cmd_report(const Cli& cli, const json& cfg) {
    const std::string path = out_path(cli, cfg["outputs"]["report_json"].get<std::string>());
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report: " + path);
    json j;
    in >> j;
    if (j.value("schema", "") != "brwlab-report/1")
        throw std::runtime_error("report.schema: expected brwlab-report/1");
    int code = 0;
    bool any_inconclusive = false, any_fail = false;
    for (const auto& v : j.at("verdicts")) {
        std::printf("%-32s %-12s observed %.5g threshold %.5g\n",
                    v.at("name").get<std::string>().c_str(),
                    v.at("outcome").get<std::string>().c_str(), v.at("observed").get<double>(),
                    v.at("threshold").get<double>());
        if (v.at("outcome") == "fail") any_fail = true;
        if (v.at("outcome") == "inconclusive") any_inconclusive = true;
    }
    if (any_fail) code = 2;
    else if (any_inconclusive) code = 3;
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"brwlab: a Monte Carlo laboratory for boundary-case branching random walks"};
    app.footer(kConfigFields);
    app.require_subcommand(1);

    Cli cli;
    std::uint64_t seed_arg = 0;
    bool seed_given = false;

    auto add_common = [&](CLI::App* sub, bool needs_seed) {
        sub->add_option("--config", cli.config_path, "JSON config file");
        auto* s = sub->add_option("--seed", seed_arg, "64-bit RNG seed");
        if (needs_seed) s->required();
        sub->add_option("--threads", cli.threads, "worker thread count");
        sub->add_option("--out", cli.out_dir, "output directory (env BRWLAB_OUT overrides)");
        sub->callback([&, s] { seed_given = s->count() > 0; });
        return sub;
    };

    auto* check = add_common(app.add_subcommand("check-law", "boundary-case diagnostics"), true);
    check->add_option("--law", cli.law_override, "law name or law file (overrides config)");
    add_common(app.add_subcommand("calibrate-rw",
                                  "renewal/ladder constants and conditioned-walk checks"),
               true);
    add_common(app.add_subcommand("simulate", "grow trees and dump martingale readouts"), true);
    add_common(app.add_subcommand("gibbs", "per-tree Gibbs trajectory functional exports"), true);
    add_common(app.add_subcommand("overlap", "overlap concentration series"), true);
    auto* exp =
        add_common(app.add_subcommand("experiment", "near-critical regime experiments"), true);
    exp->add_flag("--dump-default-config", cli.dump_default,
                  "print the default config and exit");
    auto* rep = add_common(app.add_subcommand("report", "pretty-print a report.json"), false);
    (void)rep;

    CLI11_PARSE(app, argc, argv);

    try {
        const std::string sub = app.get_subcommands().front()->get_name();
        if (cli.dump_default) {
            std::cout << default_config().dump(2) << '\n';
            return 0;
        }
        if (seed_given) cli.seed = seed_arg;
        const json cfg = load_config(cli);
        if (sub == "check-law") return cmd_check_law(cli, cfg);
        if (sub == "calibrate-rw") return cmd_calibrate_rw(cli, cfg);
        if (sub == "simulate") return cmd_simulate(cli, cfg);
        if (sub == "gibbs") return cmd_gibbs(cli, cfg);
        if (sub == "overlap") return cmd_overlap(cli, cfg);
        if (sub == "experiment") return cmd_experiment(cli, cfg);
        if (sub == "report") return cmd_report(cli, cfg);
        std::fprintf(stderr, "unknown subcommand %s\n", sub.c_str());
        return 1;
    } catch (const ScheduleError& e) {
        std::fprintf(stderr, "schedule-inconsistency: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
