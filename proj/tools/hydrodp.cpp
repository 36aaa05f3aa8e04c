// hydrodp: least-cost hydro-thermal scheduling from the command line.
//
//   hydrodp solve    <scenario.json> --model single --out results/
//   hydrodp simulate <scenario.json> --policy results/ --sample 1000 --seed 7 --out sim/
//   hydrodp compare  <scenario.json> --out cmp/
//   hydrodp oracle   <scenario.json> --model single
//
// Exit codes: 0 success, 1 validation failure, 2 parse failure,
// 3 budget/applicability refusal.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hydrodp/errors.hpp"
#include "hydrodp/io.hpp"
#include "hydrodp/oracle.hpp"
#include "hydrodp/solve.hpp"

namespace {

using namespace hydrodp;

struct CommonOpts {
    std::string scenario_path;
    std::string model = "single";
    std::string out_dir;
    int refine = 1;
    int aggregate_refine = 4;
    bool allow_high_dimension = false;
};

SolveOptions solve_options(const CommonOpts& c) {
    SolveOptions o;
    o.control_refine = c.refine;
    o.aggregate_refine = c.aggregate_refine;
    o.allow_high_dimension = c.allow_high_dimension;
    return o;
}

int run_solve(const CommonOpts& c) {
    const Scenario scenario = load_scenario(c.scenario_path);
    const SolveResult result = solve(scenario, model_from_name(c.model), solve_options(c));
    if (!c.out_dir.empty()) write_result_bundle(result, c.out_dir);
    for (const std::string& note : result.notes) std::cerr << "note: " << note << "\n";
    std::printf("%s\n", format_g12(result.initial_value).c_str());
    return 0;
}

int run_simulate(const CommonOpts& c, const std::string& policy_dir,
                 const std::string& inflow_csv, int sample_count, std::uint64_t seed,
                 bool have_sample) {
    const Scenario scenario = load_scenario(c.scenario_path);
    const SolveResult solved = read_policy_bundle(scenario, policy_dir);

    std::vector<std::vector<std::vector<double>>> path_inflows; // [path][reservoir][period]
    if (!inflow_csv.empty()) {
        path_inflows.push_back(read_inflow_csv(inflow_csv, scenario.reservoirs.size(),
                                               solved.model == Model::markov));
    } else if (have_sample && !scenario.deterministic()) {
        for (auto& path : sample_inflow_paths(scenario, sample_count, seed))
            path_inflows.push_back({std::move(path)});
    } else if (scenario.deterministic()) {
        // Deterministic scenarios have one path; --sample merely repeats it.
        const int copies = have_sample ? sample_count : 1;
        for (int i = 0; i < copies; ++i) path_inflows.push_back(scenario.det_flow().inflows);
    } else {
        throw ApplicabilityError(
            "simulate: stochastic scenarios need --inflows or --sample/--seed");
    }

    std::vector<RolloutTrace> traces;
    traces.reserve(path_inflows.size());
    for (const auto& inflows : path_inflows) traces.push_back(rollout(scenario, solved, inflows));
    write_simulation_bundle(traces, c.out_dir);

    double mean = 0.0;
    for (const RolloutTrace& t : traces) mean += t.total_cost;
    if (!traces.empty()) mean /= static_cast<double>(traces.size());
    std::printf("paths %zu  mean cost %s\n", traces.size(), format_g12(mean).c_str());
    return 0;
}

int run_compare(const CommonOpts& c) {
    const Scenario scenario = load_scenario(c.scenario_path);
    const SolveOptions opts = solve_options(c);

    const SolveResult agg = solve_aggregate(scenario, opts);

    std::string csv = "model,f1,minimizations_per_stage,wall_ms,rel_gap,status\n";
    const bool tractable = scenario.reservoirs.size() <= 3;
    if (tractable) {
        const bool penalty =
            scenario.costs.sales_enabled() || scenario.costs.demand_penalty.has_value();
        const SolveResult exact = solve_multi(scenario, penalty, opts);
        // Relative gap (aggregate - exact) / exact; blank when the exact
        // optimum is 0 and the ratio is undefined.
        std::string gap = "0";
        if (exact.initial_value != 0.0)
            gap = format_g12((agg.initial_value - exact.initial_value) / exact.initial_value);
        else if (agg.initial_value != 0.0)
            gap = "";
        csv += std::string(model_name(exact.model)) + "," + format_g12(exact.initial_value) +
               "," + std::to_string(exact.minimizations_per_stage.front()) + "," +
               format_g12(exact.wall_ms) + ",,ok\n";
        csv += std::string("aggregate,") + format_g12(agg.initial_value) + "," +
               std::to_string(agg.minimizations_per_stage.front()) + "," +
               format_g12(agg.wall_ms) + "," + gap + ",ok\n";
        std::printf("exact %s  aggregate %s  rel_gap %s\n",
                    format_g12(exact.initial_value).c_str(),
                    format_g12(agg.initial_value).c_str(), gap.empty() ? "n/a" : gap.c_str());
    } else {
        csv += "multi,,,,,skipped: dimensionality\n";
        csv += std::string("aggregate,") + format_g12(agg.initial_value) + "," +
               std::to_string(agg.minimizations_per_stage.front()) + "," +
               format_g12(agg.wall_ms) + ",,ok\n";
        std::printf("aggregate %s  (exact skipped: dimensionality)\n",
                    format_g12(agg.initial_value).c_str());
    }

    std::filesystem::create_directories(c.out_dir);
    std::ofstream out(std::filesystem::path(c.out_dir) / "compare.csv", std::ios::binary);
    out << csv;
    return 0;
}

int run_oracle(const CommonOpts& c, double budget) {
    const Scenario scenario = load_scenario(c.scenario_path);
    const Model model = model_from_name(c.model);
    OracleOptions oopts;
    oopts.budget = budget;
    oopts.control_refine = c.refine;
    oopts.aggregate_refine = c.aggregate_refine;

    const SolveResult dp = solve(scenario, model, solve_options(c));
    const double reference = (model == Model::independent || model == Model::markov)
                                 ? brute_force_stochastic(scenario, oopts)
                                 : brute_force_optimum(scenario, model, oopts).cost;
    const double diff = std::abs(dp.initial_value - reference);
    std::printf("dp       %s\n", format_g12(dp.initial_value).c_str());
    std::printf("oracle   %s\n", format_g12(reference).c_str());
    std::printf("abs_diff %s\n", format_g12(diff).c_str());
    return diff <= 1e-9 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"least-cost scheduling of hydro-thermal power systems"};
    app.require_subcommand(1);

    CommonOpts c;
    std::string policy_dir;
    std::string inflow_csv;
    int sample_count = 0;
    std::uint64_t seed = 0;
    double budget = 1e7;

    const char* model_help = "single|cascade|multi|multi-penalty|aggregate|independent|markov";

    auto* solve_cmd = app.add_subcommand("solve", "solve a scenario and write value/policy tables");
    solve_cmd->add_option("scenario", c.scenario_path, "scenario JSON file")->required();
    solve_cmd->add_option("--model", c.model, model_help)->required();
    solve_cmd->add_option("--out", c.out_dir, "output directory for the result bundle");
    solve_cmd->add_option("--refine", c.refine, "control lattice refinement factor");
    solve_cmd->add_option("--aggregate-refine", c.aggregate_refine,
                          "aggregate sweep refinement factor");
    solve_cmd->add_flag("--allow-high-dimension", c.allow_high_dimension,
                        "permit exact solves beyond 3 reservoirs");

    auto* sim_cmd = app.add_subcommand("simulate", "roll a solved policy forward");
    sim_cmd->add_option("scenario", c.scenario_path, "scenario JSON file")->required();
    sim_cmd->add_option("--policy", policy_dir, "directory written by solve")->required();
    sim_cmd->add_option("--out", c.out_dir, "output directory")->required();
    sim_cmd->add_option("--inflows", inflow_csv, "realized inflow CSV");
    auto* sample_opt = sim_cmd->add_option("--sample", sample_count, "number of sampled paths");
    sim_cmd->add_option("--seed", seed, "sampling seed");

    auto* cmp_cmd = app.add_subcommand("compare", "exact chain solve vs aggregate heuristic");
    cmp_cmd->add_option("scenario", c.scenario_path, "scenario JSON file")->required();
    cmp_cmd->add_option("--out", c.out_dir, "output directory")->required();
    cmp_cmd->add_option("--refine", c.refine, "control lattice refinement factor");
    cmp_cmd->add_option("--aggregate-refine", c.aggregate_refine,
                        "aggregate sweep refinement factor");

    auto* oracle_cmd = app.add_subcommand("oracle", "check a solve against brute force");
    oracle_cmd->add_option("scenario", c.scenario_path, "scenario JSON file")->required();
    oracle_cmd->add_option("--model", c.model, model_help)->required();
    oracle_cmd->add_option("--budget", budget, "max enumerated sequences");
    oracle_cmd->add_option("--refine", c.refine, "control lattice refinement factor");
    oracle_cmd->add_option("--aggregate-refine", c.aggregate_refine,
                           "aggregate sweep refinement factor");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve_cmd->parsed()) return run_solve(c);
        if (sim_cmd->parsed())
            return run_simulate(c, policy_dir, inflow_csv, sample_count, seed,
                                sample_opt->count() > 0);
        if (cmp_cmd->parsed()) return run_compare(c);
        if (oracle_cmd->parsed()) return run_oracle(c, budget);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const BudgetError& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return 3;
    } catch (const ApplicabilityError& e) {
        std::cerr << "not applicable: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
